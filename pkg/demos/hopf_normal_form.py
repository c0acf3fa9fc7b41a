"""Normal form of a forced planar centre.

With frequency sqrt(2) the forcing never resonates and the cubic normal
form is the autonomous A|A|^2 family.  With frequency 1 resonances appear at
nonzero Fourier modes and the normal form keeps some time dependence.
"""
from pnf import fixtures
from pnf.normalform import check_criteria, normalize

for name in ("hopf", "hopf_1to1"):
    sys = fixtures.bundled(name)
    r = normalize(sys, delta=0.05, p=5)
    print(f"{name}: p={r.p}, normal form degrees {r.N.degrees()}, Fourier modes up to {r.N.kmax}")
    for alpha, c in sorted(r.N.terms.items()):
        if abs(c).max() < 1e-12:
            continue
        k = (c.shape[0] - 1) // 2
        print(f"   X^{alpha}: mode-0 coefficient {c[k].real.round(6)}, |k| <= {k}")
    print(f"   commutation residual {check_criteria(r.N, sys.L):.2e}, "
          f"+t variant {check_criteria(r.N, sys.L, literal=True):.2e}")
    print(f"   certified sup|R| on |X|<=0.05: {r.certified_bound:.3e} "
          f"(estimate {r.estimate:.3e})")
