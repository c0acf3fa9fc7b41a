"""Two quadratically coupled damped oscillators, the first forced with amplitude eps^2.

The parameter is adjoined as a neutral coordinate.  The eps-free part of
the graph map is time independent and equals the graph of the unforced
system; every time-dependent term carries a power of eps.
"""
from pnf import fixtures
from pnf.uncouple import epsilon_split, uncouple

base, eps_terms = fixtures.touze_amabili_parts()
for p in (2, 3, 4, 5):
    sp = epsilon_split(base, eps_terms, p)
    print(f"p={p}: gap to unforced graph {sp.gap:.1e}, eps-free part static: {sp.autonomous_is_static}, "
          f"forcing terms carry eps: {sp.time_dependence_carries_eps}")

sys = fixtures.bundled("touze_amabili")
r = uncouple(sys, 0.05, 4)
print(f"forced system, p=4: {len(r.phi.terms)} graph monomials, "
      f"certified sup|R| on |u0|<=0.05: {r.certified_bound:.3e}")
