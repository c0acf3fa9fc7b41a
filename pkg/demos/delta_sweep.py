"""How the remainder shrinks with the radius.

log sup|R| against delta^-b should be a line with slope at most -omega/2.
"""
import math

from pnf import fixtures
from pnf.verify import delta_sweep

sys = fixtures.bundled("uncouple_basic")
sw = delta_sweep(sys, [0.2, 0.1, 0.05, 0.025, 1e-5, 1e-6, 1e-7])
print(f"{'delta':>8} {'p':>3} {'certified':>10} {'sampled':>10} {'estimate':>10}")
for r in sw.rows:
    flag = "" if r.in_range else "  (outside the guaranteed range)"
    print(f"{r.delta:8.1e} {r.p:3d} {r.certified_bound:10.3e} {r.sampled_sup:10.3e} "
          f"{r.estimate:10.3e}{flag}")
print(f"fitted slope {sw.slope:.4f}, -omega/2 = {-sw.omega / 2:.4f}, b = {sw.b:.4f}")
print(f"decay factor between the last two radii: "
      f"{math.log(sw.rows[-1].certified_bound / sw.rows[-2].certified_bound):.1f} in log")
