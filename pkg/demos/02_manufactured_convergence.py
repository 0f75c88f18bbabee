# Closed-form solution gamma = 1, C = 0, theta = J0(r) sin t as a
# manufactured solution.  Halving h should cut the error by about 4.
import numpy as np

from erwaves.core_fields import RadialGrid
from erwaves.evolution import convergence_study
from erwaves.exact_solutions import default_family, eval_exact

fam = default_family()
print(fam, "s =", fam.s, "interval", fam.interval)

g = RadialGrid(1.0, 2.0, 11)
ex = eval_exact(fam, g.r, 1.0)
print("phi(r, 1) ", np.round(ex.phi, 6))
print("identity  ", np.exp(2 * ex.psi) * (ex.phi ** 2 + 2 * ex.phi))   # -1 everywhere

rows = convergence_study(fam, 1.0, 2.0, (51, 101, 201, 401))
print("%5s %10s %12s %8s" % ("n", "h", "err_max", "order"))
for n, h, err, order in rows:
    print("%5d %10.5f %12.4e %8s" % (n, h, err, "" if order is None else "%.3f" % order))
