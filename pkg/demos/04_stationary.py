# Static problem: phi jumps by a across the annulus, psi goes from b to c.
# The closed form via U(phi) against a Newton solve of the discrete equations.
import numpy as np
from scipy.integrate import quad

from erwaves.stationary import StationaryProblem, f_quadratic, oracle_bvp, solve_stationary, theta_check

pr = StationaryProblem(1.0, 2.0, a=1.0, b=0.0, c=0.0)
sol = solve_stationary(pr)
print("M", sol.m, "roots", sol.root_neg, sol.root_pos)
print("U(a) closed form", sol.u_scale)
print("U(a) quadrature ", quad(lambda t: 1 / f_quadratic(t, sol.m, 0.0), 0, 1, epsabs=1e-14)[0])

res = oracle_bvp(pr, n_nodes=401)
print("oracle iterations", res.iterations)
print("max |phi - oracle|", np.abs(res.phi - sol.phi(res.r)).max())
print("max |psi - oracle|", np.abs(res.psi - sol.psi(res.r)).max())
print("theta defect", theta_check(sol))

r = np.linspace(1, 2, 6)
for a in (3.0, -3.0):
    s = solve_stationary(StationaryProblem(1.0, 2.0, a, -1.0, 1.0))
    print(a, np.round(s.phi(r), 5), np.round(s.psi(r), 5))
