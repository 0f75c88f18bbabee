# Small random data that satisfy the corner conditions: the runs should stay
# O(eps).  Then a deliberately unstable time step to see the guard fire.
import numpy as np

from erwaves.core_fields import RadialGrid
from erwaves.evolution import (EvolutionConfig, BlowUpError, evolve, initialize_state,
                               random_compatible_data, state_norm, step)
from erwaves.exact_solutions import default_family, make_manufactured_data

rng = np.random.default_rng(42)
grid = RadialGrid(1.0, 2.0, 201)
for eps in (1e-3, 1e-2, 1e-1):
    data = random_compatible_data(grid, eps, 2.0, rng)
    traj = evolve(data, EvolutionConfig(grid, t_end=2.0))
    print("eps %.0e  completed %s  final norm %.3e" % (eps, traj.completed, state_norm(traj.final, grid)))

cfg = EvolutionConfig(grid)
data = make_manufactured_data(default_family(), grid)
st = initialize_state(data, grid)
for k in range(100):
    try:
        st = step(st, cfg, data, dt=10 * grid.h)
    except BlowUpError as err:
        print("step", k, err)
        break
    print("step", k, "max|phi|", np.abs(st.phi).max())
    if np.abs(st.phi).max() > 1e6:
        break
