# Zero data on the annulus 1 <= r <= 2: the scheme should leave space flat.
# omega and q stay exactly zero, mu only moves at roundoff level.
import numpy as np

from erwaves.core_fields import InitialBoundaryData, RadialGrid
from erwaves.evolution import EvolutionConfig, evolve

grid = RadialGrid(1.0, 2.0, 201)
traj = evolve(InitialBoundaryData.flat(), EvolutionConfig(grid, t_end=1.0))

print("steps      ", traj.n_steps)
print("max|omega| ", max(traj.max_abs_phi))
print("max|mu|    ", 0.5 * max(traj.max_abs_mu2))
print("max energy ", max(traj.energy))

# psi = 2 mu - log r, so the flat state is psi = -log r
print(np.max(np.abs(traj.final.psi + grid.log_r)))
