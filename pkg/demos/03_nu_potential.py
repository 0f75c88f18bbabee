# nu is recovered afterwards by integrating F dr + G dt.  On a solution the
# form is closed, so both staircase paths give the same nu up to O(h^2).
import numpy as np

from erwaves.core_fields import RadialGrid
from erwaves.evolution import EvolutionConfig, evolve
from erwaves.exact_solutions import default_family, make_manufactured_data
from erwaves.nu_reconstruction import SpaceTimeFields, exactness_defect, integrate_nu, path_discrepancy

fam = default_family()
for n in (101, 201, 401):
    g = RadialGrid(1.0, 2.0, n)
    fields = SpaceTimeFields.from_family(fam, g, np.arange(0, 1 + 1e-12, 0.5 * g.h))
    print(n, "defect %.3e" % np.abs(exactness_defect(fields)).max(),
          "paths %.3e" % path_discrepancy(fields).max(),
          "corrupted %.3e" % np.abs(exactness_defect(fields.scaled_omega(1.1))).max())

# same thing from an evolved trajectory, derivatives from the stored p and q
g = RadialGrid(1.0, 2.0, 201)
traj = evolve(make_manufactured_data(fam, g), EvolutionConfig(g, t_end=1.0, snapshot_stride=1))
nu = integrate_nu(SpaceTimeFields.from_states(traj.snapshots, g))
print("nu(R2, 1) =", nu.nu[-1, -1], "anchor", nu.anchor)
print("worst level defect", nu.level_defect.max())
