import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erwaves.core_fields import RadialGrid
from erwaves.evolution import EvolutionConfig, evolve
from erwaves.exact_solutions import default_family, make_manufactured_data
from erwaves.nu_reconstruction import (
    SpaceTimeFields, exactness_defect, integrate_nu, one_form, path_discrepancy,
)


def _static_fields(grid, times, mu, mu_r):
    n_t = len(times)
    z = np.zeros((n_t, grid.n_nodes))
    return SpaceTimeFields(grid.r, np.asarray(times, float), np.tile(mu, (n_t, 1)), z,
                           np.tile(mu_r, (n_t, 1)), z, z, z)


def _family_fields(n, t_end=1.0):
    g = RadialGrid(1.0, 2.0, n)
    return SpaceTimeFields.from_family(default_family(), g, np.arange(0.0, t_end + 1e-12, 0.5 * g.h))


def test_one_form_flat():
    z = np.zeros(5)
    f, g = one_form(z, z, z, z, z, z, np.linspace(1, 2, 5))
    assert np.all(f == 0) and np.all(g == 0)


def test_one_form_half_log():
    r = np.linspace(1, 2, 11)
    z = np.zeros_like(r)
    f, g = one_form(0.5 * np.log(r), z, 0.5 / r, z, z, z, r)
    np.testing.assert_allclose(f, 1.0 / (4.0 * r), rtol=1e-15)
    assert np.all(g == 0)


def test_flat_fields():
    g = RadialGrid(1.0, 2.0, 21)
    fields = _static_fields(g, np.linspace(0, 1, 11), np.zeros(21), np.zeros(21))
    assert np.all(exactness_defect(fields) == 0)
    for path in ("r-then-t", "t-then-r"):
        nu = integrate_nu(fields, path)
        assert np.all(nu.nu == 0) and nu.anchor == 0.0


def test_static_half_log_mu():
    g = RadialGrid(1.0, 2.0, 201)
    fields = _static_fields(g, np.linspace(0, 1, 5), 0.5 * g.log_r, 0.5 / g.r)
    nu = integrate_nu(fields)
    for level in nu.nu:
        np.testing.assert_allclose(level, 0.25 * np.log(g.r), rtol=0, atol=g.h ** 2)


def test_exactness_defect_second_order():
    d1 = np.max(np.abs(exactness_defect(_family_fields(201))))
    d2 = np.max(np.abs(exactness_defect(_family_fields(401))))
    assert 3.5 <= d1 / d2 <= 4.5


def test_corrupted_field_is_not_exact():
    d1 = np.max(np.abs(exactness_defect(_family_fields(101).scaled_omega(1.1))))
    d2 = np.max(np.abs(exactness_defect(_family_fields(201).scaled_omega(1.1))))
    # bounded away from zero and not shrinking
    assert d2 > 1e-3 and d1 / d2 < 1.5


def test_path_independence_second_order():
    g1 = np.max(path_discrepancy(_family_fields(101)))
    g2 = np.max(path_discrepancy(_family_fields(201)))
    assert 3.0 <= g1 / g2 <= 5.0


def test_paths_and_anchor():
    fields = _family_fields(51)
    a, b = integrate_nu(fields, "r-then-t"), integrate_nu(fields, "t-then-r")
    assert a.anchor == 0.0 and b.anchor == 0.0
    # the two paths share the bottom edge and the left edge exactly
    np.testing.assert_allclose(a.nu[0], b.nu[0], rtol=0, atol=1e-15)
    np.testing.assert_allclose(a.nu[:, 0], b.nu[:, 0], rtol=0, atol=1e-15)
    assert a.level_defect.shape == (fields.t.size - 2,)
    with pytest.raises(ValueError):
        integrate_nu(fields, "diagonal")


@given(st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3))
@settings(max_examples=25)
def test_monotone_in_r_without_omega(coeffs):
    g = RadialGrid(1.0, 2.0, 101)
    x = g.r - 1.0
    mu = sum(c * np.sin((k + 1) * np.pi * x) for k, c in enumerate(coeffs))
    mu_r = sum(c * (k + 1) * np.pi * np.cos((k + 1) * np.pi * x) for k, c in enumerate(coeffs))
    nu = integrate_nu(_static_fields(g, [0.0, 0.5, 1.0], mu, mu_r))
    assert np.all(np.diff(nu.nu, axis=1) >= 0)


def test_from_states_matches_family():
    fam = default_family()
    g = RadialGrid(1.0, 2.0, 201)
    traj = evolve(make_manufactured_data(fam, g), EvolutionConfig(g, t_end=0.5, snapshot_stride=1))
    evolved = SpaceTimeFields.from_states(traj.snapshots, g)
    exact = SpaceTimeFields.from_family(fam, g, evolved.t)
    for name in ("mu", "omega", "mu_t", "omega_t", "mu_r", "omega_r"):
        assert np.max(np.abs(getattr(evolved, name) - getattr(exact, name))) < 1e-4


def test_evolved_defect_decreases_under_refinement():
    fam = default_family()
    out = []
    for n in (101, 201):
        g = RadialGrid(1.0, 2.0, n)
        traj = evolve(make_manufactured_data(fam, g), EvolutionConfig(g, t_end=0.5, snapshot_stride=1))
        out.append(np.max(np.abs(exactness_defect(SpaceTimeFields.from_states(traj.snapshots, g)))))
    assert out[1] < out[0] / 2


def test_defect_needs_three_levels():
    g = RadialGrid(1.0, 2.0, 11)
    with pytest.raises(ValueError):
        exactness_defect(_static_fields(g, [0.0, 1.0], np.zeros(11), np.zeros(11)))
