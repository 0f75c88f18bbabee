import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erwaves.core_fields import InitialBoundaryData, RadialGrid, TimeFunction, compatibility_check
from erwaves.evolution import (
    BlowUpError, EvolutionConfig, IncompatibleDataError, convergence_study, data_norm, evolve,
    initialize_state, random_compatible_data, rhs, state_norm, step,
)
from erwaves.exact_solutions import (
    ExactFamily, ModeSum, default_family, eval_exact, eval_exact_tt, make_manufactured_data, sample_state,
)

GRID = RadialGrid(1.0, 2.0, 201)


def _flat_state(grid=GRID):
    return initialize_state(InitialBoundaryData.flat(), grid)


# -- config ----------------------------------------------------------------

def test_config_defaults_and_steps():
    cfg = EvolutionConfig(GRID)
    assert cfg.cfl == 0.5 and cfg.snapshot_stride == 10 and cfg.guard == 1e6
    assert cfg.dt == pytest.approx(0.0025)
    assert cfg.n_steps == 400
    times = cfg.step_times()
    assert times[0] == 0.0 and times[-1] == 1.0 and len(times) == 401


def test_step_times_hit_t_end_exactly():
    cfg = EvolutionConfig(GRID, t_end=0.6171)
    assert cfg.step_times()[-1] == 0.6171
    assert np.all(np.diff(cfg.step_times()) <= cfg.dt * (1 + 1e-12))


@pytest.mark.parametrize("kwargs", [dict(cfl=0.0), dict(cfl=1.5), dict(t_end=-1.0), dict(snapshot_stride=0)])
def test_config_rejects(kwargs):
    with pytest.raises(ValueError):
        EvolutionConfig(GRID, **kwargs)


# -- initial state ---------------------------------------------------------

def test_initialize_flat():
    st0 = _flat_state()
    np.testing.assert_allclose(st0.psi, -np.log(GRID.r), atol=1e-15)
    assert np.all(st0.p == 0) and np.all(st0.phi == 0) and np.all(st0.q == 0)


def test_initialize_from_family():
    fam = default_family()
    st0 = initialize_state(make_manufactured_data(fam, GRID), GRID)
    ref = sample_state(fam, GRID, 0.0)
    for name in ("psi", "p", "phi", "q"):
        np.testing.assert_allclose(getattr(st0, name), getattr(ref, name), rtol=0, atol=1e-14)


def test_initialize_unit_mu_rate():
    o0_t = lambda r: np.sin(r)  # noqa: E731
    data = InitialBoundaryData(
        m1=TimeFunction(lambda t: t, lambda t: 1.0, lambda t: 0.0),
        m2=TimeFunction(lambda t: t, lambda t: 1.0, lambda t: 0.0),
        m0_t=1.0,
        o1=TimeFunction(lambda t: math.sin(1.0) * t, lambda t: math.sin(1.0), lambda t: 0.0),
        o2=TimeFunction(lambda t: math.sin(2.0) * t, lambda t: math.sin(2.0), lambda t: 0.0),
        o0_t=o0_t,
    )
    st0 = initialize_state(data, GRID)
    np.testing.assert_array_equal(st0.p, 2.0)
    np.testing.assert_allclose(st0.q, np.sin(GRID.r) / GRID.r ** 2, rtol=1e-14)


def test_incompatible_data_rejected():
    data = InitialBoundaryData(o1=TimeFunction(lambda t: 1.0 + t))
    with pytest.raises(IncompatibleDataError, match="o1'") as info:
        initialize_state(data, GRID)
    assert not info.value.report.passed


# -- rhs -------------------------------------------------------------------

def test_rhs_flat():
    d_psi, d_p, d_phi, d_q = rhs(_flat_state(), GRID, InitialBoundaryData.flat())
    assert np.all(d_phi == 0) and np.all(d_q == 0) and np.all(d_psi == 0)
    assert np.max(np.abs(d_p)) <= GRID.h ** 2


def test_rhs_flux_of_linear_phi():
    z = np.zeros(201)
    from erwaves.core_fields import FieldState
    data = InitialBoundaryData(m1=0.0, m2=0.5 * math.log(2.0), o1=1.0, o2=2.0)
    state = FieldState(0.0, z, z, GRID.r.copy(), z)
    d_q = rhs(state, GRID, data)[3]
    np.testing.assert_allclose(d_q[1:-1], 1.0 / GRID.interior, rtol=0, atol=GRID.h ** 2)


def _rhs_error(n):
    fam = default_family()
    g = RadialGrid(1.0, 2.0, n)
    t = 0.4
    d = rhs(sample_state(fam, g, t), g, make_manufactured_data(fam, g))
    ex = eval_exact(fam, g.r, t)
    psi_tt, phi_tt = eval_exact_tt(fam, g.r, t)
    e2 = np.exp(2 * ex.psi)
    q_t = 2 * ex.psi_t * e2 * ex.phi_t + e2 * phi_tt
    return max(np.max(np.abs(a - b)) for a, b in zip(d, (ex.psi_t, psi_tt, ex.phi_t, q_t)))


def test_rhs_matches_family_at_second_order():
    assert 3.5 <= _rhs_error(101) / _rhs_error(201) <= 4.5


# -- step ------------------------------------------------------------------

@given(st.floats(0.05, 0.5))
@settings(max_examples=10)
def test_step_keeps_flat(cfl):
    cfg = EvolutionConfig(GRID, cfl=cfl)
    data = InitialBoundaryData.flat()
    state = _flat_state()
    for _ in range(5):
        new = step(state, cfg, data)
        assert np.all(new.phi == 0) and np.all(new.q == 0)
        assert np.max(np.abs(new.psi - state.psi)) <= 1e-12
        state = new


def test_one_step_error():
    fam = default_family()
    cfg = EvolutionConfig(GRID)
    data = make_manufactured_data(fam, GRID)
    new = step(sample_state(fam, GRID, 0.3), cfg, data)
    ref = sample_state(fam, GRID, 0.3 + cfg.dt)
    err = max(np.max(np.abs(new.psi - ref.psi)), np.max(np.abs(new.phi - ref.phi)))
    assert err <= 10.0 * (cfg.dt ** 4 + cfg.dt * GRID.h ** 2)


def test_cfl_violation_diverges():
    fam = default_family()
    cfg = EvolutionConfig(GRID)
    data = make_manufactured_data(fam, GRID)
    state = initialize_state(data, GRID)
    diverged = False
    for _ in range(100):
        try:
            state = step(state, cfg, data, dt=10 * GRID.h)
        except BlowUpError:
            diverged = True
            break
        size = np.max(np.abs(np.stack([state.psi, state.phi])))
        if not np.isfinite(size) or size > 1e6:
            diverged = True
            break
    assert diverged


# -- evolve ----------------------------------------------------------------

def test_evolve_flat():
    traj = evolve(InitialBoundaryData.flat(), EvolutionConfig(GRID))
    assert traj.completed and traj.n_steps == 400
    assert max(traj.max_abs_phi) == 0.0
    assert 0.5 * max(traj.max_abs_mu2) <= 1e-6
    assert all(e == 0.0 for e in traj.energy)
    assert [s.t for s in traj.snapshots][:3] == [0.0, pytest.approx(0.025), pytest.approx(0.05)]
    assert traj.final.t == 1.0


def test_evolve_snapshot_stride():
    traj = evolve(InitialBoundaryData.flat(), EvolutionConfig(GRID, t_end=0.1, snapshot_stride=7))
    assert len(traj.times) == 41
    assert len(traj.snapshots) == 1 + 40 // 7 + 1


def test_convergence_order():
    rows = convergence_study(default_family(), 1.0, 2.0, (101, 201, 401))
    assert rows[0][3] is None
    errs = [r[2] for r in rows]
    for a, b in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5
    assert all(r[3] >= 1.9 for r in rows[1:])
    assert errs[-1] <= 1e-4


def test_guard_produces_structured_report():
    fam = default_family()
    traj = evolve(make_manufactured_data(fam, GRID), EvolutionConfig(GRID, guard=0.5))
    assert not traj.completed
    rep = traj.blowup
    assert rep.quantity in ("psi+log r", "p", "phi", "q") and rep.value > 0.5
    assert rep.r == GRID.r[rep.node]
    assert traj.final.t == 0.0
    assert all(np.isfinite(traj.energy))


@pytest.mark.filterwarnings("ignore:theta drives phi")
def test_large_data_reports_blowup():
    fam = ExactFamily(1.0, 0.0, ModeSum.parse("K0_exp:1:700"))
    g = RadialGrid(1.0, 2.0, 41)
    with pytest.warns(RuntimeWarning):
        data = make_manufactured_data(fam, g, t_end=1.0)
    traj = evolve(data, EvolutionConfig(g, t_end=1.0))
    assert not traj.completed
    assert traj.blowup.t > 0 and traj.blowup.value > 1e6
    assert np.all(np.isfinite(traj.final.psi)) and np.all(np.isfinite(traj.final.q))


# -- random data -----------------------------------------------------------

def test_random_data_norm_and_compatibility(rng):
    data = random_compatible_data(GRID, 1e-3, 2.0, rng)
    assert data_norm(data, GRID, 2.0) == pytest.approx(1e-3, rel=1e-9)
    assert compatibility_check(data, GRID, tol=1e-12).passed


def test_random_data_reproducible():
    a = random_compatible_data(GRID, 1e-3, 2.0, np.random.default_rng(7))
    b = random_compatible_data(GRID, 1e-3, 2.0, np.random.default_rng(7))
    np.testing.assert_array_equal(a.m0(GRID.r), b.m0(GRID.r))
    assert a.o2(1.3) == b.o2(1.3)


def test_small_data_single_draw(rng):
    data = random_compatible_data(GRID, 1e-3, 2.0, rng)
    traj = evolve(data, EvolutionConfig(GRID, t_end=2.0))
    assert traj.completed
    assert state_norm(traj.final, GRID) <= 1e-2


def test_state_norm_flat_is_zero():
    assert state_norm(_flat_state(), GRID) <= 1e-12
