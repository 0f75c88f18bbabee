import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from erwaves.core_fields import (
    DomainError, FieldState, InitialBoundaryData, MuOmegaView, RadialGrid, ShapeError, TimeFunction,
    compatibility_check, cylindrical_laplacian, discrete_energy, mu_omega_from_psi_phi,
    psi_phi_from_mu_omega, residual_mu_omega, residual_psi_phi, sample_profile,
)
from erwaves.exact_solutions import default_family, make_manufactured_data, sample_mu_omega, sample_state

GRID = RadialGrid(1.0, 2.0, 201)


def _static(fields, n):
    return [fields] * n


# -- grid ------------------------------------------------------------------

def test_grid_basics():
    g = RadialGrid(1.0, 2.0, 11)
    assert g.h == pytest.approx(0.1)
    assert g.r[0] == 1.0 and g.r[-1] == 2.0
    assert np.all((g.r_half > g.r[:-1]) & (g.r_half < g.r[1:]))
    assert g.refined().n_nodes == 21
    np.testing.assert_array_equal(g.refined().r[::2], g.r)
    with pytest.raises(ValueError):
        g.r[0] = 3.0


@pytest.mark.parametrize("args", [(0.0, 2.0, 11), (-1.0, 2.0, 11), (2.0, 1.0, 11), (1.0, 2.0, 2)])
def test_grid_rejects(args):
    with pytest.raises(DomainError):
        RadialGrid(*args)


def test_laplacian_annihilates_log():
    # log-mean half-node radii make the flux difference of log r vanish
    assert np.max(np.abs(cylindrical_laplacian(GRID.log_r, GRID))) < 1e-9


# -- change of variables ---------------------------------------------------

def test_flat_potentials_give_minus_log_r():
    st0 = psi_phi_from_mu_omega(MuOmegaView(np.zeros(201), np.zeros(201)), GRID)
    np.testing.assert_allclose(st0.psi, -np.log(GRID.r), rtol=0, atol=1e-15)
    assert np.all(st0.phi == 0)


def test_half_log_mu_gives_zero_psi():
    st0 = psi_phi_from_mu_omega(MuOmegaView(0.5 * np.log(GRID.r), np.zeros(201)), GRID)
    assert np.max(np.abs(st0.psi)) < 1e-15


def test_reverse_examples():
    view = mu_omega_from_psi_phi(FieldState(0.0, -np.log(GRID.r), np.zeros(201), np.zeros(201), np.zeros(201)), GRID)
    assert np.max(np.abs(view.mu)) < 1e-15
    view = mu_omega_from_psi_phi(FieldState(0.0, np.zeros(201), np.zeros(201), np.zeros(201), np.zeros(201)), GRID)
    np.testing.assert_allclose(view.mu, 0.5 * np.log(GRID.r), atol=1e-15)


finite = st.floats(-10.0, 10.0, allow_nan=False)


@given(arrays(float, 201, elements=finite), arrays(float, 201, elements=finite),
       arrays(float, 201, elements=finite), arrays(float, 201, elements=finite))
def test_round_trip_mu_omega(mu, omega, mu_t, omega_t):
    view = MuOmegaView(mu, omega, mu_t, omega_t)
    back = mu_omega_from_psi_phi(psi_phi_from_mu_omega(view, GRID), GRID)
    np.testing.assert_allclose(back.mu, mu, rtol=0, atol=1e-14)
    np.testing.assert_array_equal(back.omega, omega)
    np.testing.assert_allclose(back.mu_t, mu_t, rtol=0, atol=1e-14)
    np.testing.assert_allclose(back.omega_t, omega_t, rtol=1e-14, atol=1e-14)


@given(arrays(float, 201, elements=finite), arrays(float, 201, elements=finite))
def test_round_trip_psi_phi(psi, phi):
    state = FieldState(0.0, psi, np.zeros(201), phi, np.zeros(201))
    back = psi_phi_from_mu_omega(mu_omega_from_psi_phi(state, GRID), GRID)
    np.testing.assert_allclose(back.psi, psi, rtol=0, atol=1e-14)
    np.testing.assert_array_equal(back.phi, phi)


def test_shape_errors():
    with pytest.raises(ShapeError):
        psi_phi_from_mu_omega(MuOmegaView(np.zeros(10), np.zeros(10)), GRID)
    with pytest.raises(ShapeError):
        FieldState(0.0, np.zeros(3), np.zeros(4), np.zeros(3), np.zeros(3))


# -- residuals -------------------------------------------------------------

def test_residuals_vanish_exactly_on_flat_potentials():
    flat = MuOmegaView(np.zeros(201), np.zeros(201))
    res_om, res_mu = residual_mu_omega(_static(flat, 3), GRID, 0.01)
    assert np.all(res_om.values == 0) and np.all(res_mu.values == 0)


def test_residual_flat_in_psi_phi():
    st0 = FieldState(0.0, -GRID.log_r, np.zeros(201), np.zeros(201), np.zeros(201))
    res_psi, res_phi = residual_psi_phi(_static(st0, 3), GRID, 0.01)
    assert np.all(res_phi.values == 0)
    assert res_psi.max_norm <= 10 * GRID.h ** 2


def test_static_half_log_mu():
    view = MuOmegaView(0.5 * GRID.log_r, np.zeros(201))
    _, res_mu = residual_mu_omega(_static(view, 3), GRID, 0.01)
    assert res_mu.max_norm <= GRID.h ** 2


def test_phi_equals_r_flux():
    st0 = FieldState(0.0, np.zeros(201), np.zeros(201), GRID.r.copy(), np.zeros(201))
    _, res_phi = residual_psi_phi(_static(st0, 3), GRID, 0.01)
    np.testing.assert_allclose(res_phi.values, -1.0 / GRID.interior, rtol=0, atol=GRID.h ** 2)


def _residual_norms(kind, n):
    fam = default_family()
    grid = RadialGrid(1.0, 2.0, n)
    dt, t = 0.5 * grid.h, 0.7
    if kind == "mu":
        levels = [sample_mu_omega(fam, grid, t + k * dt) for k in (-1, 0, 1)]
        return [r.max_norm for r in residual_mu_omega(levels, grid, dt)]
    levels = [sample_state(fam, grid, t + k * dt) for k in (-1, 0, 1)]
    return [r.max_norm for r in residual_psi_phi(levels, grid, dt)]


@pytest.mark.parametrize("kind", ["mu", "psi"])
def test_residual_richardson_ratio(kind):
    coarse, fine = _residual_norms(kind, 201), _residual_norms(kind, 401)
    for c, f in zip(coarse, fine):
        assert 3.5 <= c / f <= 4.5


def test_residual_shape_errors():
    a = MuOmegaView(np.zeros(201), np.zeros(201))
    with pytest.raises(ShapeError):
        residual_mu_omega([a, a], GRID, 0.1)
    b = MuOmegaView(np.zeros(200), np.zeros(200))
    with pytest.raises(ShapeError):
        residual_mu_omega([a, b, a], GRID, 0.1)


def test_residual_norms():
    st0 = FieldState(0.0, np.zeros(201), np.zeros(201), GRID.r.copy(), np.zeros(201))
    _, res = residual_psi_phi(_static(st0, 3), GRID, 0.01)
    assert res.max_norm == pytest.approx(1.0 / GRID.r[1], rel=1e-4)
    assert res.l2_norm > 0


# -- data and compatibility ------------------------------------------------

def test_compatibility_zero_data():
    rep = compatibility_check(InitialBoundaryData.flat(), GRID)
    assert rep.passed and rep.worst == 0.0


def test_compatibility_exact_family():
    rep = compatibility_check(make_manufactured_data(default_family(), GRID), GRID, tol=1e-12)
    assert rep.passed, str(rep)


def test_compatibility_constructed_violation():
    data = InitialBoundaryData(m1=TimeFunction(lambda t: t, lambda t: 1.0, lambda t: 0.0))
    rep = compatibility_check(data, GRID)
    assert not rep.passed
    assert rep.defects["m1'(0)-m0_t(R1)"] == 1.0
    assert rep.worst == 1.0


def test_time_function_fallback_derivatives():
    f = TimeFunction(np.sin)
    assert f.derivative(0.3) == pytest.approx(np.cos(0.3), abs=1e-10)
    assert f.second_derivative(0.3) == pytest.approx(-np.sin(0.3), abs=1e-7)
    const = TimeFunction(2.5)
    assert const(1.0) == 2.5 and const.derivative(1.0) == 0.0
    tab = TimeFunction.from_table(np.linspace(0, 1, 51), np.linspace(0, 1, 51) ** 2)
    assert tab.derivative(0.5) == pytest.approx(1.0, abs=1e-6)


def test_sample_profile_forms():
    np.testing.assert_array_equal(sample_profile(3.0, GRID), np.full(201, 3.0))
    np.testing.assert_array_equal(sample_profile(lambda r: 2 * r, GRID), 2 * GRID.r)
    with pytest.raises(ShapeError):
        sample_profile(np.zeros(5), GRID)


# -- energy ----------------------------------------------------------------

def test_energy_examples():
    assert discrete_energy(np.zeros(201), np.zeros(201), GRID) == 0.0
    assert discrete_energy(GRID.r, np.zeros(201), GRID) == pytest.approx(1.0, abs=1e-13)


def test_energy_converges_at_second_order():
    exact = 0.083475019466597513  # int_1^2 cos^2 r dr (mpmath)
    errs = []
    for n in (101, 201):
        g = RadialGrid(1.0, 2.0, n)
        errs.append(abs(discrete_energy(np.sin(g.r), np.zeros(n), g) - exact))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


@given(arrays(float, 51, elements=finite), arrays(float, 51, elements=finite))
def test_energy_nonnegative(omega, omega_t):
    g = RadialGrid(1.0, 2.0, 51)
    assert discrete_energy(omega, omega_t, g) >= 0.0
