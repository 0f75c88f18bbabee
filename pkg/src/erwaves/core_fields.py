"""Radial grids, field containers, the (mu, omega) <-> (psi, phi) change of
variables, discrete residuals of both forms of the field equations, corner
compatibility of initial-boundary data and the omega energy diagnostic.

Conventions
-----------
``mu = (psi + log r) / 2`` and ``omega = phi``.  In these variables the
system reads::

    psi_tt - (1/r) (r psi_r)_r = exp(2 psi) (phi_t**2 - phi_r**2)
    (exp(2 psi) phi_t)_t - (1/r) (r exp(2 psi) phi_r)_r = 0

All spatial stencils are second-order centered on a uniform grid and are only
evaluated at interior nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline

Profile = Union[Callable[[np.ndarray], np.ndarray], Sequence[float], np.ndarray]


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a map or equation."""


class ShapeError(ValueError):
    """Raised when field arrays do not match the grid or each other."""


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid on the annulus ``r_min <= r <= r_max``.

    Besides the nodes the grid carries the half-node radii used by every flux
    stencil.  They are logarithmic means ``h / log(r_{i+1} / r_i)``, which
    agree with the midpoints to O(h**2) and make the discrete cylindrical
    Laplacian annihilate ``log r`` up to roundoff.
    """

    r_min: float
    r_max: float
    n_nodes: int = 201
    r: np.ndarray = field(init=False, repr=False, compare=False)
    r_half: np.ndarray = field(init=False, repr=False, compare=False)
    log_r: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.r_min > 0:
            raise DomainError("r_min must be > 0, got %r" % (self.r_min,))
        if not self.r_max > self.r_min:
            raise DomainError("r_max must exceed r_min")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 3:
            raise DomainError("n_nodes must be an integer >= 3")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        r = np.linspace(self.r_min, self.r_max, self.n_nodes)
        log_r = np.log(r)
        r_half = (r[1:] - r[:-1]) / (log_r[1:] - log_r[:-1])
        object.__setattr__(self, "r", _readonly(r))
        object.__setattr__(self, "log_r", _readonly(log_r))
        object.__setattr__(self, "r_half", _readonly(r_half))

    @property
    def h(self) -> float:
        return (self.r_max - self.r_min) / (self.n_nodes - 1)

    @property
    def interior(self) -> np.ndarray:
        return self.r[1:-1]

    def refined(self) -> "RadialGrid":
        """Grid with spacing h/2 sharing every node of this one."""
        return RadialGrid(self.r_min, self.r_max, 2 * self.n_nodes - 1)


@dataclass
class FieldState:
    """One time level of the evolution variables.

    ``p = psi_t`` and ``q = exp(2 psi) phi_t``.
    """

    t: float
    psi: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        n = self.psi.shape
        for name in ("p", "phi", "q"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != n:
                raise ShapeError("FieldState.%s has shape %s, expected %s" % (name, arr.shape, n))
            setattr(self, name, arr)

    @property
    def phi_t(self) -> np.ndarray:
        return self.q * np.exp(-2.0 * self.psi)

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.psi.copy(), self.p.copy(), self.phi.copy(), self.q.copy())


@dataclass
class MuOmegaView:
    """Fields in the original metric potentials; time derivatives are
    optional companions."""

    mu: np.ndarray
    omega: np.ndarray
    mu_t: Optional[np.ndarray] = None
    omega_t: Optional[np.ndarray] = None
    t: float = 0.0


class ResidualField(NamedTuple):
    grid: RadialGrid
    values: np.ndarray

    @property
    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.h * np.sum(self.values ** 2)))


def _check_positive(grid):
    if np.any(grid.r <= 0):
        raise DomainError("all radii must be > 0")


def psi_phi_from_mu_omega(view: MuOmegaView, grid: RadialGrid, t: Optional[float] = None) -> FieldState:
    """Map potentials (mu, omega) to the evolution variables.

    Time derivatives, when present on ``view``, become ``p = 2 mu_t`` and
    ``q = exp(2 psi) omega_t``; otherwise p and q are zero.
    """
    _check_positive(grid)
    mu = np.asarray(view.mu, dtype=float)
    omega = np.asarray(view.omega, dtype=float)
    if mu.shape != grid.r.shape or omega.shape != grid.r.shape:
        raise ShapeError("mu/omega must have one value per grid node")
    psi = 2.0 * mu - grid.log_r
    p = np.zeros_like(psi) if view.mu_t is None else 2.0 * np.asarray(view.mu_t, dtype=float)
    q = np.zeros_like(psi) if view.omega_t is None else np.exp(2.0 * psi) * np.asarray(view.omega_t, dtype=float)
    return FieldState(view.t if t is None else t, psi, p, omega.copy(), q)


def mu_omega_from_psi_phi(state: FieldState, grid: RadialGrid) -> MuOmegaView:
    """Inverse of :func:`psi_phi_from_mu_omega`."""
    _check_positive(grid)
    if state.psi.shape != grid.r.shape:
        raise ShapeError("state does not match grid")
    mu = 0.5 * (state.psi + grid.log_r)
    return MuOmegaView(mu, state.phi.copy(), 0.5 * state.p, state.phi_t, state.t)


# -- stencils -------------------------------------------------------------

def cylindrical_laplacian(u: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """(1/r)(r u_r)_r at interior nodes, in flux form."""
    h = grid.h
    flux = grid.r_half * (u[1:] - u[:-1])
    return (flux[1:] - flux[:-1]) / (grid.interior * h * h)


def weighted_flux_divergence(u: np.ndarray, weight: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """(1/r)(r w u_r)_r at interior nodes with w averaged onto half-nodes."""
    h = grid.h
    w_half = 0.5 * (weight[1:] + weight[:-1])
    flux = grid.r_half * w_half * (u[1:] - u[:-1])
    return (flux[1:] - flux[:-1]) / (grid.interior * h * h)


def centered_r(u: np.ndarray, grid: RadialGrid) -> np.ndarray:
    return (u[2:] - u[:-2]) / (2.0 * grid.h)


def _levels(seq, names):
    if len(seq) != 3:
        raise ShapeError("residuals need exactly three consecutive time levels")
    out = []
    for name in names:
        arrays = [np.asarray(getattr(level, name), dtype=float) for level in seq]
        if any(a.shape != arrays[0].shape for a in arrays):
            raise ShapeError("time levels have mismatched lengths for %s" % name)
        out.append(arrays)
    return out


def residual_mu_omega(levels: Sequence[MuOmegaView], grid: RadialGrid, dt: float):
    """Discrete residuals (LHS - RHS) of the (mu, omega) equations at the middle
    level.  Returns ``(omega_residual, mu_residual)``."""
    mu, om = _levels(levels, ("mu", "omega"))
    if mu[1].shape != grid.r.shape:
        raise ShapeError("fields do not match grid")
    r = grid.interior
    h = grid.h
    m0, m1, m2 = (a[1:-1] for a in mu)
    w0, w1, w2 = (a[1:-1] for a in om)
    mu_t = (m2 - m0) / (2.0 * dt)
    om_t = (w2 - w0) / (2.0 * dt)
    mu_tt = (m2 - 2.0 * m1 + m0) / dt ** 2
    om_tt = (w2 - 2.0 * w1 + w0) / dt ** 2
    mu_r = centered_r(mu[1], grid)
    om_r = centered_r(om[1], grid)
    om_rr = (om[1][2:] - 2.0 * om[1][1:-1] + om[1][:-2]) / h ** 2

    res_om = om_tt - om_rr + om_r / r - 4.0 * (mu_r * om_r - om_t * mu_t)
    res_mu = (mu_tt - cylindrical_laplacian(mu[1], grid)
              - np.exp(4.0 * m1) / (2.0 * r ** 2) * (om_t ** 2 - om_r ** 2))
    return ResidualField(grid, res_om), ResidualField(grid, res_mu)


def residual_psi_phi(levels: Sequence, grid: RadialGrid, dt: float):
    """Discrete residuals of the (psi, phi) system at the middle level.

    The phi equation is differenced in conservative form, in time as well as
    in r.  Returns ``(psi_residual, phi_residual)``.
    """
    psi, phi = _levels(levels, ("psi", "phi"))
    if psi[1].shape != grid.r.shape:
        raise ShapeError("fields do not match grid")
    p0, p1, p2 = psi
    f0, f1, f2 = phi
    e0, e1, e2 = (np.exp(2.0 * a) for a in psi)
    sl = slice(1, -1)

    psi_tt = (p2[sl] - 2.0 * p1[sl] + p0[sl]) / dt ** 2
    phi_t = (f2[sl] - f0[sl]) / (2.0 * dt)
    phi_r = centered_r(f1, grid)
    res_psi = psi_tt - cylindrical_laplacian(p1, grid) - e1[sl] * (phi_t ** 2 - phi_r ** 2)

    flux_up = 0.5 * (e2[sl] + e1[sl]) * (f2[sl] - f1[sl])
    flux_dn = 0.5 * (e1[sl] + e0[sl]) * (f1[sl] - f0[sl])
    res_phi = (flux_up - flux_dn) / dt ** 2 - weighted_flux_divergence(f1, e1, grid)
    return ResidualField(grid, res_psi), ResidualField(grid, res_phi)


# -- initial-boundary data ------------------------------------------------

class TimeFunction:
    """A boundary datum of t with first and second derivatives.

    Derivatives fall back to fourth-order central differences when no
    closed form is supplied.
    """

    _STEP = 1e-3

    def __init__(self, f, df=None, d2f=None):
        if not callable(f):
            value = float(f)
            f = lambda t: value  # noqa: E731
            df = df or (lambda t: 0.0)
            d2f = d2f or (lambda t: 0.0)
        self._f, self._df, self._d2f = f, df, d2f

    @classmethod
    def from_table(cls, times, values):
        spline = CubicSpline(np.asarray(times, float), np.asarray(values, float))
        d1, d2 = spline.derivative(1), spline.derivative(2)
        return cls(lambda t: float(spline(t)), lambda t: float(d1(t)), lambda t: float(d2(t)))

    def __call__(self, t):
        return float(self._f(t))

    def derivative(self, t):
        if self._df is not None:
            return float(self._df(t))
        f, e = self._f, self._STEP
        return float((f(t - 2 * e) - 8 * f(t - e) + 8 * f(t + e) - f(t + 2 * e)) / (12 * e))

    def second_derivative(self, t):
        if self._d2f is not None:
            return float(self._d2f(t))
        f, e = self._f, self._STEP
        return float((-f(t + 2 * e) + 16 * f(t + e) - 30 * f(t) + 16 * f(t - e) - f(t - 2 * e)) / (12 * e * e))


def _as_time_function(f):
    return f if isinstance(f, TimeFunction) else TimeFunction(f)


def sample_profile(f: Profile, grid: RadialGrid) -> np.ndarray:
    """Evaluate an initial profile given as a callable of r or as a table with
    one value per node."""
    if callable(f):
        out = np.asarray(f(grid.r), dtype=float)
        if out.ndim == 0:
            out = np.full(grid.n_nodes, float(out))
    else:
        out = np.asarray(f, dtype=float)
        if out.ndim == 0:
            out = np.full(grid.n_nodes, float(out))
    if out.shape != grid.r.shape:
        raise ShapeError("profile table has %d values, grid has %d nodes" % (out.size, grid.n_nodes))
    return out


@dataclass
class InitialBoundaryData:
    """Dirichlet data for (mu, omega) on r = R1, R2 plus Cauchy data at t = 0.

    ``m1, m2, o1, o2`` are functions of t (callables, constants or
    :class:`TimeFunction`); ``m0, m0_t, o0, o0_t`` are profiles of r.
    """

    m1: object = 0.0
    m2: object = 0.0
    m0: Profile = 0.0
    m0_t: Profile = 0.0
    o1: object = 0.0
    o2: object = 0.0
    o0: Profile = 0.0
    o0_t: Profile = 0.0

    def __post_init__(self):
        for name in ("m1", "m2", "o1", "o2"):
            setattr(self, name, _as_time_function(getattr(self, name)))

    @classmethod
    def flat(cls) -> "InitialBoundaryData":
        return cls()


class CompatibilityReport(NamedTuple):
    defects: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.defects.values())

    @property
    def worst(self) -> float:
        return max(self.defects.values())

    def __str__(self):
        items = ", ".join("%s=%.3g" % kv for kv in self.defects.items())
        return "corner defects (tol %.3g): %s" % (self.tol, items)


def compatibility_check(data: InitialBoundaryData, grid: RadialGrid, tol: float = 1e-8) -> CompatibilityReport:
    """Corner defects between boundary data and Cauchy data at t = 0."""
    m0, m0t = sample_profile(data.m0, grid), sample_profile(data.m0_t, grid)
    o0, o0t = sample_profile(data.o0, grid), sample_profile(data.o0_t, grid)
    defects = {
        "m1(0)-m0(R1)": abs(data.m1(0.0) - m0[0]),
        "m2(0)-m0(R2)": abs(data.m2(0.0) - m0[-1]),
        "m1'(0)-m0_t(R1)": abs(data.m1.derivative(0.0) - m0t[0]),
        "m2'(0)-m0_t(R2)": abs(data.m2.derivative(0.0) - m0t[-1]),
        "o1(0)-o0(R1)": abs(data.o1(0.0) - o0[0]),
        "o2(0)-o0(R2)": abs(data.o2(0.0) - o0[-1]),
        "o1'(0)-o0_t(R1)": abs(data.o1.derivative(0.0) - o0t[0]),
        "o2'(0)-o0_t(R2)": abs(data.o2.derivative(0.0) - o0t[-1]),
    }
    return CompatibilityReport(defects, tol)


# -- diagnostics ----------------------------------------------------------

def discrete_energy(omega: np.ndarray, omega_t: np.ndarray, grid: RadialGrid) -> float:
    """Trapezoid value of the integral of omega_t**2 + omega_r**2 over
    [R1, R2].  omega_r is centered inside and one-sided at the two ends."""
    omega_r = np.gradient(np.asarray(omega, dtype=float), grid.h)
    return float(np.trapezoid(np.asarray(omega_t) ** 2 + omega_r ** 2, grid.r))


def state_energy(state: FieldState, grid: RadialGrid) -> float:
    return discrete_energy(state.phi, state.phi_t, grid)
