"""Method-of-lines evolution of the (psi, phi) system with Dirichlet data.

State vector per node: ``psi``, ``p = psi_t``, ``phi`` and
``q = exp(2 psi) phi_t``.  The phi equation then becomes the flux balance
``q_t = (1/r)(r exp(2 psi) phi_r)_r``.  Time stepping is classical RK4 with
``dt = cfl * h``; boundary values are overwritten from the data at every
stage time and after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core_fields import (
    FieldState,
    InitialBoundaryData,
    RadialGrid,
    TimeFunction,
    compatibility_check,
    cylindrical_laplacian,
    discrete_energy,
    sample_profile,
    weighted_flux_divergence,
)

PSI_LIMIT = 300.0
DEFAULT_GUARD = 1e6


class IncompatibleDataError(ValueError):
    def __init__(self, report):
        super().__init__("initial-boundary data rejected: %s" % (report,))
        self.report = report


class BlowUpError(RuntimeError):
    """Numerical blow-up: exp(2 psi) about to overflow or the state left the
    guard band."""

    def __init__(self, t, node, quantity, value):
        super().__init__("blow-up at t=%.6g, node %d: |%s| = %.3g" % (t, node, quantity, value))
        self.t, self.node, self.quantity, self.value = t, node, quantity, value


@dataclass(frozen=True)
class BlowUpReport:
    t: float
    node: int
    r: float
    quantity: str
    value: float


@dataclass
class EvolutionConfig:
    grid: RadialGrid
    t_end: float = 1.0
    cfl: float = 0.5
    snapshot_stride: int = 10
    guard: float = DEFAULT_GUARD

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1], got %r" % (self.cfl,))
        if not self.t_end >= 0.0:
            raise ValueError("t_end must be >= 0")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")

    @property
    def dt(self) -> float:
        return self.cfl * self.grid.h

    @property
    def n_steps(self) -> int:
        if self.t_end == 0.0:
            return 0
        # a ratio a few ulps above an integer must not add a sliver step
        return max(1, math.ceil(self.t_end / self.dt * (1.0 - 1e-12)))

    def step_times(self) -> np.ndarray:
        """Times after each step, the last one exactly t_end."""
        n = self.n_steps
        times = np.minimum(np.arange(n + 1) * self.dt, self.t_end)
        if n:
            times[-1] = self.t_end
        return times


@dataclass
class Trajectory:
    grid: RadialGrid
    snapshots: List[FieldState] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    max_abs_phi: List[float] = field(default_factory=list)
    max_abs_mu2: List[float] = field(default_factory=list)
    blowup: Optional[BlowUpReport] = None

    @property
    def final(self) -> FieldState:
        return self.snapshots[-1]

    @property
    def completed(self) -> bool:
        return self.blowup is None

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1


def _pack(state):
    return np.stack([state.psi, state.p, state.phi, state.q])


def _unpack(t, y):
    return FieldState(t, y[0].copy(), y[1].copy(), y[2].copy(), y[3].copy())


def _boundary_values(t, data, grid):
    """Rows psi, p, phi, q at the two boundary nodes."""
    out = np.empty((4, 2))
    for j, (m, o, log_r) in enumerate(((data.m1, data.o1, grid.log_r[0]), (data.m2, data.o2, grid.log_r[-1]))):
        psi = 2.0 * m(t) - log_r
        out[:, j] = (psi, 2.0 * m.derivative(t), o(t), math.exp(2.0 * psi) * o.derivative(t))
    return out


def _boundary_rates(t, data, grid, y):
    out = np.empty((4, 2))
    for j, (m, o, col) in enumerate(((data.m1, data.o1, 0), (data.m2, data.o2, -1))):
        dm, do = m.derivative(t), o.derivative(t)
        e2 = math.exp(2.0 * y[0, col])
        out[:, j] = (2.0 * dm, 2.0 * m.second_derivative(t), do, e2 * (4.0 * dm * do + o.second_derivative(t)))
    return out


def _impose(t, y, data, grid):
    b = _boundary_values(t, data, grid)
    y[:, 0] = b[:, 0]
    y[:, -1] = b[:, 1]
    return y


def _check_psi(t, psi):
    i = int(np.argmax(np.abs(psi)))
    if not np.isfinite(psi[i]) or abs(psi[i]) > PSI_LIMIT:
        raise BlowUpError(t, i, "psi", float(abs(psi[i])))


def _rhs_array(t, y, grid, data):
    psi, p, phi, q = y
    _check_psi(t, psi)
    e2 = np.exp(2.0 * psi)
    em2 = 1.0 / e2
    sl = slice(1, -1)
    dy = np.empty_like(y)
    phi_r = (phi[2:] - phi[:-2]) / (2.0 * grid.h)
    phi_t = q[sl] * em2[sl]
    dy[0, sl] = p[sl]
    dy[1, sl] = cylindrical_laplacian(psi, grid) + e2[sl] * (phi_t ** 2 - phi_r ** 2)
    dy[2, sl] = phi_t
    dy[3, sl] = weighted_flux_divergence(phi, e2, grid)
    rates = _boundary_rates(t, data, grid, y)
    dy[:, 0] = rates[:, 0]
    dy[:, -1] = rates[:, 1]
    return dy


def rhs(state: FieldState, grid: RadialGrid, data: InitialBoundaryData):
    """Time derivatives ``(psi_dot, p_dot, phi_dot, q_dot)`` of a state.

    Boundary entries are the rates of the Dirichlet data mapped through
    the change of variables.
    """
    dy = _rhs_array(state.t, _pack(state), grid, data)
    return dy[0], dy[1], dy[2], dy[3]


def _rk4(t, y, dt, grid, data):
    k1 = _rhs_array(t, y, grid, data)
    y2 = _impose(t + 0.5 * dt, y + 0.5 * dt * k1, data, grid)
    k2 = _rhs_array(t + 0.5 * dt, y2, grid, data)
    y3 = _impose(t + 0.5 * dt, y + 0.5 * dt * k2, data, grid)
    k3 = _rhs_array(t + 0.5 * dt, y3, grid, data)
    y4 = _impose(t + dt, y + dt * k3, data, grid)
    k4 = _rhs_array(t + dt, y4, grid, data)
    y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _impose(t + dt, y_new, data, grid)


def step(state: FieldState, config: EvolutionConfig, data: InitialBoundaryData, dt: Optional[float] = None) -> FieldState:
    """One RK4 step.  ``dt`` defaults to ``config.dt``; passing a larger value
    is how the CFL violation is demonstrated."""
    dt = config.dt if dt is None else float(dt)
    y = _rk4(state.t, _pack(state), dt, config.grid, data)
    return _unpack(state.t + dt, y)


def initialize_state(data: InitialBoundaryData, grid: RadialGrid, tol: float = 1e-8) -> FieldState:
    report = compatibility_check(data, grid, tol)
    if not report.passed:
        raise IncompatibleDataError(report)
    m0, m0_t = sample_profile(data.m0, grid), sample_profile(data.m0_t, grid)
    o0, o0_t = sample_profile(data.o0, grid), sample_profile(data.o0_t, grid)
    psi = 2.0 * m0 - grid.log_r
    return FieldState(0.0, psi, 2.0 * m0_t, o0.copy(), np.exp(2.0 * psi) * o0_t)


def _guard_check(t, y, grid, guard):
    mags = np.abs(np.stack([y[0] + grid.log_r, y[1], y[2], y[3]]))
    if not np.all(np.isfinite(mags)):
        row, node = np.argwhere(~np.isfinite(mags))[0]
        raise BlowUpError(t, int(node), ("psi+log r", "p", "phi", "q")[row], float("inf"))
    row, node = np.unravel_index(np.argmax(mags), mags.shape)
    if mags[row, node] > guard:
        raise BlowUpError(t, int(node), ("psi+log r", "p", "phi", "q")[row], float(mags[row, node]))
    _check_psi(t, y[0])


def _record(traj, t, y, grid):
    phi_t = y[3] * np.exp(-2.0 * y[0])
    traj.times.append(float(t))
    traj.energy.append(discrete_energy(y[2], phi_t, grid))
    traj.max_abs_phi.append(float(np.max(np.abs(y[2]))))
    traj.max_abs_mu2.append(float(np.max(np.abs(y[0] + grid.log_r))))


def evolve(data: InitialBoundaryData, config: EvolutionConfig) -> Trajectory:
    """Integrate from t = 0 to ``config.t_end``.

    A blow-up ends the run early; the trajectory then carries a
    :class:`BlowUpReport` and the last good state as its final snapshot.
    """
    grid = config.grid
    state = initialize_state(data, grid)
    traj = Trajectory(grid)
    y = _impose(0.0, _pack(state), data, grid)
    traj.snapshots.append(_unpack(0.0, y))
    _record(traj, 0.0, y, grid)
    times = config.step_times()
    for n in range(1, len(times)):
        t_prev, t_next = times[n - 1], times[n]
        try:
            y_next = _rk4(t_prev, y, t_next - t_prev, grid, data)
            _guard_check(t_next, y_next, grid, config.guard)
        except BlowUpError as err:
            traj.blowup = BlowUpReport(err.t, err.node, float(grid.r[err.node]), err.quantity, err.value)
            if traj.snapshots[-1].t != t_prev:
                traj.snapshots.append(_unpack(t_prev, y))
            return traj
        y = y_next
        _record(traj, t_next, y, grid)
        if n % config.snapshot_stride == 0 or n == len(times) - 1:
            traj.snapshots.append(_unpack(float(t_next), y))
    return traj


# -- diagnostics and data generators -------------------------------------

def state_norm(state: FieldState, grid: RadialGrid) -> float:
    """sup|mu| + sup|mu_t| + sup|mu_r| + the same three for omega."""
    mu = 0.5 * (state.psi + grid.log_r)
    omega = state.phi
    parts = (
        mu, 0.5 * state.p, np.gradient(mu, grid.h, edge_order=2),
        omega, state.phi_t, np.gradient(omega, grid.h, edge_order=2),
    )
    return float(sum(np.max(np.abs(a)) for a in parts))


def _sup_norm(values, spacing, order):
    total = np.max(np.abs(values))
    for _ in range(order):
        values = np.gradient(values, spacing, edge_order=2)
        total += np.max(np.abs(values))
    return float(total)


class _SineProfile:
    """a (1 - x) + b x + sum_j c_j sin(j pi x) with x = (r - R1)/(R2 - R1)."""

    def __init__(self, r1, r2, left, right, coeffs):
        self.r1, self.length = r1, r2 - r1
        self.left, self.right = left, right
        self.coeffs = np.asarray(coeffs, dtype=float)

    def __call__(self, r):
        x = (np.asarray(r, dtype=float) - self.r1) / self.length
        j = np.arange(1, self.coeffs.size + 1)
        waves = np.sin(np.pi * np.multiply.outer(x, j)) @ self.coeffs
        return self.left * (1.0 - x) + self.right * x + waves


def _boundary_signal(value, slope, bend, freq):
    """value + slope sin t + bend (1 - cos(freq t)): value and slope at t = 0
    are pinned, the rest is free."""
    return TimeFunction(
        lambda t: value + slope * math.sin(t) + bend * (1.0 - math.cos(freq * t)),
        lambda t: slope * math.cos(t) + bend * freq * math.sin(freq * t),
        lambda t: -slope * math.sin(t) + bend * freq * freq * math.cos(freq * t),
    )


def data_norm(data: InitialBoundaryData, grid: RadialGrid, t_end: float, samples: int = 2001) -> float:
    """C2 norms of the boundary data on [0, t_end] and of the initial
    profiles, plus C1 norms of the initial rates (sampled)."""
    t = np.linspace(0.0, max(t_end, 1e-12), samples)
    dt = t[1] - t[0]
    fine = RadialGrid(grid.r_min, grid.r_max, samples)
    total = 0.0
    for f in (data.m1, data.m2, data.o1, data.o2):
        total += _sup_norm(np.array([f(x) for x in t]), dt, 2)
    for prof, order in ((data.m0, 2), (data.m0_t, 1), (data.o0, 2), (data.o0_t, 1)):
        vals = sample_profile(prof, fine) if callable(prof) else np.interp(fine.r, grid.r, sample_profile(prof, grid))
        total += _sup_norm(vals, fine.h, order)
    return total


def random_compatible_data(grid: RadialGrid, eps: float, t_end: float, rng: np.random.Generator, modes: int = 3) -> InitialBoundaryData:
    """Smooth random data satisfying every corner condition, scaled so that
    :func:`data_norm` equals ``eps``."""

    def draw():
        ends = rng.normal(size=4)  # f(R1), f(R2), f_t(R1), f_t(R2)
        prof = _SineProfile(grid.r_min, grid.r_max, ends[0], ends[1], rng.normal(size=modes) / np.arange(1, modes + 1) ** 2)
        rate = _SineProfile(grid.r_min, grid.r_max, ends[2], ends[3], rng.normal(size=modes) / np.arange(1, modes + 1) ** 2)
        bends = rng.normal(size=2)
        freqs = rng.uniform(0.5, 2.0, size=2)
        return ends, prof, rate, bends, freqs

    def build(scale, parts):
        (me, mp, mr, mb, mf), (oe, op, orate, ob, of) = parts
        sc = lambda p: _SineProfile(p.r1, p.r1 + p.length, scale * p.left, scale * p.right, scale * p.coeffs)  # noqa: E731
        return InitialBoundaryData(
            m1=_boundary_signal(scale * me[0], scale * me[2], scale * mb[0], mf[0]),
            m2=_boundary_signal(scale * me[1], scale * me[3], scale * mb[1], mf[1]),
            m0=sc(mp), m0_t=sc(mr),
            o1=_boundary_signal(scale * oe[0], scale * oe[2], scale * ob[0], of[0]),
            o2=_boundary_signal(scale * oe[1], scale * oe[3], scale * ob[1], of[1]),
            o0=sc(op), o0_t=sc(orate),
        )

    parts = (draw(), draw())
    raw = build(1.0, parts)
    return build(eps / data_norm(raw, grid, t_end), parts)


def convergence_study(family, r1: float, r2: float, levels, t_end: float = 1.0, cfl: float = 0.5):
    """Evolve manufactured data on each grid level and compare with the
    closed form at ``t_end``.

    Returns rows ``(n, h, err_max, order_estimate)``; the first row has no
    order estimate (None).  ``err_max`` is the larger of the psi and phi
    max-norm errors.
    """
    from .exact_solutions import eval_exact, make_manufactured_data

    rows = []
    prev = None
    for n in levels:
        grid = RadialGrid(r1, r2, int(n))
        cfg = EvolutionConfig(grid, t_end=t_end, cfl=cfl, snapshot_stride=10 ** 9)
        traj = evolve(make_manufactured_data(family, grid, t_end), cfg)
        if not traj.completed:
            raise BlowUpError(traj.blowup.t, traj.blowup.node, traj.blowup.quantity, traj.blowup.value)
        ex = eval_exact(family, grid.r, traj.final.t)
        err = max(np.max(np.abs(traj.final.psi - ex.psi)), np.max(np.abs(traj.final.phi - ex.phi)))
        order = None if prev is None else math.log(prev[1] / err) / math.log(prev[0] / grid.h)
        rows.append((int(n), grid.h, float(err), order))
        prev = (grid.h, err)
    return rows
