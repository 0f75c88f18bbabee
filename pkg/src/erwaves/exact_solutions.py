"""Closed-form solutions of the (psi, phi) system built from solutions of the
linear cylindrical wave equation.

With ``P(phi) = phi**2 + 2 gamma phi + C`` and ``s = sqrt(gamma**2 - C)``, the
relation ``exp(-2 psi) = -P(phi)`` reduces the nonlinear system to the linear
equation ``(1/r)(r theta_r)_r - theta_tt = 0`` for ``theta = F(phi)``, where
``F`` is the monotone map

    F(phi) = -1/(2s) log[(-phi - gamma + s) / (phi + gamma + s)]
           = atanh((phi + gamma) / s) / s,

and ``phi = -gamma + s tanh(s theta)`` on the way back.  Internally everything
is evaluated through ``s * theta`` so no step loses precision near the ends of
the admissible interval ``(-gamma - s, -gamma + s)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import special
from .core_fields import (
    DomainError,
    FieldState,
    InitialBoundaryData,
    MuOmegaView,
    RadialGrid,
    TimeFunction,
    mu_omega_from_psi_phi,
)

MODE_KINDS = ("J0_cos", "J0_sin", "K0_exp")

# samplers warn once phi gets this close (relative to s) to an interval end
EDGE_WARNING = 1e-9


@dataclass(frozen=True)
class Mode:
    kind: str
    k: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in MODE_KINDS:
            raise ValueError("unknown mode kind %r (expected one of %s)" % (self.kind, ", ".join(MODE_KINDS)))
        if not self.k > 0:
            raise ValueError("mode wavenumber must be > 0, got %r" % (self.k,))

    @classmethod
    def parse(cls, text: str) -> "Mode":
        """Parse ``kind:k:amp``."""
        parts = text.strip().split(":")
        if len(parts) != 3:
            raise ValueError("mode %r is not of the form kind:k:amp" % text)
        return cls(parts[0].strip(), float(parts[1]), float(parts[2]))

    def __str__(self):
        return "%s:%r:%r" % (self.kind, self.k, self.amplitude)

    def evaluate(self, r, t):
        """Return theta, theta_r, theta_t, theta_tt for this mode."""
        k, a = self.k, self.amplitude
        kr = k * np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.kind == "K0_exp":
            g = np.exp(k * t)
            radial, radial_r = special.k0(kr), -k * special.k1(kr)
            theta = a * radial * g
            return theta, a * radial_r * g, k * theta, k * k * theta
        radial, radial_r = special.j0(kr), -k * special.j1(kr)
        c, s = np.cos(k * t), np.sin(k * t)
        if self.kind == "J0_cos":
            theta = a * radial * c
            return theta, a * radial_r * c, -a * k * radial * s, -k * k * theta
        theta = a * radial * s
        return theta, a * radial_r * s, a * k * radial * c, -k * k * theta


@dataclass(frozen=True)
class ModeSum:
    """Superposition of separable solutions of the cylindrical wave equation."""

    modes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))

    @classmethod
    def parse(cls, text: str) -> "ModeSum":
        text = text.strip()
        if not text:
            return cls(())
        return cls(tuple(Mode.parse(item) for item in text.split(",")))

    def evaluate(self, r, t):
        r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
        out = [np.zeros(r.shape) for _ in range(4)]
        for mode in self.modes:
            for acc, part in zip(out, mode.evaluate(r, t)):
                acc += part
        return tuple(out)

    def __str__(self):
        return ",".join(str(m) for m in self.modes)


def theta_eval(modes: ModeSum, r, t):
    """theta and its first derivatives ``(theta, theta_r, theta_t)``."""
    if np.any(np.asarray(r) <= 0):
        raise DomainError("theta is only evaluated for r > 0")
    theta, theta_r, theta_t, _ = modes.evaluate(r, t)
    return theta, theta_r, theta_t


@dataclass(frozen=True)
class ExactFamily:
    gamma: float
    c_const: float
    theta: ModeSum = field(default_factory=ModeSum)

    def __post_init__(self):
        if not self.c_const < self.gamma ** 2:
            raise DomainError("family requires C < gamma**2 (got C=%r, gamma=%r)" % (self.c_const, self.gamma))
        if not isinstance(self.theta, ModeSum):
            object.__setattr__(self, "theta", ModeSum(self.theta))

    @property
    def s(self) -> float:
        return float(np.sqrt(self.gamma ** 2 - self.c_const))

    @property
    def interval(self):
        return -self.gamma - self.s, -self.gamma + self.s


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)


def linearizing_map(family: ExactFamily, phi):
    """theta = F(phi); raises DomainError outside the open interval."""
    phi = np.asarray(phi, dtype=float)
    s, g = family.s, family.gamma
    ratio = (phi + g) / s
    if np.any(~(np.abs(ratio) < 1.0)):
        lo, hi = family.interval
        raise DomainError("phi must lie strictly inside (%.17g, %.17g)" % (lo, hi))
    return np.arctanh(ratio) / s


def inverse_map(family: ExactFamily, theta):
    """phi = F^{-1}(theta), total on the real line.

    tanh is used instead of the ratio of exponentials so that large
    |theta| cannot overflow; the result is pinned strictly inside the
    admissible interval even where tanh rounds to +-1.
    """
    theta = np.asarray(theta, dtype=float)
    s, g = family.s, family.gamma
    phi = -g + s * np.tanh(s * theta)
    lo, hi = family.interval
    return np.clip(phi, np.nextafter(lo, np.inf), np.nextafter(hi, -np.inf))


class ExactSample(NamedTuple):
    psi: np.ndarray
    phi: np.ndarray
    psi_r: np.ndarray
    psi_t: np.ndarray
    phi_r: np.ndarray
    phi_t: np.ndarray


def _warn_near_edge(family, st):
    gap = 1.0 - np.abs(np.tanh(st))
    if np.any(gap < EDGE_WARNING):
        warnings.warn(
            "theta drives phi within %.0e*s of the admissible interval end; psi diverges there" % EDGE_WARNING,
            RuntimeWarning,
            stacklevel=3,
        )


def _evaluate(family: ExactFamily, r, t):
    if np.any(np.asarray(r) <= 0):
        raise DomainError("exact solutions are evaluated for r > 0 only")
    theta, th_r, th_t, th_tt = family.theta.evaluate(r, t)
    s, g = family.s, family.gamma
    st = s * theta
    _warn_near_edge(family, st)
    phi = inverse_map(family, theta)
    # dphi/dtheta = -P(phi) = s^2 sech^2(s theta); psi = log cosh(s theta) - log s
    minus_p = (s / np.cosh(np.minimum(np.abs(st), 350.0))) ** 2
    x = s * np.tanh(st)  # phi + gamma
    psi = _log_cosh(st) - np.log(s)
    return theta, th_r, th_t, th_tt, phi, psi, minus_p, x


def eval_exact(family: ExactFamily, r, t) -> ExactSample:
    """Closed-form psi, phi and their first derivatives at (r, t)."""
    _, th_r, th_t, _, phi, psi, minus_p, x = _evaluate(family, r, t)
    return ExactSample(psi, phi, x * th_r, x * th_t, minus_p * th_r, minus_p * th_t)


def eval_exact_tt(family: ExactFamily, r, t):
    """Second time derivatives ``(psi_tt, phi_tt)``."""
    _, _, th_t, th_tt, phi, psi, minus_p, x = _evaluate(family, r, t)
    phi_t = minus_p * th_t
    phi_tt = minus_p * th_tt - 2.0 * x * phi_t * th_t
    psi_tt = phi_t * th_t + x * th_tt
    return psi_tt, phi_tt


def sample_state(family: ExactFamily, grid: RadialGrid, t: float) -> FieldState:
    """The family on the grid as evolution variables.  Note q = theta_t."""
    ex = eval_exact(family, grid.r, t)
    q = np.exp(2.0 * ex.psi) * ex.phi_t
    return FieldState(float(t), ex.psi, ex.psi_t, ex.phi, q)


def sample_mu_omega(family: ExactFamily, grid: RadialGrid, t: float) -> MuOmegaView:
    return mu_omega_from_psi_phi(sample_state(family, grid, t), grid)


class _BoundaryTrace:
    """The family restricted to one radius, with a small cache keyed on t
    (RK stages revisit the same times several times)."""

    def __init__(self, family, radius, size=8):
        self.family, self.radius = family, float(radius)
        self.log_r = float(np.log(radius))
        self.size = size
        self._cache = {}

    def __call__(self, t):
        t = float(t)
        hit = self._cache.get(t)
        if hit is None:
            ex = eval_exact(self.family, self.radius, t)
            psi_tt, phi_tt = eval_exact_tt(self.family, self.radius, t)
            hit = (0.5 * (float(ex.psi) + self.log_r), 0.5 * float(ex.psi_t), 0.5 * float(psi_tt),
                   float(ex.phi), float(ex.phi_t), float(phi_tt))
            if len(self._cache) >= self.size:
                self._cache.pop(next(iter(self._cache)))
            self._cache[t] = hit
        return hit


def _boundary_functions(family, radius):
    trace = _BoundaryTrace(family, radius)
    mu = TimeFunction(lambda t: trace(t)[0], lambda t: trace(t)[1], lambda t: trace(t)[2])
    om = TimeFunction(lambda t: trace(t)[3], lambda t: trace(t)[4], lambda t: trace(t)[5])
    return mu, om


def make_manufactured_data(family: ExactFamily, grid: RadialGrid, t_end: float = 0.0) -> InitialBoundaryData:
    """Initial-boundary data for (mu, omega) cut from an exact solution.

    When ``t_end > 0`` the family is also scanned over ``[0, t_end]`` so the
    edge warning fires before an evolution is attempted.
    """
    if t_end > 0:
        times = np.linspace(0.0, t_end, 33)
        _evaluate(family, grid.r[None, :], times[:, None])
    start = mu_omega_from_psi_phi(sample_state(family, grid, 0.0), grid)
    m1, o1 = _boundary_functions(family, grid.r_min)
    m2, o2 = _boundary_functions(family, grid.r_max)
    return InitialBoundaryData(
        m1=m1, m2=m2, m0=start.mu, m0_t=start.mu_t,
        o1=o1, o2=o2, o0=start.omega, o0_t=start.omega_t,
    )


def default_family() -> ExactFamily:
    """gamma = 1, C = 0, theta = J0(r) sin t."""
    return ExactFamily(1.0, 0.0, ModeSum((Mode("J0_sin", 1.0, 1.0),)))


def random_families(rng: np.random.Generator, count: int, modes: Sequence[Mode] = ()) -> list:
    """Admissible (gamma, C) pairs with s in [0.5, 2], gamma in [-2, 2]."""
    theta = ModeSum(tuple(modes) or (Mode("J0_sin", 1.0, 1.0),))
    out = []
    for _ in range(count):
        gamma = rng.uniform(-2.0, 2.0)
        s = rng.uniform(0.5, 2.0)
        out.append(ExactFamily(gamma, gamma ** 2 - s ** 2, theta))
    return out
