"""Recovery of the third potential nu from a solved (mu, omega) field.

nu is the potential of the 1-form ``F dr + G dt`` with

    F = r (mu_t**2 + mu_r**2) + exp(4 mu) / (4 r) (omega_t**2 + omega_r**2)
    G = 2 r mu_t mu_r + exp(4 mu) / (2 r) omega_r omega_t

which is closed (F_t = G_r) exactly when (mu, omega) solves the field
equations.  nu is fixed by nu(R1, 0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .core_fields import FieldState, RadialGrid

PATHS = ("r-then-t", "t-then-r")


def one_form(mu, omega, mu_r, mu_t, omega_r, omega_t, r):
    """Pointwise components ``(F, G)``."""
    r = np.asarray(r, dtype=float)
    e4 = np.exp(4.0 * np.asarray(mu, dtype=float))
    f = r * (mu_t ** 2 + mu_r ** 2) + e4 / (4.0 * r) * (omega_t ** 2 + omega_r ** 2)
    g = 2.0 * r * mu_t * mu_r + e4 / (2.0 * r) * omega_r * omega_t
    return f, g


@dataclass
class SpaceTimeFields:
    """(mu, omega) and first derivatives on a tensor grid; arrays are indexed
    ``[time level, node]``."""

    r: np.ndarray
    t: np.ndarray
    mu: np.ndarray
    omega: np.ndarray
    mu_r: np.ndarray
    mu_t: np.ndarray
    omega_r: np.ndarray
    omega_t: np.ndarray

    @classmethod
    def from_family(cls, family, grid: RadialGrid, times) -> "SpaceTimeFields":
        """Sample an exact family with analytic derivatives."""
        from .exact_solutions import eval_exact

        times = np.asarray(times, dtype=float)
        ex = eval_exact(family, grid.r[None, :], times[:, None])
        r = grid.r[None, :]
        mu = 0.5 * (ex.psi + np.log(r))
        return cls(grid.r.copy(), times, mu, ex.phi,
                   0.5 * ex.psi_r + 0.5 / r, 0.5 * ex.psi_t, ex.phi_r, ex.phi_t)

    @classmethod
    def from_states(cls, states: Sequence[FieldState], grid: RadialGrid) -> "SpaceTimeFields":
        """Build from stored evolution states.  Time derivatives come from p
        and q; r-derivatives are second-order differences (one-sided at the
        two ends)."""
        psi = np.stack([s.psi for s in states])
        p = np.stack([s.p for s in states])
        phi = np.stack([s.phi for s in states])
        q = np.stack([s.q for s in states])
        times = np.array([s.t for s in states], dtype=float)
        mu = 0.5 * (psi + grid.log_r[None, :])
        mu_r = np.gradient(mu, grid.h, axis=1, edge_order=2)
        omega_r = np.gradient(phi, grid.h, axis=1, edge_order=2)
        return cls(grid.r.copy(), times, mu, phi, mu_r, 0.5 * p, omega_r, q * np.exp(-2.0 * psi))

    def scaled_omega(self, factor: float) -> "SpaceTimeFields":
        """Copy with omega (and its derivatives) multiplied by ``factor``;
        no longer a solution unless factor is +-1."""
        return SpaceTimeFields(self.r, self.t, self.mu, factor * self.omega, self.mu_r, self.mu_t,
                               factor * self.omega_r, factor * self.omega_t)

    def components(self):
        return one_form(self.mu, self.omega, self.mu_r, self.mu_t, self.omega_r, self.omega_t, self.r[None, :])


def exactness_defect(fields: SpaceTimeFields) -> np.ndarray:
    """Centered ``F_t - G_r`` at interior nodes of interior levels, shape
    ``(levels - 2, nodes - 2)``."""
    if fields.t.size < 3 or fields.r.size < 3:
        raise ValueError("exactness defect needs at least 3 levels and 3 nodes")
    f, g = fields.components()
    f_t = np.gradient(f, fields.t, axis=0)[1:-1, 1:-1]
    g_r = np.gradient(g, fields.r, axis=1)[1:-1, 1:-1]
    return f_t - g_r


@dataclass
class NuField:
    r: np.ndarray
    t: np.ndarray
    nu: np.ndarray
    path: str
    level_defect: np.ndarray  # max |F_t - G_r| per interior level

    @property
    def anchor(self) -> float:
        return float(self.nu[0, 0])


def integrate_nu(fields: SpaceTimeFields, path: str = "r-then-t") -> NuField:
    """Trapezoid line integral of the 1-form from (R1, 0) along an
    axis-aligned staircase path."""
    if path not in PATHS:
        raise ValueError("path must be one of %s" % (PATHS,))
    f, g = fields.components()
    if path == "r-then-t":
        along_r = cumulative_trapezoid(f[0], fields.r, initial=0.0)
        along_t = cumulative_trapezoid(g, fields.t, axis=0, initial=0.0)
        nu = along_r[None, :] + along_t
    else:
        along_t = cumulative_trapezoid(g[:, 0], fields.t, initial=0.0)
        along_r = cumulative_trapezoid(f, fields.r, axis=1, initial=0.0)
        nu = along_t[:, None] + along_r
    nu[0, 0] = 0.0
    if fields.t.size >= 3:
        level = np.max(np.abs(exactness_defect(fields)), axis=1)
    else:
        level = np.zeros(0)
    return NuField(fields.r, fields.t, nu, path, level)


def path_discrepancy(fields: SpaceTimeFields) -> np.ndarray:
    """|nu_(r then t) - nu_(t then r)| at every node."""
    return np.abs(integrate_nu(fields, "r-then-t").nu - integrate_nu(fields, "t-then-r").nu)
