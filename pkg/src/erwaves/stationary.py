"""The stationary two-point problem

    (1/r)(r exp(2 psi) phi')' = 0,      phi(R1) = phi1, phi(R2) = phi1 + a
    (1/r)(r psi')' = exp(2 psi) phi'**2, psi(R1) = b,    psi(R2) = c

solved in closed form, plus a finite-difference Newton solver used as an
independent check.

For a > 0 the closed form goes through ``f(phi) = -phi**2 + M phi + exp(-2b)``
with ``M = a + (exp(-2c) - exp(-2b)) / a``: ``exp(-2 psi) = f(phi)`` and
``u = U(phi) = int_0^phi dt / f(t)`` satisfies ``(r u')' = 0``.  f has one
negative and one positive root and ``f(0) = exp(-2b)``, ``f(a) = exp(-2c)``
are both positive, so ``root_neg < 0 < a < root_pos``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .core_fields import DomainError


@dataclass(frozen=True)
class StationaryProblem:
    r1: float
    r2: float
    a: float
    b: float
    c: float
    phi1_shift: float = 0.0

    def __post_init__(self):
        if not self.r1 > 0:
            raise DomainError("r1 must be > 0")
        if not self.r2 > self.r1:
            raise DomainError("r2 must exceed r1")


def m_coeff(a: float, b: float, c: float) -> float:
    if a == 0:
        raise DomainError("M is undefined for a = 0 (flat branch)")
    return a + (math.exp(-2.0 * c) - math.exp(-2.0 * b)) / a


def roots_from_m(m: float, b: float):
    """Roots of -phi**2 + M phi + exp(-2b), without cancellation."""
    e = math.exp(-2.0 * b)
    disc = math.sqrt(m * m + 4.0 * e)
    if m >= 0:
        root_pos = 0.5 * (m + disc)
        root_neg = -e / root_pos
    else:
        root_neg = 0.5 * (m - disc)
        root_pos = -e / root_neg
    return root_neg, root_pos


def roots(a: float, b: float, c: float):
    """``(root_neg, root_pos)`` of f for a > 0."""
    if not a > 0:
        raise DomainError("roots are defined for a > 0")
    return roots_from_m(m_coeff(a, b, c), b)


def f_quadratic(phi, m, b):
    phi = np.asarray(phi, dtype=float)
    return -phi * phi + m * phi + math.exp(-2.0 * b)


def u_transform(phi, m: float, b: float, a: Optional[float] = None):
    """U(phi) by partial fractions over the two roots of f."""
    phi = np.asarray(phi, dtype=float)
    lo, hi = roots_from_m(m, b)
    upper = hi if a is None else a
    bad = (phi < 0) | (phi > upper) if a is not None else (phi < 0) | (phi >= hi)
    if np.any(bad):
        raise DomainError("U is evaluated for 0 <= phi <= a < root_pos only")
    return (np.log1p(phi / -lo) - np.log1p(-phi / hi)) / (hi - lo)


def u_inverse(u, m: float, b: float, a: float):
    """Inverse of :func:`u_transform` on [0, U(a)], clamped to [0, a]."""
    u = np.asarray(u, dtype=float)
    lo, hi = roots_from_m(m, b)
    y = (hi - lo) * u
    phi = np.expm1(y) / (1.0 / -lo + np.exp(y) / hi)
    return np.clip(phi, 0.0, a)


@dataclass(frozen=True)
class StationarySolution:
    problem: StationaryProblem
    m: Optional[float]
    root_neg: Optional[float]
    root_pos: Optional[float]
    theta2: Optional[float]
    u_scale: float

    @property
    def sign(self) -> float:
        return -1.0 if self.problem.a < 0 else 1.0

    def _log_ratio(self, r):
        pr = self.problem
        r = np.asarray(r, dtype=float)
        return np.log(r / pr.r1) / math.log(pr.r2 / pr.r1)

    def u(self, r):
        return self.u_scale * self._log_ratio(r)

    def phi_normalized(self, r):
        """phi - phi1_shift, i.e. the solution with phi(R1) = 0."""
        pr = self.problem
        r = np.asarray(r, dtype=float)
        if pr.a == 0:
            return np.zeros_like(r)
        amp = abs(pr.a)
        phi = u_inverse(self.u(r), self.m, pr.b, amp)
        phi = np.where(r == pr.r1, 0.0, np.where(r == pr.r2, amp, phi))
        return self.sign * phi

    def phi(self, r):
        return self.phi_normalized(r) + self.problem.phi1_shift

    def psi(self, r):
        pr = self.problem
        if pr.a == 0:
            return pr.b + (pr.c - pr.b) * self._log_ratio(r)
        # f is even under the a -> -a symmetry once evaluated on |phi|
        return -0.5 * np.log(f_quadratic(np.abs(self.phi_normalized(r)), self.m, pr.b))

    def theta(self, r):
        """phi**2/2 + (exp(-2 psi) - exp(-2b))/2 on the normalized phi."""
        phi = self.phi_normalized(r)
        return 0.5 * phi ** 2 + 0.5 * (np.exp(-2.0 * self.psi(r)) - math.exp(-2.0 * self.problem.b))


def solve_stationary(problem: StationaryProblem) -> StationarySolution:
    a, b, c = problem.a, problem.b, problem.c
    if a == 0:
        return StationarySolution(problem, None, None, None, None, 0.0)
    amp = abs(a)
    m = m_coeff(amp, b, c)
    lo, hi = roots_from_m(m, b)
    theta2 = 0.5 * amp ** 2 + 0.5 * math.exp(-2.0 * c) - 0.5 * math.exp(-2.0 * b)
    u_scale = float(u_transform(amp, m, b, amp))
    return StationarySolution(problem, m, lo, hi, theta2, u_scale)


def theta_check(solution: StationarySolution, r=None) -> float:
    """max |theta(r) - (theta2 / a) phi(r)| on a dense sample of [R1, R2].

    Uses the signed a and normalized phi, so it applies to both signs."""
    pr = solution.problem
    if pr.a == 0:
        raise DomainError("theta relation needs a != 0")
    if r is None:
        r = np.linspace(pr.r1, pr.r2, 2001)
    theta2 = 0.5 * pr.a ** 2 + 0.5 * math.exp(-2.0 * pr.c) - 0.5 * math.exp(-2.0 * pr.b)
    return float(np.max(np.abs(solution.theta(r) - theta2 / pr.a * solution.phi_normalized(r))))


# -- finite-difference oracle ---------------------------------------------

class OracleFailure(RuntimeError):
    def __init__(self, message, iterations, residual):
        super().__init__(message)
        self.iterations, self.residual = iterations, residual


@dataclass
class OracleResult:
    r: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    iterations: int
    residual: float
    extrapolated: bool


def _fd_residual(x, r, h):
    """Centered residuals of both equations at interior nodes; midpoint
    radii carry the fluxes."""
    n = r.size
    phi, psi = x[:n], x[n:]
    rp = 0.5 * (r[1:-1] + r[2:])
    rm = 0.5 * (r[1:-1] + r[:-2])
    ri = r[1:-1]
    e = np.exp(2.0 * psi)
    ep = 0.5 * (e[1:-1] + e[2:])
    em = 0.5 * (e[1:-1] + e[:-2])
    dphi_p = phi[2:] - phi[1:-1]
    dphi_m = phi[1:-1] - phi[:-2]
    res_phi = (rp * ep * dphi_p - rm * em * dphi_m) / (ri * h * h)
    d = (phi[2:] - phi[:-2]) / (2.0 * h)
    res_psi = (rp * (psi[2:] - psi[1:-1]) - rm * (psi[1:-1] - psi[:-2])) / (ri * h * h) - e[1:-1] * d * d
    return res_phi, res_psi


def _fd_jacobian(x, r, h):
    """Sparse Jacobian over all 2n unknowns; boundary rows are identity."""
    n = r.size
    phi, psi = x[:n], x[n:]
    i = np.arange(1, n - 1)
    rp = 0.5 * (r[i] + r[i + 1])
    rm = 0.5 * (r[i] + r[i - 1])
    s = 1.0 / (r[i] * h * h)
    e = np.exp(2.0 * psi)
    ep = 0.5 * (e[i] + e[i + 1])
    em = 0.5 * (e[i] + e[i - 1])
    dp = phi[i + 1] - phi[i]
    dm = phi[i] - phi[i - 1]
    d = (phi[i + 1] - phi[i - 1]) / (2.0 * h)

    rows, cols, vals = [], [], []

    def put(row, col, val):
        rows.append(row)
        cols.append(col)
        vals.append(val)

    # phi equation, rows i
    put(i, i - 1, s * rm * em)
    put(i, i, -s * (rp * ep + rm * em))
    put(i, i + 1, s * rp * ep)
    put(i, n + i - 1, -s * rm * e[i - 1] * dm)
    put(i, n + i, s * e[i] * (rp * dp - rm * dm))
    put(i, n + i + 1, s * rp * e[i + 1] * dp)
    # psi equation, rows n + i
    put(n + i, n + i - 1, s * rm)
    put(n + i, n + i, -s * (rp + rm) - 2.0 * e[i] * d * d)
    put(n + i, n + i + 1, s * rp)
    put(n + i, i - 1, e[i] * d / h)
    put(n + i, i + 1, -e[i] * d / h)
    edge = np.array([0, n - 1, n, 2 * n - 1])
    put(edge, edge, np.ones(4))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * n, 2 * n)
    )


def _newton(problem, n_nodes, tol, max_iter, guess):
    r = np.linspace(problem.r1, problem.r2, n_nodes)
    h = (problem.r2 - problem.r1) / (n_nodes - 1)
    left_phi, right_phi = problem.phi1_shift, problem.phi1_shift + problem.a
    if guess is None:
        w = (r - problem.r1) / (problem.r2 - problem.r1)
        phi0 = left_phi + problem.a * w
        psi0 = problem.b + (problem.c - problem.b) * w
    else:
        phi0, psi0 = (np.asarray(g, dtype=float) for g in guess)
    x = np.concatenate([phi0, psi0])
    x[[0, n_nodes - 1, n_nodes, 2 * n_nodes - 1]] = (left_phi, right_phi, problem.b, problem.c)

    def full_residual(x):
        rp, rs = _fd_residual(x, r, h)
        out = np.zeros(2 * n_nodes)
        out[1:n_nodes - 1] = rp
        out[n_nodes + 1:2 * n_nodes - 1] = rs
        return out

    res = full_residual(x)
    norm = float(np.max(np.abs(res)))
    merit = float(np.linalg.norm(res))
    it = 0
    while norm > tol:
        if it >= max_iter:
            raise OracleFailure("Newton did not converge in %d iterations (residual %.3g)" % (max_iter, norm), it, norm)
        delta = spsolve(_fd_jacobian(x, r, h), -res)
        if np.max(np.abs(delta)) < 1e-13 * (1.0 + np.max(np.abs(x))):
            # residual is at its roundoff floor
            break
        lam = 1.0
        for _ in range(31):
            trial = x + lam * delta
            with np.errstate(over="ignore", invalid="ignore"):
                trial_res = full_residual(trial)
            trial_norm = float(np.max(np.abs(trial_res)))
            trial_merit = float(np.linalg.norm(trial_res))
            if np.isfinite(trial_merit) and trial_merit < merit:
                break
            lam *= 0.5
        else:
            raise OracleFailure("damped Newton step failed to reduce the residual (%.3g)" % norm, it, norm)
        x, res, norm, merit = trial, trial_res, trial_norm, trial_merit
        it += 1
        if np.max(np.abs(lam * delta)) < 1e-15 * (1.0 + np.max(np.abs(x))):
            break
    return r, x[:n_nodes], x[n_nodes:], it, norm


def _solve_discrete(problem, n_nodes, tol, max_iter, guess, max_depth=6):
    """Newton from the given guess; if that fails, walk the jump in phi up
    from 0 (where the problem is linear) and reuse each solution as the next
    guess, halving the increment when a stage fails."""
    try:
        return _newton(problem, n_nodes, tol, max_iter, guess)
    except OracleFailure as first:
        failure = first
    current = replace(problem, a=0.0)
    r, phi, psi, total, norm = _newton(current, n_nodes, tol, max_iter, None)
    done, step, depth = 0.0, 0.25, 0
    while done < 1.0:
        target = min(1.0, done + step)
        trial = replace(problem, a=target * problem.a)
        try:
            r, phi_t, psi_t, it, norm = _newton(trial, n_nodes, tol, max_iter, (phi, psi))
        except OracleFailure:
            depth += 1
            if depth > max_depth:
                raise failure
            step *= 0.5
            continue
        phi, psi, done, total = phi_t, psi_t, target, total + it
    return r, phi, psi, total, norm


def oracle_bvp(problem: StationaryProblem, n_nodes: int = 401, tol: float = 1e-10,
               max_iter: int = 50, initial_guess=None, extrapolate: bool = True) -> OracleResult:
    """Damped Newton on the centered finite-difference equations.

    Starts from linear interpolants of the boundary values unless
    ``initial_guess = (phi, psi)`` on the ``n_nodes`` grid is given.  With
    ``extrapolate`` the solve is repeated on the grid of spacing h/2 and the
    two are Richardson-combined on the coarse nodes, cancelling the O(h**2)
    error term.  ``residual`` is the max-norm of the unscaled discrete
    equations at the final coarse iterate.
    """
    r, phi, psi, it, norm = _solve_discrete(problem, n_nodes, tol, max_iter, initial_guess)
    if not extrapolate:
        return OracleResult(r, phi, psi, it, norm, False)
    fine_n = 2 * n_nodes - 1
    r_fine = np.linspace(problem.r1, problem.r2, fine_n)
    guess = (np.interp(r_fine, r, phi), np.interp(r_fine, r, psi))
    _, phi_f, psi_f, it_f, _ = _solve_discrete(problem, fine_n, tol, max_iter, guess)
    phi_x = (4.0 * phi_f[::2] - phi) / 3.0
    psi_x = (4.0 * psi_f[::2] - psi) / 3.0
    return OracleResult(r, phi_x, psi_x, it + it_f, norm, True)
