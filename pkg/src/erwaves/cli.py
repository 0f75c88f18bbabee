"""Command-line driver: ``er-waves <subcommand> --config <path> [--out <dir>]``.

Every subcommand writes one CSV named after itself into the output
directory, followed by a commented ``# summary`` block of ``key = value``
lines.  Wall-clock timings go to stdout only, so artifacts stay
byte-identical across runs.

Exit status: 0 on success, 2 when a run hit the blow-up guard, 1 on any
error or failed built-in check.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from typing import Mapping, Optional

import numpy as np

from .config import ConfigError, RunConfig, parse_config, SUBCOMMANDS
from .core_fields import DomainError, FieldState, InitialBoundaryData, RadialGrid
from .evolution import (
    BlowUpError,
    EvolutionConfig,
    IncompatibleDataError,
    evolve,
    random_compatible_data,
    convergence_study,
)
from .exact_solutions import eval_exact, make_manufactured_data, sample_state
from .nu_reconstruction import SpaceTimeFields, integrate_nu, path_discrepancy
from .stationary import OracleFailure, oracle_bvp, solve_stationary, theta_check

EXIT_OK, EXIT_ERROR, EXIT_BLOWUP = 0, 1, 2

EVOLVE_COLUMNS = ("t", "r", "psi", "phi", "mu", "omega", "p", "q")


# -- CSV -----------------------------------------------------------------

def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError("refusing to write non-finite value %r" % (value,))
        return format(float(value), ".17g")
    text = str(value)
    if any(ch in text for ch in ',"\n\r'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def format_csv(table: Mapping[str, object], footer: Optional[Mapping[str, object]] = None) -> str:
    """Render ``{column: values}`` as CSV text (header, then rows)."""
    names = list(table)
    if not names:
        raise ValueError("table has no columns")
    columns = [list(np.asarray(table[k], dtype=object).ravel()) if not isinstance(table[k], list) else table[k]
               for k in names]
    length = len(columns[0])
    if any(len(c) != length for c in columns):
        raise ValueError("table is not rectangular: column lengths %s" % [len(c) for c in columns])
    lines = [",".join(_format(n) for n in names)]
    for row in zip(*columns):
        lines.append(",".join(_format(v) for v in row))
    if footer:
        lines.append("# summary")
        for key, value in footer.items():
            lines.append("# %s = %s" % (key, _format(value)))
    return "\n".join(lines) + "\n"


def write_csv(table: Mapping[str, object], path, footer: Optional[Mapping[str, object]] = None) -> None:
    """Write :func:`format_csv` output with ``\\n`` line endings."""
    text = format_csv(table, footer)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -- helpers -------------------------------------------------------------

def _evolution_config(cfg: RunConfig, grid: Optional[RadialGrid] = None) -> EvolutionConfig:
    return EvolutionConfig(grid or cfg.grid, t_end=cfg.t_end, cfl=cfg.cfl, snapshot_stride=cfg.snapshot_stride)


def snapshot_times(ecfg: EvolutionConfig) -> np.ndarray:
    """Times at which :func:`evolve` stores snapshots."""
    times = ecfg.step_times()
    idx = [n for n in range(len(times)) if n % ecfg.snapshot_stride == 0 or n == len(times) - 1]
    return times[idx]


def _build_data(cfg: RunConfig) -> InitialBoundaryData:
    if cfg.data_kind == "exact":
        return make_manufactured_data(cfg.family, cfg.grid, cfg.t_end)
    if cfg.data_kind == "random":
        rng = np.random.default_rng(cfg.seed)
        return random_compatible_data(cfg.grid, cfg.epsilon, cfg.t_end, rng)
    return InitialBoundaryData.flat()


def _state_table(states, grid: RadialGrid):
    n = grid.n_nodes
    cols = {k: [] for k in EVOLVE_COLUMNS}
    for s in states:
        cols["t"].append(np.full(n, s.t))
        cols["r"].append(grid.r)
        cols["psi"].append(s.psi)
        cols["phi"].append(s.phi)
        cols["mu"].append(0.5 * (s.psi + grid.log_r))
        cols["omega"].append(s.phi)
        cols["p"].append(s.p)
        cols["q"].append(s.q)
    return {k: np.concatenate(v) for k, v in cols.items()}


def read_trajectory_csv(path):
    """Load an ``evolve`` CSV back into (grid, states)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if tuple(header) != EVOLVE_COLUMNS:
        raise ValueError("%s: expected columns %s, got %s" % (path, ",".join(EVOLVE_COLUMNS), ",".join(header)))
    data = np.loadtxt(path, delimiter=",", skiprows=1, comments="#", ndmin=2)
    col = {k: data[:, i] for i, k in enumerate(header)}
    t_values, starts = np.unique(col["t"], return_index=True)
    order = np.argsort(starts)
    t_values, starts = t_values[order], starts[order]
    n = np.count_nonzero(col["t"] == t_values[0])
    if data.shape[0] != n * t_values.size:
        raise ValueError("%s: every time level must carry the same nodes" % path)
    r = col["r"][:n]
    grid = RadialGrid(float(r[0]), float(r[-1]), n)
    if np.max(np.abs(grid.r - r)) > 1e-12 * r[-1]:
        raise ValueError("%s: radii are not a uniform grid" % path)
    states = []
    for k, t in enumerate(t_values):
        sl = slice(k * n, (k + 1) * n)
        if not np.all(col["t"][sl] == t):
            raise ValueError("%s: rows for t=%r are not contiguous" % (path, t))
        states.append(FieldState(float(t), col["psi"][sl].copy(), col["p"][sl].copy(),
                                 col["phi"][sl].copy(), col["q"][sl].copy()))
    return grid, states


def _blowup_summary(summary, traj):
    summary["completed"] = traj.completed
    if traj.blowup is not None:
        b = traj.blowup
        summary["blowup_t"] = b.t
        summary["blowup_r"] = b.r
        summary["blowup_quantity"] = b.quantity
        summary["blowup_value"] = b.value


# -- subcommands ---------------------------------------------------------
# each returns (table, summary, status)

def _cmd_evolve(cfg: RunConfig):
    ecfg = _evolution_config(cfg)
    data = _build_data(cfg)
    traj = evolve(data, ecfg)
    summary = {"data_kind": cfg.data_kind, "n_nodes": cfg.grid.n_nodes, "dt": ecfg.dt,
               "steps": traj.n_steps, "t_final": traj.final.t}
    _blowup_summary(summary, traj)
    summary["max_energy"] = max(traj.energy)
    summary["max_abs_omega"] = max(traj.max_abs_phi)
    summary["max_abs_mu"] = 0.5 * max(traj.max_abs_mu2)
    if cfg.data_kind == "exact":
        ex = eval_exact(cfg.family, cfg.grid.r, traj.final.t)
        summary["err_max_final"] = float(max(np.max(np.abs(traj.final.psi - ex.psi)),
                                             np.max(np.abs(traj.final.phi - ex.phi))))
    status = EXIT_OK if traj.completed else EXIT_BLOWUP
    return _state_table(traj.snapshots, cfg.grid), summary, status


def _cmd_exact(cfg: RunConfig):
    ecfg = _evolution_config(cfg)
    times = snapshot_times(ecfg)
    states = [sample_state(cfg.family, cfg.grid, t) for t in times]
    fam = cfg.family
    summary = {"gamma": fam.gamma, "c_const": fam.c_const, "modes": str(fam.theta),
               "levels": len(states), "n_nodes": cfg.grid.n_nodes}
    lo, hi = fam.interval
    phi = np.concatenate([s.phi for s in states])
    summary["phi_in_interval"] = bool(np.all((phi > lo) & (phi < hi)))
    ident = max(float(np.max(np.abs(np.exp(2 * s.psi) * (s.phi ** 2 + 2 * fam.gamma * s.phi + fam.c_const) + 1)))
                for s in states)
    summary["identity_defect"] = ident
    status = EXIT_OK if summary["phi_in_interval"] else EXIT_ERROR
    return _state_table(states, cfg.grid), summary, status


def _cmd_stationary(cfg: RunConfig):
    pr = cfg.stationary
    sol = solve_stationary(pr)
    r = cfg.grid.r
    phi, psi, theta = sol.phi(r), sol.psi(r), sol.theta(r)
    tol = cfg.tolerances
    summary = {"a": pr.a, "b": pr.b, "c": pr.c, "phi1": pr.phi1_shift, "n_nodes": cfg.grid.n_nodes}
    if pr.a != 0:
        summary["m"] = sol.m
        summary["root_neg"] = sol.root_neg
        summary["root_pos"] = sol.root_pos
        summary["u_total"] = sol.u_scale
        summary["theta_defect"] = theta_check(sol)
    phin = sol.phi_normalized(r)
    lo, hi = sorted((0.0, pr.a))
    summary["max_principle_violation"] = float(max(0.0, np.max(lo - phin), np.max(phin - hi)))
    summary["boundary_defect"] = float(max(abs(phi[0] - pr.phi1_shift), abs(phi[-1] - pr.phi1_shift - pr.a),
                                           abs(psi[0] - pr.b), abs(psi[-1] - pr.c)))
    oracle = oracle_bvp(pr, n_nodes=cfg.grid.n_nodes)
    summary["oracle_iterations"] = oracle.iterations
    summary["oracle_delta_phi"] = float(np.max(np.abs(oracle.phi + pr.phi1_shift - phi)))
    summary["oracle_delta_psi"] = float(np.max(np.abs(oracle.psi - psi)))
    checks = [
        max(summary["oracle_delta_phi"], summary["oracle_delta_psi"]) <= tol["oracle_delta"],
        summary["max_principle_violation"] <= 1e-12,
        summary["boundary_defect"] <= 1e-12,
    ]
    if pr.a != 0:
        checks.append(summary["theta_defect"] <= tol["theta_defect"])
    summary["checks_passed"] = all(checks)
    status = EXIT_OK if summary["checks_passed"] else EXIT_ERROR
    return {"r": r, "phi": phi, "psi": psi, "theta": theta}, summary, status


def _cmd_nu(cfg: RunConfig, base_dir="."):
    status = EXIT_OK
    summary = {}
    if cfg.nu_trajectory:
        path = cfg.nu_trajectory
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        grid, states = read_trajectory_csv(path)
        fields = SpaceTimeFields.from_states(states, grid)
        summary["source"] = "trajectory"
    elif cfg.family is not None:
        grid = cfg.grid
        fields = SpaceTimeFields.from_family(cfg.family, grid, snapshot_times(_evolution_config(cfg)))
        summary["source"] = "family"
    else:
        grid = cfg.grid
        traj = evolve(_build_data(cfg), _evolution_config(cfg))
        _blowup_summary(summary, traj)
        if not traj.completed:
            status = EXIT_BLOWUP
        fields = SpaceTimeFields.from_states(traj.snapshots, grid)
        summary["source"] = "evolution"
    nu = integrate_nu(fields, cfg.nu_path)
    gap = path_discrepancy(fields)
    summary["path"] = cfg.nu_path
    summary["levels"] = int(fields.t.size)
    summary["anchor"] = nu.anchor
    summary["max_path_discrepancy"] = float(np.max(gap))
    if nu.level_defect.size:
        summary["max_exactness_defect"] = float(np.max(nu.level_defect))
    n_t, n_r = nu.nu.shape
    table = {
        "t": np.repeat(fields.t, n_r),
        "r": np.tile(fields.r, n_t),
        "nu": nu.nu.ravel(),
        "defect": gap.ravel(),
    }
    return table, summary, status


def _cmd_converge(cfg: RunConfig):
    rows = convergence_study(cfg.family, cfg.grid.r_min, cfg.grid.r_max, cfg.levels, cfg.t_end, cfg.cfl)
    orders = [row[3] for row in rows if row[3] is not None]
    summary = {"gamma": cfg.family.gamma, "c_const": cfg.family.c_const, "modes": str(cfg.family.theta),
               "t_end": cfg.t_end, "cfl": cfg.cfl, "min_order": min(orders),
               "order_min": cfg.tolerances["order_min"]}
    summary["checks_passed"] = min(orders) >= cfg.tolerances["order_min"]
    table = {"n": [r[0] for r in rows], "h": [r[1] for r in rows],
             "err_max": [r[2] for r in rows], "order_estimate": [r[3] for r in rows]}
    return table, summary, EXIT_OK if summary["checks_passed"] else EXIT_ERROR


def _cmd_flat_check(cfg: RunConfig):
    ecfg = _evolution_config(cfg)
    traj = evolve(InitialBoundaryData.flat(), ecfg)
    mu = [0.5 * v for v in traj.max_abs_mu2]
    table = {"step": list(range(len(traj.times))), "t": traj.times, "energy": traj.energy,
             "max_abs_omega": traj.max_abs_phi, "max_abs_mu": mu}
    summary = {"n_nodes": cfg.grid.n_nodes, "steps": traj.n_steps, "max_abs_omega": max(traj.max_abs_phi),
               "max_abs_mu": max(mu), "max_energy": max(traj.energy), "flat_mu_tol": cfg.tolerances["flat_mu"]}
    _blowup_summary(summary, traj)
    summary["checks_passed"] = (summary["max_abs_omega"] == 0.0 and summary["max_energy"] == 0.0
                                and summary["max_abs_mu"] <= cfg.tolerances["flat_mu"])
    if not traj.completed:
        return table, summary, EXIT_BLOWUP
    return table, summary, EXIT_OK if summary["checks_passed"] else EXIT_ERROR


def run(cfg: RunConfig, out_dir: Optional[str] = None, base_dir: str = ".") -> int:
    """Execute ``cfg.subcommand``; write ``<out_dir>/<subcommand>.csv``."""
    out_dir = out_dir if out_dir is not None else cfg.output
    os.makedirs(out_dir, exist_ok=True)
    sub = cfg.subcommand
    if sub == "nu":
        table, summary, status = _cmd_nu(cfg, base_dir)
    else:
        table, summary, status = {
            "evolve": _cmd_evolve, "exact": _cmd_exact, "stationary": _cmd_stationary,
            "converge": _cmd_converge, "flat-check": _cmd_flat_check,
        }[sub](cfg)
    summary["exit_status"] = status
    path = os.path.join(out_dir, sub + ".csv")
    write_csv(table, path, summary)
    for key, value in summary.items():
        print("%s: %s" % (key, _format(value)))
    print("wrote %s" % path)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="er-waves", description="Cylindrical wave solvers and closed-form checks.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to a sectioned key = value config file")
    parser.add_argument("--out", default=None, help="output directory (default: output.path or .)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text, subcommand=args.subcommand)
        start = time.perf_counter()
        base_dir = os.path.dirname(os.path.abspath(args.config))
        status = run(cfg, args.out, base_dir=base_dir)
        print("elapsed: %.3f s" % (time.perf_counter() - start))
        return status
    except BlowUpError as err:
        print("er-waves: %s" % err, file=sys.stderr)
        return EXIT_BLOWUP
    except (ConfigError, DomainError, IncompatibleDataError, OracleFailure, OSError, ValueError) as err:
        print("er-waves: error: %s" % err, file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
