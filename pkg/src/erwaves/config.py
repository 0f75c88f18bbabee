"""Run configuration: a flat sectioned ``key = value`` format.

Grammar (one construct per line)::

    # comment
    [section]
    key = value

Values are decimal numbers, double-quoted strings, comma-separated numbers
(``levels``) or comma-separated ``kind:k:amp`` mode triples (``modes``).
Unknown sections or keys are errors; every error names its line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .core_fields import DomainError, RadialGrid
from .exact_solutions import ExactFamily, ModeSum
from .stationary import StationaryProblem

SUBCOMMANDS = ("evolve", "exact", "stationary", "nu", "converge", "flat-check")

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_INT = re.compile(r"^[+-]?\d+$")

# section -> key -> kind
SCHEMA = {
    "run": {"subcommand": "str", "seed": "int"},
    "grid": {"r1": "float", "r2": "float", "n_nodes": "int"},
    "time": {"t_end": "float", "cfl": "float", "snapshot_stride": "int"},
    "family": {"gamma": "float", "c_const": "float", "modes": "modes"},
    "data": {"kind": "str", "epsilon": "float"},
    "stationary": {"a": "float", "b": "float", "c": "float", "phi1": "float"},
    "nu": {"trajectory": "str", "path": "str"},
    "converge": {"levels": "ints"},
    "output": {"path": "str"},
    "tolerances": {
        "flat_mu": "float",
        "order_min": "float",
        "oracle_delta": "float",
        "theta_defect": "float",
        "compatibility": "float",
    },
}

DEFAULT_TOLERANCES = {
    "flat_mu": 1e-6,
    "order_min": 1.9,
    "oracle_delta": 1e-8,
    "theta_defect": 1e-10,
    "compatibility": 1e-8,
}


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else "line %d: %s" % (line, message))


@dataclass
class RunConfig:
    subcommand: str
    grid: RadialGrid
    t_end: float = 1.0
    cfl: float = 0.5
    snapshot_stride: int = 10
    family: Optional[ExactFamily] = None
    stationary: Optional[StationaryProblem] = None
    data_kind: str = "flat"
    epsilon: float = 1e-3
    nu_trajectory: Optional[str] = None
    nu_path: str = "r-then-t"
    levels: tuple = (101, 201, 401)
    output: str = "."
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 42


def _parse_value(raw, kind, where, line):
    raw = raw.strip()
    if kind == "str":
        if len(raw) >= 2 and raw[0] == raw[-1] == '"':
            return raw[1:-1]
        raise ConfigError("%s must be a quoted string" % where, line)
    if kind == "modes":
        try:
            return ModeSum.parse(raw.strip('"'))
        except ValueError as err:
            raise ConfigError("%s: %s" % (where, err), line)
    if kind == "ints":
        items = [x.strip() for x in raw.split(",")]
        if not all(_INT.match(x) for x in items):
            raise ConfigError("%s must be a comma-separated list of integers" % where, line)
        return tuple(int(x) for x in items)
    if not _NUMBER.match(raw):
        raise ConfigError("%s must be a decimal number, got %r" % (where, raw), line)
    if kind == "int":
        if not _INT.match(raw):
            raise ConfigError("%s must be an integer, got %r" % (where, raw), line)
        return int(raw)
    return float(raw)


def _tokenize(text):
    """{section: {key: (value, line)}}"""
    out = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header %r" % line, lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError("unknown section [%s]" % section, lineno)
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value', got %r" % line, lineno)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError("unknown key %s.%s" % (section, key), lineno)
        if key in out[section]:
            raise ConfigError("duplicate key %s.%s" % (section, key), lineno)
        where = "%s.%s" % (section, key)
        out[section][key] = (_parse_value(raw, SCHEMA[section][key], where, lineno), lineno)
    return out


def parse_config(text: str, subcommand: Optional[str] = None) -> RunConfig:
    """Parse and validate; ``subcommand`` overrides ``run.subcommand``."""
    tokens = _tokenize(text)

    def get(section, key, default=None):
        entry = tokens.get(section, {}).get(key)
        return (default, None) if entry is None else entry

    sub, line = get("run", "subcommand", subcommand)
    if subcommand is not None:
        sub = subcommand
    if sub not in SUBCOMMANDS:
        raise ConfigError("subcommand must be one of %s, got %r" % (", ".join(SUBCOMMANDS), sub), line)

    r1, l_r1 = get("grid", "r1")
    r2, l_r2 = get("grid", "r2")
    n_nodes, l_n = get("grid", "n_nodes", 201)
    if r1 is None:
        raise ConfigError("grid.r1 is required")
    if r2 is None:
        raise ConfigError("grid.r2 is required")
    if not r1 > 0:
        raise ConfigError("grid.r1 must be > 0", l_r1)
    if not r2 > r1:
        raise ConfigError("grid.r2 must be > grid.r1", l_r2)
    if n_nodes < 3:
        raise ConfigError("grid.n_nodes must be >= 3", l_n)
    grid = RadialGrid(r1, r2, n_nodes)

    cfg = RunConfig(sub, grid)
    t_end, line = get("time", "t_end", 1.0)
    if not t_end >= 0:
        raise ConfigError("time.t_end must be >= 0", line)
    cfl, line = get("time", "cfl", 0.5)
    if not 0 < cfl <= 1:
        raise ConfigError("time.cfl must lie in (0, 1]", line)
    stride, line = get("time", "snapshot_stride", 10)
    if stride < 1:
        raise ConfigError("time.snapshot_stride must be >= 1", line)
    cfg.t_end, cfg.cfl, cfg.snapshot_stride = t_end, cfl, stride

    if "family" in tokens:
        gamma, l_g = get("family", "gamma", 1.0)
        c_const, l_c = get("family", "c_const", 0.0)
        modes, _ = get("family", "modes", ModeSum())
        if not c_const < gamma ** 2:
            raise ConfigError(
                "family.c_const must satisfy C < gamma^2 (got C=%r, gamma=%r)" % (c_const, gamma), l_c or l_g)
        cfg.family = ExactFamily(gamma, c_const, modes)

    kind, line = get("data", "kind", "exact" if cfg.family is not None else "flat")
    if kind not in ("flat", "exact", "random"):
        raise ConfigError("data.kind must be one of flat, exact, random", line)
    if kind == "exact" and cfg.family is None:
        raise ConfigError("data.kind = \"exact\" needs a [family] section", line)
    eps, line = get("data", "epsilon", 1e-3)
    if not eps > 0:
        raise ConfigError("data.epsilon must be > 0", line)
    cfg.data_kind, cfg.epsilon = kind, eps

    if "stationary" in tokens:
        vals = {}
        for key in ("a", "b", "c"):
            vals[key], _ = get("stationary", key)
            if vals[key] is None:
                raise ConfigError("stationary.%s is required" % key)
        phi1, _ = get("stationary", "phi1", 0.0)
        try:
            cfg.stationary = StationaryProblem(r1, r2, vals["a"], vals["b"], vals["c"], phi1)
        except DomainError as err:
            raise ConfigError(str(err))

    cfg.nu_trajectory, _ = get("nu", "trajectory")
    cfg.nu_path, line = get("nu", "path", "r-then-t")
    if cfg.nu_path not in ("r-then-t", "t-then-r"):
        raise ConfigError("nu.path must be \"r-then-t\" or \"t-then-r\"", line)

    levels, line = get("converge", "levels", (101, 201, 401))
    if len(levels) < 2 or any(n < 3 for n in levels):
        raise ConfigError("converge.levels needs at least two grids with >= 3 nodes", line)
    cfg.levels = tuple(levels)

    cfg.output, _ = get("output", "path", ".")
    for key in SCHEMA["tolerances"]:
        value, line = get("tolerances", key, DEFAULT_TOLERANCES[key])
        if not value > 0:
            raise ConfigError("tolerances.%s must be > 0" % key, line)
        cfg.tolerances[key] = value
    cfg.seed, _ = get("run", "seed", 42)

    if sub in ("exact", "converge") and cfg.family is None:
        raise ConfigError("subcommand %r needs a [family] section" % sub)
    if sub == "stationary" and cfg.stationary is None:
        raise ConfigError("subcommand 'stationary' needs a [stationary] section")
    return cfg
