"""Run configuration: flat ``section.key = value`` text files.

Lines starting with ``#`` are comments and trailing ``# ...`` is stripped.
Every key must appear in :data:`SCHEMA`; values are converted to the type
of the default.  Validation reuses the constructors of the numerical types,
so a bad value fails at parse time with the offending key in the message.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .grid import GridSpec
from .linsolve import SolverOptions
from .state import PhysParams, TimeGrid

# (section, key) -> default.  The type of the default is the value type.
SCHEMA: dict[tuple[str, str], object] = {
    ("grid", "nx"): 32,
    ("grid", "ny"): 32,
    ("grid", "Lx"): 1.0,
    ("grid", "Ly"): 1.0,
    ("physics", "mu"): 0.1,
    ("physics", "lambda"): 0.01,
    ("physics", "alpha"): 0.1,
    ("physics", "stab_S"): 2.0,
    ("time", "T"): 0.05,
    ("time", "nt"): 50,
    # initial data
    ("init", "u0"): "disk",            # random | constant | disk | file
    ("init", "u0_value"): 0.0,
    ("init", "u0_low"): -1.0,
    ("init", "u0_high"): 1.0,
    ("init", "disk_x"): 0.4,
    ("init", "disk_y"): 0.45,
    ("init", "disk_r"): 0.2,
    ("init", "disk_width"): 0.05,
    ("init", "u0_path"): "",
    ("init", "v0"): "zero",            # zero | file
    ("init", "v0_path"): "",
    # control
    ("control", "beta"): 1e-3,
    ("control", "theta_min"): -math.inf,
    ("control", "theta_max"): math.inf,
    ("control", "K"): 10.0,
    ("control", "theta"): "vortex",    # zero | vortex | file
    ("control", "theta_amplitude"): 1.0,
    ("control", "theta_profile"): "flat",   # flat | bump
    ("control", "theta_path"): "",
    ("control", "projection"): "box",  # box | dykstra
    # targets
    ("targets", "preset"): "zero",     # zero | constant | file | synthetic
    ("targets", "u_value"): 0.0,
    ("targets", "v_value"): 0.0,
    ("targets", "path"): "",
    ("targets", "amplitude"): 0.3,
    ("targets", "profile"): "bump",
    # linear solvers
    ("solver", "cg_tol"): 1e-10,
    ("solver", "cg_maxiter"): 0,       # 0: 10 * nx * ny
    ("solver", "precond"): "spectral",
    # optimizer
    ("opt", "max_iters"): 50,
    ("opt", "tol"): 1e-4,
    ("opt", "c1"): 1e-4,
    ("opt", "rho"): 0.5,
    ("opt", "s0"): 1.0,
    ("opt", "residual_step"): 1.0,
    # derivative checks
    ("check", "directions"): 3,
    ("check", "grad_tol"): 0.02,
    ("check", "duality_tol"): 0.02,
    ("check", "linearity_tol"): 1e-10,
    ("check", "min_order"): 1.8,
    ("check", "state_eps_scale"): 10.0,   # eps multiplier for the state-map sweep
    # output
    ("output", "dump_every"): 0,       # 0: first and last snapshot only
    ("", "seed"): 12345,
}

CHOICES = {
    ("init", "u0"): ("random", "constant", "disk", "file"),
    ("init", "v0"): ("zero", "file"),
    ("control", "theta"): ("zero", "vortex", "file"),
    ("control", "theta_profile"): ("flat", "bump"),
    ("control", "projection"): ("box", "dykstra"),
    ("targets", "preset"): ("zero", "constant", "file", "synthetic"),
    ("targets", "profile"): ("flat", "bump"),
    ("solver", "precond"): ("spectral", "jacobi"),
}

_LINE = re.compile(r"^\s*([A-Za-z_][\w]*(?:\.[A-Za-z_][\w]*)?)\s*=\s*(.*?)\s*$")


def _dotted(section, key):
    return f"{section}.{key}" if section else key


def _convert(raw: str, default, name: str, lineno: int):
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigurationError(
            f"line {lineno}: {name} expects {type(default).__name__}, got {raw!r}") from None
    return raw


@dataclass
class RunConfig:
    """All settings of one run, grouped by section (``values[(section, key)]``)."""

    values: dict = field(default_factory=lambda: dict(SCHEMA))
    source: str = "<defaults>"
    warnings: tuple = ()

    def __getitem__(self, dotted: str):
        section, _, key = dotted.rpartition(".")
        try:
            return self.values[(section, key)]
        except KeyError:
            raise KeyError(dotted) from None

    @property
    def seed(self) -> int:
        return self.values[("", "seed")]

    # typed views -------------------------------------------------------
    def grid(self) -> GridSpec:
        return GridSpec(self["grid.nx"], self["grid.ny"], self["grid.Lx"], self["grid.Ly"])

    def physics(self) -> PhysParams:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return PhysParams(mu=self["physics.mu"], lam=self["physics.lambda"],
                              alpha=self["physics.alpha"], stab_S=self["physics.stab_S"])

    def timegrid(self) -> TimeGrid:
        return TimeGrid(self["time.T"], self["time.nt"])

    def solver(self) -> SolverOptions:
        return SolverOptions(tol=self["solver.cg_tol"],
                             maxiter=self["solver.cg_maxiter"] or None,
                             precond=self["solver.precond"])

    def validate(self) -> "RunConfig":
        """Re-run every module-level precondition; returns ``self``."""
        for (section, key), choices in CHOICES.items():
            if self.values[(section, key)] not in choices:
                raise ConfigurationError(
                    f"{_dotted(section, key)} must be one of {', '.join(choices)}, "
                    f"got {self.values[(section, key)]!r}")
        self.grid()
        self.timegrid()
        self.solver()
        phys = self.physics()
        _positive(self, "control.beta", "control.K", "opt.tol", "opt.s0",
                  "opt.residual_step", "check.grad_tol", "check.duality_tol",
                  "check.linearity_tol", "check.state_eps_scale")
        if self["control.theta_min"] > self["control.theta_max"]:
            raise ConfigurationError("control.theta_min must not exceed control.theta_max")
        if not 0 < self["opt.c1"] < 1:
            raise ConfigurationError("opt.c1 must lie in (0, 1)")
        if not 0 < self["opt.rho"] < 1:
            raise ConfigurationError("opt.rho must lie in (0, 1)")
        for key in ("opt.max_iters", "output.dump_every", "solver.cg_maxiter"):
            if self[key] < 0:
                raise ConfigurationError(f"{key} must be >= 0")
        if self["check.directions"] < 1:
            raise ConfigurationError("check.directions must be >= 1")
        if self["init.u0_low"] > self["init.u0_high"]:
            raise ConfigurationError("init.u0_low must not exceed init.u0_high")
        for mode, key in (("init.u0", "init.u0_path"), ("init.v0", "init.v0_path"),
                          ("control.theta", "control.theta_path"),
                          ("targets.preset", "targets.path")):
            if self[mode] == "file" and not self[key]:
                raise ConfigurationError(f"{key} is required when {mode} = file")
        self.warnings = tuple(phys.warnings)
        return self


def _positive(cfg, *keys):
    for key in keys:
        if not cfg[key] > 0:
            raise ConfigurationError(f"{key} must be > 0, got {cfg[key]}")


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    values = dict(SCHEMA)
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        m = _LINE.match(body)
        if m is None:
            raise ConfigurationError(f"{source}: line {lineno}: expected 'section.key = value', "
                                     f"got {line.strip()!r}")
        name, raw = m.group(1), m.group(2)
        section, _, key = name.rpartition(".")
        if (section, key) not in SCHEMA:
            raise ConfigurationError(f"{source}: line {lineno}: unknown key {name!r}")
        if name in seen:
            raise ConfigurationError(f"{source}: line {lineno}: duplicate key {name!r} "
                                     f"(first set on line {seen[name]})")
        if raw == "" and not isinstance(SCHEMA[(section, key)], str):
            raise ConfigurationError(f"{source}: line {lineno}: empty value for {name!r}")
        seen[name] = lineno
        values[(section, key)] = _convert(raw, SCHEMA[(section, key)], name, lineno)
    return RunConfig(values, source).validate()


def parse_config(path) -> RunConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))


def format_config(cfg: RunConfig) -> str:
    """Render a config in the file format; ``parse_config_text`` inverts it."""
    lines = []
    for (section, key), value in cfg.values.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{_dotted(section, key)} = {value}")
    return "\n".join(lines) + "\n"
