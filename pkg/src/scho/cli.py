"""Command-line entry points.

Usage::

    python3 -m scho SUBCOMMAND --config run.cfg --out results/

Exit codes: 0 success, 1 usage error, 2 invalid configuration or input file,
3 solver failure, 4 a documented tolerance was not met.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import control as ctl
from .config import RunConfig, format_config, parse_config
from .errors import (ConfigurationError, FieldFormatError, NumericalBreakdown,
                     PreconditionError, SolverFailure)
from .fieldio import DIAGNOSTICS_COLUMNS, write_csv, write_field, write_sequence
from . import workflows as wf

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_SOLVER, EXIT_TOLERANCE = 0, 1, 2, 3, 4
SUBCOMMANDS = ("simulate", "optimize", "grad-check", "taylor",
               "linearized-check", "adjoint-duality")

log = logging.getLogger("scho")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="scho", description="Phase-field Stokes flow simulation and control.")
    p.add_argument("command", choices=SUBCOMMANDS, metavar="COMMAND",
                   help=" | ".join(SUBCOMMANDS))
    p.add_argument("--config", help="key = value configuration file (defaults if omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _status(ok: bool) -> int:
    return EXIT_OK if ok else EXIT_TOLERANCE


def _verdict(name, value, limit, ok):
    print(f"{name}: {value:.6g} (limit {limit:g}) {'PASS' if ok else 'FAIL'}")


def cmd_simulate(prob, out: Path) -> int:
    traj = prob.forward()
    write_csv(out / "diagnostics.csv", DIAGNOSTICS_COLUMNS,
              wf.diagnostics_rows(traj, prob.theta, prob.cost))
    every = prob.cfg["output.dump_every"]
    nt = prob.timegrid.nt
    keep = range(0, nt + 1, every) if every else (0, nt)
    keep = sorted(set(keep) | {nt})
    dump = out / "fields"
    dump.mkdir(exist_ok=True)
    times = prob.timegrid.times()
    for n in keep:
        s = traj.snapshots[n]
        for name, f in (("u", s.u), ("w", s.w), ("p", s.p), ("v", s.v)):
            write_field(dump / f"{name}_{n:05d}", f, time=times[n], step=n)
    print(f"simulated {nt} steps; diagnostics in {out / 'diagnostics.csv'}")
    return EXIT_OK


def cmd_optimize(prob, out: Path) -> int:
    state = ctl.projected_gradient_descent(
        prob.u0, prob.v0, prob.cost, prob.grid, prob.params, prob.timegrid,
        wf.opt_config(prob.cfg), theta0=prob.theta, solver=prob.solver)
    rows = []
    for k, J in enumerate(state.J_history):
        res = state.residual_history[k] if k < len(state.residual_history) else math.nan
        step = state.step_history[k - 1] if 0 < k <= len(state.step_history) else math.nan
        rows.append((k, J, res, step))
    write_csv(out / "history.csv", ("iteration", "J", "residual", "step"), rows)
    write_sequence(out / "control", "theta", state.theta, prob.timegrid.times()[:-1])
    traj = prob.forward(state.theta)
    write_csv(out / "diagnostics.csv", DIAGNOSTICS_COLUMNS,
              wf.diagnostics_rows(traj, state.theta, prob.cost))
    print(f"{state.message} after {state.iterations} iterations: "
          f"J = {state.J_history[0]:.6e} -> {state.J_history[-1]:.6e}")
    return _status(state.converged)


def cmd_grad_check(prob, out: Path) -> int:
    rows, worst = wf.gradcheck_report(prob)
    write_csv(out / "grad_check.csv", ("direction", "eps", "fd", "predicted", "rel_error"), rows)
    limit = prob.cfg["check.grad_tol"]
    _verdict("max relative error", worst, limit, worst <= limit)
    return _status(worst <= limit)


def cmd_taylor(prob, out: Path) -> int:
    rows, lowest = wf.taylor_report(prob)
    write_csv(out / "taylor.csv", ("direction", "eps", "remainder", "order"), rows)
    limit = prob.cfg["check.min_order"]
    _verdict("min asymptotic order", lowest, limit, lowest >= limit)
    return _status(lowest >= limit)


def cmd_linearized_check(prob, out: Path) -> int:
    rows, lin_err, lowest = wf.linearized_report(prob)
    write_csv(out / "linearized_check.csv", ("quantity", "eps", "value", "order"), rows)
    tol, order = prob.cfg["check.linearity_tol"], prob.cfg["check.min_order"]
    _verdict("superposition error", lin_err, tol, lin_err <= tol)
    _verdict("min asymptotic order", lowest, order, lowest >= order)
    return _status(lin_err <= tol and lowest >= order)


def cmd_adjoint_duality(prob, out: Path) -> int:
    rows, worst = wf.duality_report(prob)
    write_csv(out / "adjoint_duality.csv", ("direction", "lhs", "rhs", "rel_error"), rows)
    limit = prob.cfg["check.duality_tol"]
    _verdict("max relative gap", worst, limit, worst <= limit)
    return _status(worst <= limit)


COMMANDS = {
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "grad-check": cmd_grad_check,
    "taylor": cmd_taylor,
    "linearized-check": cmd_linearized_check,
    "adjoint-duality": cmd_adjoint_duality,
}


def run_cli(argv=None) -> int:
    """Run one subcommand; returns the exit status instead of exiting."""
    try:
        args = _parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        _parser().print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out} is not writable: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(args.config) if args.config else RunConfig().validate()
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        (out / "config.used").write_text(format_config(cfg))
        prob = wf.build_problem(cfg)
        return COMMANDS[args.command](prob, out)
    except (ConfigurationError, FieldFormatError, PreconditionError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverFailure, NumericalBreakdown) as exc:
        print(f"solver failure in {args.command}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main() -> None:
    sys.exit(run_cli())
