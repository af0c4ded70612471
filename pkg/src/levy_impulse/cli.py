"""Command-line front end: ``levy-impulse {solve,simulate,verify,sweep,ladder,transform}``.

Results go to stdout (JSON documents or CSV), diagnostics to stderr.
Exit codes: 0 success, 1 error or failed verification, 2 degenerate problem.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import replace
from typing import TYPE_CHECKING, Any, TextIO

import numpy as np

import levy_impulse.ladder as ladder_ops
import levy_impulse.simulate as simulate_ops
import levy_impulse.solver as solver_ops
from levy_impulse import potential as potential_ops
from levy_impulse import transform as transform_ops
from levy_impulse._constants import EXIT_DEGENERATE, EXIT_ERROR, EXIT_OK
from levy_impulse.errors import LevyImpulseError, NoThresholdError, SpecParseError, UnboundedError
from levy_impulse.presets import PRESETS, get_preset
from levy_impulse.problem import ProblemSpec, RunResult, load_spec
from levy_impulse.process import JumpLaw
from levy_impulse.simulate import Strategy
from levy_impulse.transform import Cost, Gamma, PayoffSpec, Restart, RestartMode
from levy_impulse.version import __version__

if TYPE_CHECKING:
    from collections.abc import Sequence

_LADDER_PARAMS = frozenset({"drift", "sigma2", "jump_rate"})


# --- Argument parsing ---


def _add_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("spec", nargs="?", help="problem spec (or run result) JSON file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="use a built-in problem instead of a file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-impulse",
        description="Optimal (s,S) impulse control of Lévy processes under the long-run average criterion.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug diagnostics on stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="compute rho*, s and S")
    _add_source(solve)

    simulate = commands.add_parser("simulate", help="estimate the long-run average of a band strategy")
    _add_source(simulate)
    simulate.add_argument("--s", type=float, dest="lower", help="restart level (default: solved s)")
    simulate.add_argument("--S", type=float, dest="upper", help="trigger level (default: solved S)")
    simulate.add_argument("--cycles", type=int, help="number of renewal cycles")
    simulate.add_argument("--seed", type=int, help="random seed")

    verify = commands.add_parser("verify", help="solve, then check the solution by simulation")
    _add_source(verify)
    verify.add_argument("--cycles", type=int, help="cycles for the agreement check")
    verify.add_argument("--grid-cycles", type=int, help="cycles per perturbation cell")
    verify.add_argument("--delta", type=float, default=0.25, help="perturbation step")
    verify.add_argument("--supermartingale", action="store_true", help="also run the supermartingale check")

    sweep = commands.add_parser("sweep", help="re-solve over a parameter grid (CSV)")
    _add_source(sweep)
    sweep.add_argument("--param", required=True, help="K, drift, sigma2, jump_rate, gamma.<i>, h.<i> or restart.point")
    sweep.add_argument("--from", type=float, required=True, dest="start")
    sweep.add_argument("--to", type=float, required=True, dest="stop")
    sweep.add_argument("--steps", type=int, required=True, help="number of grid points")

    ladder = commands.add_parser("ladder", help="ladder characteristics on a grid (CSV)")
    _add_source(ladder)
    ladder.add_argument("--potential", action="store_true", help="add the potential density column")
    ladder.add_argument("--z-max", type=float, default=5.0, help="grid end")
    ladder.add_argument("--points", type=int, default=101, help="grid points")

    transform = commands.add_parser("transform", help="hat h, A_H gamma and g on a grid (CSV)")
    _add_source(transform)
    transform.add_argument("--from", type=float, default=-5.0, dest="start")
    transform.add_argument("--to", type=float, default=5.0, dest="stop")
    transform.add_argument("--points", type=int, default=101)
    return parser


def _load(args: argparse.Namespace) -> ProblemSpec:
    if args.preset:
        return get_preset(args.preset)
    if not args.spec:
        raise SpecParseError("give a spec file or --preset", field="document")
    return load_spec(args.spec)


# --- Commands ---


def _emit(result: RunResult, out: TextIO) -> None:
    out.write(result.to_json())
    out.write("\n")


def _solve(spec: ProblemSpec, timings: dict[str, float]) -> solver_ops.PolicySolution:
    started = time.perf_counter()
    solution = solver_ops.solve(spec.model, spec.payoff, spec.numerics)
    timings["solve"] = time.perf_counter() - started
    return solution


def cmd_solve(spec: ProblemSpec, args: argparse.Namespace, out: TextIO) -> int:
    result = RunResult(spec, "solve")
    result.solution = _solve(spec, result.timings)
    _emit(result, out)
    return EXIT_OK if result.solution.degeneracy is solver_ops.Degeneracy.NONE else EXIT_DEGENERATE


def cmd_simulate(spec: ProblemSpec, args: argparse.Namespace, out: TextIO) -> int:
    result = RunResult(spec, "simulate")
    numerics = spec.numerics
    lower, upper = args.lower, args.upper
    if lower is None or upper is None:
        result.solution = _solve(spec, result.timings)
        lower = result.solution.s if lower is None else lower
        upper = result.solution.S if upper is None else upper
    if spec.payoff.restart.mode is RestartMode.FIXED:
        strategy = Strategy.fixed_restart(spec.payoff.restart.point, upper)  # type: ignore[arg-type]
    else:
        strategy = Strategy.band(lower, upper)

    started = time.perf_counter()
    result.simulation = simulate_ops.run_policy(
        spec.model,
        spec.payoff,
        strategy,
        args.cycles or numerics.mc_cycles,
        numerics.dt,
        numerics.seed if args.seed is None else args.seed,
        workers=numerics.workers,
        max_time=numerics.max_time,
    )
    result.timings["simulate"] = time.perf_counter() - started
    _emit(result, out)
    return EXIT_OK


def cmd_verify(spec: ProblemSpec, args: argparse.Namespace, out: TextIO) -> int:
    result = RunResult(spec, "verify")
    solution = _solve(spec, result.timings)
    result.solution = solution
    if solution.degeneracy is not solver_ops.Degeneracy.NONE:
        _emit(result, out)
        return EXIT_DEGENERATE
    started = time.perf_counter()
    report = simulate_ops.verify_solution(
        spec.model,
        spec.payoff,
        solution,
        spec.numerics,
        n_cycles=args.cycles,
        grid_cycles=args.grid_cycles,
        delta=args.delta,
        supermartingale=args.supermartingale,
    )
    result.timings["verify"] = time.perf_counter() - started
    result.verification = report
    result.simulation = report.simulation
    _emit(result, out)
    return EXIT_OK if report.passed else EXIT_ERROR


def _with_param(spec: ProblemSpec, name: str, value: float) -> ProblemSpec:
    """Copy of ``spec`` with one parameter replaced."""
    model, payoff = spec.model, spec.payoff
    if name == "K":
        return replace(spec, payoff=replace(payoff, K=value))
    if name in _LADDER_PARAMS:
        return replace(spec, model=replace(model, **{name: value}))
    if name == "restart.point":
        return replace(spec, payoff=replace(payoff, restart=Restart.fixed(value)))
    head, _, index = name.partition(".")
    if head in ("gamma", "h", "jump_law") and index.isdigit():
        i = int(index)
        target: Gamma | Cost | JumpLaw | None = {"gamma": payoff.gamma, "h": payoff.h, "jump_law": model.jump_law}[head]
        if target is None or i >= len(target.params):
            raise SpecParseError(f"'{name}' is not a parameter of this problem", field=name)
        params = list(target.params)
        params[i] = value
        updated = type(target)(target.kind, tuple(params))  # type: ignore[arg-type]
        if isinstance(updated, JumpLaw):
            return replace(spec, model=replace(model, jump_law=updated))
        return replace(spec, payoff=replace(payoff, **{"gamma" if head == "gamma" else "h": updated}))
    raise SpecParseError(f"cannot sweep '{name}'", field=name)


def _shares_ladder(name: str, payoff: PayoffSpec) -> bool:
    if name in _LADDER_PARAMS or name.startswith("jump_law."):
        return False
    # a cost that may vanish changes whether the descending kernel is needed
    return not (name.startswith("h.") and payoff.h.is_zero)


def cmd_sweep(spec: ProblemSpec, args: argparse.Namespace, out: TextIO) -> int:
    if args.steps < 1:
        raise SpecParseError("--steps must be positive", field="steps")
    values = np.linspace(args.start, args.stop, args.steps)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([args.param, "rho_star", "s", "S", "degeneracy"])

    shared = None
    if _shares_ladder(args.param, spec.payoff):
        shared = ladder_ops.build_ladder_system(spec.model, spec.numerics, descending=not spec.payoff.h.is_zero)
    for value in values:
        point = _with_param(spec, args.param, float(value))
        try:
            solution = solver_ops.solve(point.model, point.payoff, point.numerics, ladder=shared)
        except (UnboundedError, NoThresholdError) as exc:
            writer.writerow([float(value), "", "", "", exc.degeneracy])
            continue
        writer.writerow([float(value), solution.rho_star, solution.s, solution.S, solution.degeneracy.value])
    return EXIT_OK


def cmd_ladder(spec: ProblemSpec, args: argparse.Namespace, out: TextIO) -> int:
    ladder = ladder_ops.build_ladder_system(spec.model, spec.numerics, descending=False)
    x = np.linspace(0.0, args.z_max, args.points)
    columns: list[Any] = [x, ladder.pi_bar_h(x)]
    header = ["q", "delta_h", "x", "pi_bar_h"]
    if args.potential:
        u = potential_ops.potential_for(ladder, args.z_max, spec.numerics)
        columns.append(u(x))
        header.append("u")
    q = "" if ladder.q is None else ladder.q
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns, strict=True):
        writer.writerow([q, ladder.delta_h, *(float(v) for v in row)])
    return EXIT_OK


def cmd_transform(spec: ProblemSpec, args: argparse.Namespace, out: TextIO) -> int:
    ladder = ladder_ops.build_ladder_system(spec.model, spec.numerics, descending=not spec.payoff.h.is_zero)
    g = transform_ops.gain_rate(ladder, spec.payoff)
    x = np.linspace(args.start, args.stop, args.points)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "hat_h", "generator_gamma", "g"])
    for row in zip(x, g.hat_h(x), g.generator(x), g(x), strict=True):
        writer.writerow([float(v) for v in row])
    return EXIT_OK


_COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "ladder": cmd_ladder,
    "transform": cmd_transform,
}

_DOCUMENT_COMMANDS = frozenset({"solve", "simulate", "verify"})


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = out or sys.stdout
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        spec = _load(args)
    except SpecParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    try:
        return _COMMANDS[args.command](spec, args, out)
    except (UnboundedError, NoThresholdError) as exc:
        print(f"degenerate problem ({exc.degeneracy}): {exc}", file=sys.stderr)
        if args.command in _DOCUMENT_COMMANDS:
            result = RunResult(spec, args.command, degeneracy=exc.degeneracy)
            result.error = {"type": type(exc).__name__, "message": str(exc)}
            _emit(result, out)
        return EXIT_DEGENERATE
    except (LevyImpulseError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.command in _DOCUMENT_COMMANDS:
            result = RunResult(spec, args.command, error={"type": type(exc).__name__, "message": str(exc)})
            _emit(result, out)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
