#!/usr/bin/env python3
"""
zdistill CLI - run protocols, solve optimality conditions, verify

Usage:
    # Iterate a configured protocol, write <prefix>_trace.csv and <prefix>_report.json
    zdistill run --config qubit.cfg --out runs/qubit

    # Optimal points of the three-qubit cycle
    zdistill solve --x-grid 2.6,2.8,3.0

    # Verification suites (qubit, cavity, appendix or all)
    zdistill verify all --out runs/check

Exit codes: 0 success, 1 configuration or input error, 2 yield underflow,
3 failing verification suite. Errors are printed to stderr as JSON.

Author: Development Team
Version: 0.1.0
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .cavity import build_cavity_binding, prepare_initial_state
from .config import RunConfig, load_config, parse_value
from .engine import DensityMatrix, asymptotics, estimate_steps, iterate
from .errors import (
    CompileError,
    ConfigError,
    InvariantViolationError,
    PreconditionError,
    ProtocolParseError,
    YieldUnderflowError,
    ZDistillError,
)
from .protocol import CompiledCycle, compile_cycle, load_program
from .qubit import build_hamiltonians, solve_optimal_condition
from .verify import SUITES, reports_to_json, run_verification, summary_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNDERFLOW = 2
EXIT_SUITE = 3
CONVERGENCE_EPS = 1e-6


def print_error(message: str, **extra: Any) -> None:
    """Emit a JSON error object on stderr."""
    print(json.dumps({"error": message, **extra}), file=sys.stderr)


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _dump(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


# ============================================================================
# run
# ============================================================================

def build_run(config: RunConfig) -> Tuple[CompiledCycle, DensityMatrix, Dict[str, Any]]:
    """
    Compile the configured protocol and build the initial state.

    Returns:
        (cycle, rho0, extra report fields)

    Raises:
        ConfigError: Bad parameters, missing protocol file or wrong weight count
    """
    extra: Dict[str, Any] = {}
    if config.model == "qubit":
        p = config.qubit_params()
        binding = build_hamiltonians(p)
        durations = dict(t_A=p.t_A, tau_A=p.tau_A, t_B=p.t_B, tau_B=p.tau_B)
    else:
        p = config.cavity_params()
        binding = build_cavity_binding(p)
        t_B = p.preparation_time if config.protocol_name == "prep-b" else p.t_B
        durations = dict(t_A=p.t_A, tau_A=p.tau_A, t_B=t_B, tau_B=p.tau_B)

    try:
        program = load_program(config.protocol_name, **durations)
    except OSError as e:
        raise ConfigError(f"cannot read protocol {config.protocol_name}: {e}") from e
    cycle = compile_cycle(program, binding)
    dim = cycle.matrix.shape[0]

    state = config.initial_state
    if state == "maximally-mixed":
        rho0 = DensityMatrix.maximally_mixed(dim)
    elif state == "vacuum-prepared":
        prepared = prepare_initial_state(DensityMatrix.maximally_mixed(dim), p, config.prep_reps)
        rho0 = prepared.state
        extra["preparation"] = {"reps": prepared.reps, "yield": prepared.yield_, "residual": prepared.residual}
    else:
        if len(state) != dim:
            raise ConfigError(f"initial_state has {len(state)} weights, model dimension is {dim}")
        try:
            rho0 = DensityMatrix.from_diagonal(state)
        except InvariantViolationError as e:
            raise ConfigError(f"invalid initial_state: {e}") from e
    return cycle, rho0, extra


def cmd_run(config: RunConfig, prefix: Optional[str] = None) -> int:
    """
    Iterate the configured cycle and write the trace and the asymptotic report.

    Args:
        config: Parsed configuration
        prefix: Output prefix (defaults to config.output)

    Returns:
        Exit code
    """
    prefix = prefix or config.output
    try:
        cycle, rho0, extra = build_run(config)
        report = asymptotics(cycle, rho0)
        target = report.effective_target
        if target is None:
            logger.warning("several populated dominant eigenvectors; tracing fidelity against u_0")
            target = report.target
        trace = iterate(cycle, rho0, config.n_iterations, target)
    except YieldUnderflowError as e:
        print_error(str(e), last_valid_n=e.last_valid_n)
        return EXIT_UNDERFLOW
    except (ConfigError, ProtocolParseError, CompileError, PreconditionError, InvariantViolationError) as e:
        print_error(str(e))
        return EXIT_INPUT
    except ZDistillError as e:
        print_error(str(e), kind=type(e).__name__)
        return EXIT_INPUT

    n, final_yield, fidelity, purity = trace.final
    payload = {
        "config": config.to_dict(),
        "seed": config.seed,
        "protocol": cycle.source.to_text(),
        "asymptotics": report.to_dict(),
        "final": {"n": n, "yield": final_yield, "fidelity": fidelity, "purity": purity},
        "estimated_steps": estimate_steps(report, CONVERGENCE_EPS),
        **extra,
    }
    write_text(Path(f"{prefix}_trace.csv"), trace.to_csv())
    write_text(Path(f"{prefix}_report.json"), _dump(payload))
    logger.info("run finished: N=%d fidelity=%.12f yield=%.6g", n, fidelity, final_yield)
    return EXIT_OK


# ============================================================================
# solve
# ============================================================================

def cmd_solve(x_grid: Sequence[float], y_max: float, prefix: Optional[str] = None) -> int:
    """
    Solve the optimality condition on every grid value.

    Values violating the solver precondition are reported as skipped.
    """
    entries: List[Dict[str, Any]] = []
    for x in x_grid:
        try:
            roots = [point.to_record() for point in solve_optimal_condition(x, y_max)]
            entries.append({"x": x, "status": "ok", "reason": None, "roots": roots})
        except PreconditionError as e:
            logger.warning("skipping x=%g: %s", x, e)
            entries.append({"x": x, "status": "skipped", "reason": str(e), "roots": []})
    text = _dump(entries)
    print(text, end="")
    if prefix:
        write_text(Path(f"{prefix}_solve.json"), text)
    return EXIT_OK


# ============================================================================
# verify
# ============================================================================

def cmd_verify(suite: str, seed: int, prefix: Optional[str] = None) -> int:
    """Run verification suites; print the summary and optionally write the JSON report."""
    reports = run_verification(suite, seed=seed)
    print(summary_table(reports), end="")
    if prefix:
        write_text(Path(f"{prefix}_verify.json"), reports_to_json(reports))
    failures = [f"{r.suite}.{name}" for r in reports for name in r.failures]
    if failures:
        print_error("verification failed", failed_checks=failures)
        return EXIT_SUITE
    return EXIT_OK


# ============================================================================
# Entry point
# ============================================================================

def _parse_grid(text: str) -> Tuple[float, ...]:
    value = parse_value(text)
    values = value if isinstance(value, tuple) else (value,)
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")
    return tuple(float(v) for v in values)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='key = value configuration file')
    common.add_argument('--out', help='output path prefix')
    common.add_argument('--seed', type=int, help='seed for sampled checks (default 42)')
    common.add_argument('--verbose', action='store_true', help='debug logging on stderr')

    parser = argparse.ArgumentParser(
        prog='zdistill',
        description='Purification by repeated conditional measurement',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  zdistill run --config cavity.cfg --out runs/cavity
  zdistill solve --x-grid 2.6,2.8,3.0
  zdistill verify appendix
        """
    )
    subparsers = parser.add_subparsers(dest='command', help='Commands')

    subparsers.add_parser('run', parents=[common], help='Iterate a configured protocol')

    solve_parser = subparsers.add_parser('solve', parents=[common], help='Solve the optimality condition')
    solve_parser.add_argument('--x-grid', type=_parse_grid, help='comma-separated g t values')
    solve_parser.add_argument('--y-max', type=float, help='upper end of the omega t bracket')

    verify_parser = subparsers.add_parser('verify', parents=[common], help='Run verification suites')
    verify_parser.add_argument('suite', nargs='?', default='all', help=f"{', '.join(SUITES)} or all")
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    return config.with_overrides(seed=args.seed, output=args.out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, 'verbose', False) else logging.WARNING,
        stream=sys.stderr,
        format='%(levelname)s %(name)s: %(message)s',
    )

    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INPUT

    try:
        config = _load(args)
    except ConfigError as e:
        print_error(str(e), details=e.errors)
        return EXIT_INPUT

    if args.command == 'run':
        return cmd_run(config, args.out)
    if args.command == 'solve':
        x_grid = args.x_grid or config.x_grid
        y_max = args.y_max if args.y_max is not None else config.y_max
        return cmd_solve(x_grid, y_max, args.out)

    if args.suite not in SUITES + ('all',):
        parser.print_usage(sys.stderr)
        print_error(f"unknown suite '{args.suite}'", choices=list(SUITES) + ['all'])
        return EXIT_INPUT
    try:
        return cmd_verify(args.suite, config.seed, args.out)
    except ZDistillError as e:
        print_error(str(e))
        return EXIT_SUITE


if __name__ == '__main__':
    sys.exit(main())
