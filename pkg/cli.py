"""
Space-Time Solver Command Line

Orchestrates the solver tools:
- run: solve one configured problem
- sweep: compare preconditioners over N and m
- verify: run the dense verification suite

Exit codes: 0 success, 1 solver failure, 2 configuration error.
"""

import argparse
import sys
from typing import Optional, Sequence

from logger import LogLevel, SolverLogger, get_logger, set_logger
from run_config import (
    DISCRETIZATIONS,
    INNER_SOLVERS,
    PRECONDITIONERS,
    ResultRecord,
    TIME_PATHS,
    RunConfig,
    load_config,
)
from spacetime.errors import ConfigError, SpaceTimeError
from spacetime.problems import EXAMPLES, SCHEME_ORDERS
from tools.run_problem import run_problem
from tools.sweep_problems import format_table, sweep_problems
from tools.verify_theorems import verify_theorems


EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2


# =============================================================================
# TOOL DISPATCHER (with logging)
# =============================================================================

def execute_tool(name: str, args: dict) -> dict:
    """Execute a tool by name with given arguments."""
    log = get_logger()
    log.tool_call(name, args)

    if name == "run_problem":
        result = run_problem(**args)
    elif name == "sweep_problems":
        result = sweep_problems(**args)
    elif name == "verify_theorems":
        result = verify_theorems(**args)
    else:
        result = {"ok": False, "reason": f"Unknown tool: {name}", "error_kind": "config"}
        log.error(f"Unknown tool: {name}")

    log.tool_result(name, result)
    return result


def exit_code(result: dict) -> int:
    if result.get("ok"):
        return EXIT_OK
    return EXIT_CONFIG if result.get("error_kind") == "config" else EXIT_SOLVER


# =============================================================================
# ORCHESTRATOR
# =============================================================================

class SpaceTimeCli:
    """
    Thin orchestrator: builds tool arguments, dispatches, formats text.

    Holds no solver state between calls.
    """

    def __init__(self, debug: bool = False):
        self.debug = debug
        if debug:
            set_logger(SolverLogger(enabled=True, min_level=LogLevel.DEBUG))
        self.log = get_logger()

    def run(self, config: RunConfig) -> tuple[dict, str]:
        result = execute_tool("run_problem", {"config": config.to_dict()})
        if not result["record"]:
            return result, f"Error: {result['reason']}"
        record = ResultRecord(**result["record"])
        return result, format_table([record]) + f"\n\n{result['reason']}"

    def sweep(self, config: RunConfig, N_values, m_values, preconditioners) -> tuple[dict, str]:
        result = execute_tool("sweep_problems", {
            "base": config.to_dict(),
            "N_values": N_values,
            "m_values": m_values,
            "preconditioners": preconditioners,
        })
        text = result["table"]
        if not result["ok"]:
            text = (text + "\n\n" if text else "") + f"Error: {result['reason']}"
        return result, text

    def verify(self, **kwargs) -> tuple[dict, str]:
        result = execute_tool("verify_theorems", kwargs)
        if result["error_kind"] == "config":
            return result, f"Error: {result['reason']}"
        summary = ", ".join(f"{k}={v}" for k, v in result["counts"].items())
        return result, f"{result['table']}\n\n{summary}\n{result['reason']}"


# =============================================================================
# ARGUMENT PARSING
# =============================================================================

def _epsilon(value: str):
    if value == "auto":
        return value
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"epsilon must be 'auto' or a number, got '{value}'")


def _int_list(value: str) -> list[int]:
    return [int(v) for v in value.split(",") if v]


def _float_list(value: str) -> list[float]:
    return [float(v) for v in value.split(",") if v]


def _str_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--problem", choices=sorted(EXAMPLES))
    parser.add_argument("--scheme", choices=sorted(SCHEME_ORDERS))
    parser.add_argument("--N", type=int, dest="N")
    parser.add_argument("--m", type=int, dest="m")
    parser.add_argument("--T", type=float, dest="T")
    parser.add_argument("--discretization", choices=DISCRETIZATIONS)
    parser.add_argument("--preconditioner", choices=PRECONDITIONERS)
    parser.add_argument("--epsilon", type=_epsilon)
    parser.add_argument("--inner-solver", dest="inner_solver", choices=INNER_SOLVERS)
    parser.add_argument("--mg-cycles", dest="mg_cycles", type=int)
    parser.add_argument("--mg-omega", dest="mg_omega", type=float)
    parser.add_argument("--no-reduction", dest="reduction", action="store_const", const=False)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--time-path", dest="time_path", choices=TIME_PATHS)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--restart", type=int)
    parser.add_argument("--maxiter", type=int)
    parser.add_argument("--output", help="CSV file for result records")
    parser.add_argument("--field-dump", dest="field_dump", help="CSV file for the final-time field")
    parser.add_argument("--seed", type=int)


CONFIG_KEYS = (
    "problem", "scheme", "N", "m", "T", "discretization", "preconditioner", "epsilon",
    "inner_solver", "mg_cycles", "mg_omega", "reduction", "workers", "time_path",
    "tol", "restart", "maxiter", "output", "field_dump", "seed",
)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = load_config(args.config) if args.config else RunConfig()
    return base.with_overrides(**{key: getattr(args, key) for key in CONFIG_KEYS})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spacetime", description="All-at-once space-time solver")
    parser.add_argument("--debug", "-d", action="store_true", help="verbose logging and log history")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve one configured problem")
    _add_config_flags(run)

    sweep = sub.add_parser("sweep", help="compare preconditioners over N and m")
    _add_config_flags(sweep)
    sweep.add_argument("--N-values", dest="N_values", type=_int_list)
    sweep.add_argument("--m-values", dest="m_values", type=_int_list)
    sweep.add_argument("--preconditioners", type=_str_list)

    verify = sub.add_parser("verify", help="run the dense verification suite")
    verify.add_argument("--N-values", dest="Ns", type=_int_list)
    verify.add_argument("--m-values", dest="ms", type=_int_list)
    verify.add_argument("--eps-values", dest="eps_values", type=_float_list)
    verify.add_argument("--schemes", type=_str_list)
    verify.add_argument("--deltas", type=_float_list)
    verify.add_argument("--cap", type=int, default=2000)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--output", help="CSV file for the check table")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cli = SpaceTimeCli(debug=args.debug)

    try:
        if args.command == "run":
            result, text = cli.run(config_from_args(args))
        elif args.command == "sweep":
            result, text = cli.sweep(config_from_args(args), args.N_values, args.m_values,
                                     args.preconditioners)
        else:
            result, text = cli.verify(Ns=args.Ns, ms=args.ms, eps_values=args.eps_values,
                                      schemes=args.schemes, deltas=args.deltas, cap=args.cap,
                                      seed=args.seed, output=args.output)
    except ConfigError as e:
        get_logger().error("Invalid configuration", e)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SpaceTimeError as e:
        get_logger().error("Solver failure", e)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_SOLVER

    print(text)
    if args.debug:
        print("\n--- Log History ---")
        print(get_logger().get_history_json())
    return exit_code(result)


if __name__ == "__main__":
    sys.exit(main())
