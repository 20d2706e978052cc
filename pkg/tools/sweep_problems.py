"""
sweep_problems Tool

Runs a base configuration over lists of N and m values, once per
preconditioner, and returns the comparison table.
"""

from typing import Optional, TypedDict
import sys
import os

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from logger import get_logger
from run_config import ResultRecord, RunConfig, write_results_csv
from spacetime.errors import ConfigError, SpaceTimeError
from tools.run_problem import solve_config


class SweepProblemsOutput(TypedDict):
    """Structured output for sweep_problems tool."""
    ok: bool
    reason: str
    error_kind: Optional[str]
    records: list[dict]
    table: str


def format_table(records: list[ResultRecord]) -> str:
    """Plain-text table with one row per (N, J) and one column group per preconditioner."""
    if not records:
        return ""
    preconditioners = list(dict.fromkeys(r.preconditioner for r in records))
    sizes = list(dict.fromkeys((r.N, r.J) for r in records))
    by_key = {(r.N, r.J, r.preconditioner): r for r in records}
    show_error = any(r.error is not None for r in records)

    header = f"{'N':>6} {'J':>8} {'DoF':>10}"
    for name in preconditioners:
        header += f" | {name.upper() + ' Iter':>9} {'CPU':>8} {'RES':>9}"
        if show_error:
            header += f" {'E':>9}"
    lines = [header, "-" * len(header)]
    for N, J in sizes:
        line = f"{N:>6} {J:>8} {N * J:>10}"
        for name in preconditioners:
            r = by_key.get((N, J, name))
            if r is None:
                line += f" | {'-':>9} {'-':>8} {'-':>9}" + (f" {'-':>9}" if show_error else "")
                continue
            iters = f"{r.iterations}" + ("" if r.converged else "*")
            line += f" | {iters:>9} {r.cpu:>8.2f} {r.res:>9.2e}"
            if show_error:
                line += f" {r.error:>9.2e}" if r.error is not None else f" {'-':>9}"
        lines.append(line)
    return "\n".join(lines)


def sweep_problems(
    base: RunConfig | dict,
    N_values: Optional[list[int]] = None,
    m_values: Optional[list[int]] = None,
    preconditioners: Optional[list[str]] = None,
) -> SweepProblemsOutput:
    """
    Solve the base configuration for every (N, m, preconditioner) combination.

    Args:
        base: Configuration supplying every other setting.
        N_values: Time step counts; defaults to [base.N].
        m_values: Interior points per dimension; defaults to [base.m].
        preconditioners: Defaults to ["bec", "bc"].

    Returns:
        SweepProblemsOutput with the records and a formatted table.
    """
    log = get_logger()
    records: list[ResultRecord] = []
    try:
        if isinstance(base, dict):
            base = RunConfig.from_dict(base)
        base.validate()
        for N in N_values or [base.N]:
            for m in m_values or [base.m]:
                for name in preconditioners or ["bec", "bc"]:
                    config = base.with_overrides(N=N, m=m, preconditioner=name, output=None, field_dump=None)
                    record, _, _ = solve_config(config)
                    log.info(f"sweep cell N={N} m={m} {name}", {"iterations": record.iterations})
                    records.append(record)
    except ConfigError as e:
        log.error("Invalid sweep configuration", e)
        return SweepProblemsOutput(ok=False, reason=str(e), error_kind="config",
                                   records=[r.to_dict() for r in records], table=format_table(records))
    except SpaceTimeError as e:
        log.error("Sweep failed", e)
        return SweepProblemsOutput(ok=False, reason=str(e), error_kind="solver",
                                   records=[r.to_dict() for r in records], table=format_table(records))

    if base.output:
        write_results_csv(records, base.output)
    failed = [r for r in records if not r.converged]
    return SweepProblemsOutput(
        ok=not failed,
        reason="All cells converged." if not failed else f"{len(failed)} cell(s) did not converge.",
        error_kind=None if not failed else "solver",
        records=[r.to_dict() for r in records],
        table=format_table(records),
    )
