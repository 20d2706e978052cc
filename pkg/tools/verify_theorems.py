"""
verify_theorems Tool

Runs the dense verification suite and reports one row per check.
"""

from typing import Optional, TypedDict
import sys
import os

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from logger import get_logger
from spacetime.analysis import CheckReport, run_theorem_suite, summarize, write_reports_csv
from spacetime.errors import ConfigError, SpaceTimeError


DEFAULT_NS = [3, 4, 8]
DEFAULT_MS = [2, 3, 7]
DEFAULT_EPS = [1.0, 0.5, 0.1, 0.01]
DEFAULT_SCHEMES = ["bdf1", "bdf2"]
DEFAULT_DELTAS = [0.5, 0.9]


class VerifyTheoremsOutput(TypedDict):
    """Structured output for verify_theorems tool."""
    ok: bool
    reason: str
    error_kind: Optional[str]
    counts: dict
    reports: list[dict]
    table: str


def format_reports(reports: list[CheckReport]) -> str:
    header = f"{'check':<30} {'status':<6} {'scheme':<6} {'N':>3} {'m':>3} {'eps':>8}  {'measured':>10} {'bound':>10}"
    lines = [header, "-" * len(header)]
    for r in reports:
        p = r.params
        eps = p.get("eps", "")
        eps = f"{eps:.3g}" if isinstance(eps, float) else str(eps)
        measured = f"{r.measured:.3e}" if r.measured is not None else "-"
        bound = f"{r.bound:.3e}" if r.bound is not None else "-"
        lines.append(
            f"{r.name:<30} {r.status:<6} {str(p.get('scheme', '')):<6} {str(p.get('N', '')):>3} "
            f"{str(p.get('m', '')):>3} {eps:>8}  {measured:>10} {bound:>10}"
        )
        if r.status in ("fail", "skip") and r.details:
            lines.append(f"    {r.details}")
    return "\n".join(lines)


def _validate(Ns, ms, eps_values, schemes, deltas) -> None:
    for eps in eps_values:
        if not 0.0 < eps <= 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1], got {eps}")
    for N in Ns:
        if N < 1:
            raise ConfigError(f"N must be positive, got {N}")
    for m in ms:
        if m < 1:
            raise ConfigError(f"m must be positive, got {m}")
    for scheme in schemes:
        if scheme not in DEFAULT_SCHEMES:
            raise ConfigError(f"scheme must be one of {DEFAULT_SCHEMES}, got '{scheme}'")
    for delta in deltas:
        if not 0.0 < delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {delta}")


def verify_theorems(
    Ns: Optional[list[int]] = None,
    ms: Optional[list[int]] = None,
    eps_values: Optional[list[float]] = None,
    schemes: Optional[list[str]] = None,
    deltas: Optional[list[float]] = None,
    cap: int = 2000,
    seed: int = 0,
    output: Optional[str] = None,
) -> VerifyTheoremsOutput:
    """
    Run every dense check over the instance matrix.

    Args:
        Ns, ms, eps_values, schemes, deltas: instance matrix; defaults cover
            N in {3, 4, 8}, m in {2, 3, 7}, four eps values and both schemes.
        cap: largest N*J assembled densely.
        seed: seed for the random vectors of the fast-inverse check.
        output: optional CSV path for the measured-vs-bound table.

    Returns:
        VerifyTheoremsOutput; ok is False when any check fails.
    """
    log = get_logger()
    Ns = DEFAULT_NS if Ns is None else Ns
    ms = DEFAULT_MS if ms is None else ms
    eps_values = DEFAULT_EPS if eps_values is None else eps_values
    schemes = DEFAULT_SCHEMES if schemes is None else schemes
    deltas = DEFAULT_DELTAS if deltas is None else deltas
    try:
        _validate(Ns, ms, eps_values, schemes, deltas)
        reports = run_theorem_suite(Ns, ms, eps_values, schemes, deltas, cap=cap, seed=seed)
    except ConfigError as e:
        log.error("Invalid verification settings", e)
        return VerifyTheoremsOutput(ok=False, reason=str(e), error_kind="config",
                                    counts={}, reports=[], table="")
    except SpaceTimeError as e:
        log.error("Verification aborted", e)
        return VerifyTheoremsOutput(ok=False, reason=str(e), error_kind="solver",
                                    counts={}, reports=[], table="")

    if output:
        write_reports_csv(reports, output)
    counts = summarize(reports)
    failed = counts.get("fail", 0)
    return VerifyTheoremsOutput(
        ok=failed == 0,
        reason="All checks passed." if failed == 0 else f"{failed} check(s) failed.",
        error_kind=None if failed == 0 else "solver",
        counts=counts,
        reports=[r.to_dict() for r in reports],
        table=format_reports(reports),
    )
