# Solver tools package

from .run_problem import run_problem, RunProblemOutput
from .sweep_problems import sweep_problems, SweepProblemsOutput
from .verify_theorems import verify_theorems, VerifyTheoremsOutput

__all__ = [
    "run_problem",
    "RunProblemOutput",
    "sweep_problems",
    "SweepProblemsOutput",
    "verify_theorems",
    "VerifyTheoremsOutput",
]
