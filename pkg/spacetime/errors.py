"""
Space-time solver errors.

Every failure the library raises derives from SpaceTimeError so the CLI can
map it to an exit code in one place.
"""


class SpaceTimeError(Exception):
    """Base class for all solver errors."""


class ContractViolation(SpaceTimeError, ValueError):
    """Operand shapes or lengths do not match the operator."""


class DomainError(SpaceTimeError, ValueError):
    """A parameter lies outside the range the method is defined on."""


class ConfigError(SpaceTimeError):
    """Invalid run configuration or incompatible problem/solver pair."""


class InnerSolverError(SpaceTimeError):
    """A spatial block solve failed (singular block, multigrid divergence)."""


class ConjugateSymmetryError(SpaceTimeError):
    """Preconditioner output carries an imaginary part beyond roundoff."""