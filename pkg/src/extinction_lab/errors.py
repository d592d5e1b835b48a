"""Exception hierarchy.

Two families matter to callers: ``ValidationError`` for bad inputs (the CLI
maps these to exit code 2) and ``SolverError`` for numerical failures (exit
code 3). Everything else derives from ``ExtinctionLabError``.
"""


class ExtinctionLabError(Exception):
    pass


class ValidationError(ExtinctionLabError, ValueError):
    pass


class SolverError(ExtinctionLabError, RuntimeError):
    pass


# parameters and meshes
class NonPositive(ValidationError):
    pass


class NotFastDiffusion(ValidationError):
    pass


class SubcriticalityViolated(ValidationError):
    pass


class UnsupportedDimension(ValidationError):
    pass


class ResolutionTooCoarse(ValidationError):
    pass


class MeshMismatch(ValidationError):
    pass


class NegativeWeight(ValidationError):
    pass


# stationary profiles
class InvalidExponent(ValidationError):
    pass


class EmptyBand(ValidationError):
    pass


class NoZeroFound(SolverError):
    pass


class ConvergedToZero(SolverError):
    pass


class MaxIterExceeded(SolverError):
    pass


class LostPositivity(SolverError):
    pass


# spectrum
class DegenerateMass(ValidationError):
    pass


class NoPositiveGap(ValidationError):
    pass


class EigensolverFailure(SolverError):
    pass


# evolution
class PositivityLost(SolverError):
    pass


class LinearSolveFailure(SolverError):
    pass


class NewtonDivergence(SolverError):
    pass


class BeyondExtinction(ValidationError):
    pass


class EmptyTrajectory(ValidationError):
    pass


# asymptotics
class NonPositiveValues(ValidationError):
    pass


class WindowTooShort(ValidationError):
    pass


class NotDecaying(ValidationError):
    pass


class ModeCutoffEmpty(ValidationError):
    pass


class MismatchedProfile(ValidationError):
    pass


# mode systems
class BlowUp(SolverError):
    pass


class HypothesesFailed(ValidationError):
    pass


class EtaBoundViolated(ValidationError):
    pass


class GridTooCoarse(ValidationError):
    pass


# persistence and plotting
class SchemaMismatch(ValidationError):
    pass


class EmptySeries(ValidationError):
    pass
