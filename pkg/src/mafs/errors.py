"""Exception types shared across the package."""


class MafsError(Exception):
    """Base class for all package errors."""


class DimensionError(MafsError):
    """Operand shapes are inconsistent."""


class NumericError(MafsError):
    """Non-finite values where finite ones are required."""


class ContractError(MafsError):
    """An API precondition was violated (e.g. stale backward cache)."""


class DegenerateTargetError(MafsError):
    """Target vector carries no usable signal (constant, single class)."""


class DegeneratePriorError(MafsError):
    """Filter output is constant and cannot be normalized."""


class TrainingError(MafsError):
    """Optimization diverged."""


class MetricError(MafsError):
    """A metric is undefined for the given inputs."""


class EffectSizeLookupError(MafsError):
    """Requested an effect-size grid cell that is not defined."""


class SearchError(MafsError):
    """Hyperparameter search could not produce any successful trial."""
