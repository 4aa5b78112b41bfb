"""Exception taxonomy shared across the package."""


class KsubError(Exception):
    """Base class for all package-specific errors."""


class DimsMismatch(KsubError):
    """Two objects built for different (n, k) dimensions were combined."""


class ElementAlreadyAssigned(KsubError):
    """A marginal gain was requested for an element that already has a type."""


class TypeOutOfRange(KsubError):
    """A type index outside 1..k was used."""


class InstanceTooLarge(KsubError):
    """An exhaustive operation was asked to enumerate past its limit."""


class InfeasibleState(KsubError):
    """An assignment's support is not independent in the given matroid."""


class BudgetInfeasible(KsubError):
    """Individual budgets sum to more than the ground-set size."""


class NotKSubmodular(KsubError):
    """An operation that presupposes k-submodularity got a violating instance."""


class ActionSpaceTooLarge(KsubError):
    """Enumerating feasible actions would exceed the configured cap."""


class HorizonExhausted(KsubError):
    """Exploration alone would exceed the bandit horizon."""


class ValueOutOfRange(KsubError):
    """A value violated a required numeric range (e.g. rewards outside [0,1])."""


class InvalidSchemeParams(KsubError):
    """An edge-weight sampling scheme was given invalid parameters."""


class InvalidProbability(KsubError):
    """A sampling rule produced weights that are not a probability vector."""


class UnsupportedFormat(KsubError):
    """An unknown output format was requested."""


class NoSeries(KsubError):
    """A report with no data series cannot be rendered."""


class FormatError(KsubError):
    """A text file (instance, graph, config) failed to parse."""


class ConfigError(KsubError):
    """Invalid configuration or command-line arguments."""
