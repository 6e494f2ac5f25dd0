"""Exception types. Each carries the CLI exit code it maps to."""


class HeatBorelError(Exception):
    exit_code = 1


class ConfigError(HeatBorelError, ValueError):
    exit_code = 2


class DomainError(HeatBorelError, ValueError):
    exit_code = 3


class PoleError(DomainError):
    """sh(omega t) vanishes with omega t != 0."""


class CostCapExceeded(HeatBorelError, RuntimeError):
    exit_code = 4


class ToleranceNotMet(HeatBorelError, RuntimeError):
    exit_code = 5


class TruncationWarning(UserWarning):
    """A truncation bound exceeds the requested tolerance."""


class ConditioningWarning(UserWarning):
    """A fit matrix is badly conditioned; fitted values may be inaccurate."""
