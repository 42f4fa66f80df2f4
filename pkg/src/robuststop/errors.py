"""Exception types shared across the package.

Everything derives from ValueError so callers that just want "bad input"
semantics can catch one class, while tests can pin down the precise failure.
"""


class GridError(ValueError):
    """Incompatible time grids (mismatched spacing or junction time)."""


class PathError(ValueError):
    """Malformed path data (wrong length, nonzero anchor, bad shape)."""


class SizeError(ValueError):
    """A construction or enumeration exceeds its configured cap."""


class StrategyError(ValueError):
    """A control strategy is incomplete or inconsistent with its tree."""


class RuleError(ValueError):
    """A stopping rule is incomplete or not adapted."""


class PartitionError(ValueError):
    """Predicates fail to partition the reachable prefixes at a pasting time."""


class ConfigError(ValueError):
    """Rejected CLI/JSON configuration (unknown key, missing field, bad value)."""
