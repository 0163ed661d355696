"""Exception types shared across the package."""


class HolostreamError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(HolostreamError):
    """Invalid or unknown configuration content.

    `key` names the offending configuration entry (dotted path) so callers
    can report it mechanically.
    """

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class TableError(HolostreamError):
    """Distortion-table file violates its invariants."""


class InsufficientLinksError(HolostreamError):
    """Fewer than two candidate links; the segment is an outage."""


class NoFeasibleDecisionError(HolostreamError):
    """No capacity-deliverable tuple exists on the decision grid."""
