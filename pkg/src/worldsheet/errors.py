"""Exception types shared across the package."""


class WorldsheetError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateImmersion(WorldsheetError):
    """The tangent map has rank below the worldsheet dimension."""


class DegenerateMetric(WorldsheetError):
    """The induced metric is singular or has the wrong signature."""


class GaugeFailure(WorldsheetError):
    """Normal-frame construction degenerated (even after reseeding)."""


class NullBoundary(WorldsheetError):
    """The boundary is tangent to the light cone; its normal cannot be unit-normalized."""


class InvalidParameters(WorldsheetError):
    """Scenario parameters outside the admissible range."""


class InconsistentGeometry(WorldsheetError):
    """A cross-check identity between two computation paths failed."""


class ConstraintBlowup(WorldsheetError):
    """Gauge constraints exceeded the blowup threshold during evolution."""


class EndpointCollision(WorldsheetError):
    """String endpoints fell below grid resolution (terminal collapse event)."""
