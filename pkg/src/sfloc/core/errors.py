"""Exception hierarchy for the SF-Loc pipeline."""


class SfLocError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(SfLocError):
    """Invalid or unreadable configuration."""


# --- geom ---


class GeometryError(SfLocError):
    """Lie-group or camera-model error."""


class AngleNearPiError(GeometryError):
    """Rotation angle too close to pi for a well-defined logarithm."""


class NonPositiveInverseDepthError(GeometryError):
    """Back-projection asked for a non-positive inverse depth."""


# --- dba ---


class DbaError(SfLocError):
    """Dense bundle adjustment error."""


class DimensionMismatchError(DbaError):
    """Array shapes disagree with the camera grid or each other."""


class InvalidFlowError(DbaError, ValueError):
    """Flow weights or pair grouping outside their valid domain."""


class EmptyPairSetError(DbaError):
    """Frame system assembly got no pairs."""


class IndexMismatchError(DbaError):
    """Pose updates do not line up with a constraint's frame ids."""


# --- fgraph ---


class GraphError(SfLocError):
    """Factor-graph error."""


class EmptySampleListError(GraphError):
    """Preintegration got no IMU samples."""


class TimestampMismatchError(GraphError):
    """State timestamps disagree with a preintegrated interval."""


class MissingStateError(GraphError):
    """A factor references a state key absent from the graph."""


class DanglingFactorError(GraphError):
    """Marginalization found a factor spanning dropped and absent keys."""


class SolverDivergedError(GraphError):
    """The nonlinear solver produced a non-finite cost."""


class InvalidFactorError(GraphError, ValueError):
    """Factor, noise model or IMU sample outside its valid domain."""


# --- simworld ---


class SimulationError(SfLocError):
    """Synthetic world generation error."""


class DegenerateRouteError(SimulationError):
    """Route has fewer than two distinct waypoints."""


# --- mapstore ---


class MapStoreError(SfLocError):
    """Map storage error."""


class MapIoError(MapStoreError):
    """Underlying read/write failure."""


class BadMagicError(MapStoreError):
    """File does not start with the map magic."""


class UnsupportedVersionError(MapStoreError):
    """File version is not understood."""


class ChecksumMismatchError(MapStoreError):
    """CRC32 trailer does not match the file contents (corruption or truncation)."""


class EmptyMapError(MapStoreError):
    """Operation needs at least one map frame."""


class InvalidFrameError(MapStoreError, ValueError):
    """Frame contents or map parameters outside their valid domain."""


# --- localization ---


class LocalizationError(SfLocError):
    """Coarse or fine localization error."""


class DegenerateGeometryError(LocalizationError):
    """Every minimal sample was degenerate."""


class TooFewMatchesError(LocalizationError):
    """Not enough correspondences for pose estimation."""


class MissingOdometryError(LocalizationError):
    """Consecutive queries lack an odometry relative."""


class EmptyQueryBufferError(LocalizationError, ValueError):
    """Retrieval asked for before any query was pushed."""


class InvalidQueryError(LocalizationError, ValueError):
    """Query or localizer parameter outside its valid domain."""


# --- evaluation ---


class EvaluationError(SfLocError):
    """Metric computation error."""


class EmptyLogError(EvaluationError):
    """Result log has no records."""


class LogFormatError(EvaluationError, ValueError):
    """Result or trajectory log with an unexpected header."""


class InvalidRecordError(EvaluationError, ValueError):
    """Log record with out-of-range values."""
