"""Exception types shared across the package."""


class PreviewSafeError(Exception):
    """Base class for all errors raised by this package."""


class EmptySetError(PreviewSafeError):
    """An operation required a nonempty set but got an empty one."""


class UnboundedError(PreviewSafeError):
    """A support or volume query is unbounded."""


class DimensionTooLargeError(PreviewSafeError):
    """Vertex enumeration requested above the configured dimension cap."""


class PointOutsideBoxError(PreviewSafeError):
    """Barycentric weights requested for a point outside the hyperbox."""


class RowBlowupError(PreviewSafeError):
    """A projection iterate exceeded the halfspace row guardrail."""


class ImageNotExactError(PreviewSafeError):
    """The exact halfspace form of a linear image could not be computed."""


class SeedNotInvariantError(PreviewSafeError):
    """The seed set handed to the growth iteration is not controlled invariant."""


class EmptyInvariantError(PreviewSafeError):
    """The closed-form invariant set is empty for the given problem."""


class InvalidParametersError(PreviewSafeError):
    """Scalar case-study parameters violate the validity conditions."""


class RiccatiDivergedError(PreviewSafeError):
    """The Riccati recursion failed to converge or stabilize."""


class ScriptExhaustedError(PreviewSafeError):
    """The disturbance script is too short for the requested rollout."""


class NumericalError(PreviewSafeError):
    """An internal numerical routine failed (LP cycling cap, lost feasibility)."""


class ConfigError(PreviewSafeError):
    """A configuration file or CLI argument set is malformed."""
