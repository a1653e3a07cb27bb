"""Error types shared across the library.

Every contract violation raises a subclass of :class:`FeatwarpError` with a
stable ``variant`` string. The CLI serializes errors as JSON on stderr using
that variant, and out-of-process consumers match on it rather than on the
Python class name.
"""

from __future__ import annotations


class FeatwarpError(Exception):
    """Base class for all library errors. ``variant`` is a stable identifier."""

    variant: str = "error"

    def to_json_dict(self) -> dict:
        return {"error": self.variant, "message": str(self)}


class InvalidSampleError(FeatwarpError):
    """A sample (e.g. a depth value) violates an operation precondition."""

    variant = "invalid-sample"


class ProjectionSingularityError(FeatwarpError):
    """Projection of a point with zero camera-frame depth."""

    variant = "projection-singularity"


class DimensionMismatchError(FeatwarpError):
    """Array shapes do not agree where the contract requires equality."""

    variant = "dimension-mismatch"


class NonFiniteError(FeatwarpError):
    """An input contains NaN or infinity where finite values are required."""

    variant = "non-finite"


class ConfigError(FeatwarpError):
    """Invalid configuration: bad field values, inconsistent setup, bad JSON."""

    variant = "config-error"


class StepRangeError(FeatwarpError):
    """A schedule step index outside [0, total_steps]."""

    variant = "step-out-of-range"


class TensorFormatError(FeatwarpError):
    """Base for tensor container format violations."""

    variant = "tensor-format"


class BadMagicError(TensorFormatError):
    variant = "bad-magic"


class TruncatedPayloadError(TensorFormatError):
    variant = "truncated-payload"


class UnsupportedDtypeError(TensorFormatError):
    variant = "unsupported-dtype"


class TensorSizeError(TensorFormatError):
    """Dims outside the supported range (ndim, zero dims, or 32-bit overflow)."""

    variant = "tensor-size"
