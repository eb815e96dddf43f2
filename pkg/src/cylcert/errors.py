"""Failure classes shared across the certification pipeline.

Every error that can abort a pipeline stage carries a small ``payload``
dict with exact (JSON-serializable) data: witnesses, best bounds seen,
exhausted caps.  The CLI turns these into structured diagnostics and
exit codes; library callers can inspect ``payload`` directly.
"""
from __future__ import annotations

from typing import Any


class CylcertError(Exception):
    """Base class; ``payload`` holds structured diagnostic data."""

    code = "ERROR"

    def __init__(self, message: str, **payload: Any) -> None:
        super().__init__(message)
        self.payload = payload


class ShapeMismatchError(CylcertError):
    """Two polynomials with different variable layouts were combined."""

    code = "SHAPE_MISMATCH"


class SchemaError(CylcertError):
    """A JSON document does not match the expected on-disk format."""

    code = "SCHEMA"


class ValidationError(CylcertError):
    """A problem fails its declared preconditions (frame, degrees, ...)."""

    code = "VALIDATION"


class NoFeasibleSampleError(ValidationError):
    """No point satisfying every constraint was found at the search cap."""

    code = "NO_FEASIBLE_SAMPLE"


class IndefiniteConditionError(CylcertError):
    """A required leading-form positivity condition fails; witness attached."""

    code = "INDEFINITE_CONDITION"


class NonpositiveWitnessError(CylcertError):
    """A feasible sample of the target region evaluated to <= 0."""

    code = "NONPOSITIVE_WITNESS"


class BelowThresholdError(CylcertError):
    """A sample of the full domain evaluated strictly below the threshold."""

    code = "BELOW_THRESHOLD"


class ResolutionExhaustedError(CylcertError):
    """Grid refinement hit its depth cap without a conclusive answer."""

    code = "RESOLUTION_EXHAUSTED"


class SearchExhaustedError(CylcertError):
    """The damping-parameter search hit its caps without certifying."""

    code = "SEARCH_EXHAUSTED"


class CapExceededError(CylcertError):
    """Polya saturation exceeded the a-priori exponent cap."""

    code = "CAP_EXCEEDED"


class BudgetExhaustedError(CylcertError):
    """Base-certificate degree budget doubled past its cap without success."""

    code = "BUDGET_EXHAUSTED"


class SosStalledError(CylcertError):
    """PSD feasibility iteration stalled (no Gram matrix found)."""

    code = "STALLED"


class NotNonnegativeError(CylcertError):
    """A polynomial handed to an SOS routine is provably not nonnegative."""

    code = "NOT_NONNEGATIVE"


class RoundingFailedError(CylcertError):
    """Rationalization of a numeric Gram matrix lost PSDness and the
    caller demanded an exact decomposition."""

    code = "ROUNDING_FAILED_AND_NUMERIC_FORBIDDEN"


class IdentityMismatchError(CylcertError):
    """An assembled certificate does not reproduce its target exactly."""

    code = "IDENTITY_MISMATCH"


class VerificationError(CylcertError):
    """Independent re-check of a certificate file failed; ``kind`` in payload
    is one of IDENTITY_FAIL, NEGATIVE_WEIGHT, DEGREE_METADATA_MISMATCH,
    TIER_INSUFFICIENT, PROBLEM_HASH_MISMATCH."""

    code = "VERIFY_FAIL"
