"""Exception hierarchy.

Every error carries a ``category`` drawn from a closed set so the command line
can report failures as one-line diagnostics.
"""

from __future__ import annotations


class InferenceError(Exception):
    category = "shape"


class ParseError(InferenceError):
    """Malformed model, evidence, or query text.

    ``position`` is the zero-based index of the offending token.
    """

    category = "parse"

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        where = f" at token {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class ShapeError(InferenceError):
    """Structural problem: bad scopes, mismatched cardinalities, invalid trees."""

    category = "shape"


class CapacityError(InferenceError):
    category = "capacity"

    def __init__(self, message: str, space: float | None = None, cap: float | None = None):
        self.space = space
        self.cap = cap
        super().__init__(message)

    @classmethod
    def over_cap(cls, space: float, cap: float) -> "CapacityError":
        return cls(
            f"estimated space complexity {space:.2f} exceeds cap {cap:.2f}", space, cap
        )


class InconsistentEvidenceError(InferenceError):
    """Evidence has zero probability under the model."""

    category = "inconsistent-evidence"
