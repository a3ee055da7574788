"""Element algebras for tensor contraction.

Two semirings are supported:

* ``REAL``: the ordinary sum-product semiring over non-negative reals. Scalars
  are carried as :class:`RealScaled` (mantissa times a power of two) and
  tensors store one shared base-2 exponent next to a float64 buffer, so long
  products of small probabilities do not underflow.
* ``TROPICAL``: the max-plus semiring over ``R ∪ {-inf}`` in natural-log units.
  Zero is ``-inf`` and one is ``0``.

Boolean masks (``numpy`` bool arrays) serve as tropical adjoints, where
``False`` stands for the tropical zero and ``True`` for the tropical one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

LOG10_2 = math.log10(2.0)
LN_2 = math.log(2.0)


@dataclass(frozen=True)
class RealScaled:
    """A non-negative real stored as ``mantissa * 2**exponent``."""

    mantissa: float
    exponent: int = 0

    @classmethod
    def from_float(cls, x: float) -> "RealScaled":
        return cls(float(x), 0).normalize()

    def normalize(self) -> "RealScaled":
        if self.mantissa == 0.0:
            return RealScaled(0.0, 0)
        m, e = math.frexp(self.mantissa)
        return RealScaled(m, self.exponent + e)

    def to_float(self) -> float:
        """Plain float value; may overflow to inf or underflow to 0."""
        try:
            return math.ldexp(self.mantissa, self.exponent)
        except OverflowError:
            return math.inf

    def log10(self) -> float:
        return to_log10(self)

    def ln(self) -> float:
        if self.mantissa <= 0.0:
            return -math.inf
        return math.log(self.mantissa) + self.exponent * LN_2

    def __add__(self, other: "RealScaled") -> "RealScaled":
        return semiring_add(self, other)

    def __mul__(self, other: "RealScaled") -> "RealScaled":
        return semiring_mul(self, other)


@dataclass(frozen=True)
class Tropical:
    """Max-plus number in natural-log units."""

    value: float

    def __add__(self, other: "Tropical") -> "Tropical":
        return semiring_add(self, other)

    def __mul__(self, other: "Tropical") -> "Tropical":
        return semiring_mul(self, other)


Element = Union[RealScaled, Tropical]


def semiring_add(a: Element, b: Element) -> Element:
    if isinstance(a, Tropical) and isinstance(b, Tropical):
        return Tropical(max(a.value, b.value))
    if isinstance(a, RealScaled) and isinstance(b, RealScaled):
        a, b = a.normalize(), b.normalize()
        if a.mantissa == 0.0:
            return b
        if b.mantissa == 0.0:
            return a
        e = max(a.exponent, b.exponent)
        m = math.ldexp(a.mantissa, a.exponent - e) + math.ldexp(b.mantissa, b.exponent - e)
        return RealScaled(m, e).normalize()
    raise TypeError(f"cannot add {type(a).__name__} and {type(b).__name__}")


def semiring_mul(a: Element, b: Element) -> Element:
    if isinstance(a, Tropical) and isinstance(b, Tropical):
        # -inf absorbs; plain float addition already does this for finite b
        return Tropical(a.value + b.value)
    if isinstance(a, RealScaled) and isinstance(b, RealScaled):
        return RealScaled(a.mantissa * b.mantissa, a.exponent + b.exponent).normalize()
    raise TypeError(f"cannot multiply {type(a).__name__} and {type(b).__name__}")


def to_log10(x: RealScaled) -> float:
    """log10 of a scaled real; zero maps to ``-inf``."""
    if x.mantissa <= 0.0:
        return -math.inf
    return math.log10(x.mantissa) + x.exponent * LOG10_2


class Algebra:
    """Vectorised semiring operations on float64 buffers."""

    name: str
    zero: float
    one: float
    scaled: bool

    def reduce(self, x: np.ndarray, axes: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Batched product of ``(n, m, k)`` and ``(n, k, p)`` buffers."""
        raise NotImplementedError

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<algebra {self.name}>"


class _Real(Algebra):
    name = "real"
    zero = 0.0
    one = 1.0
    scaled = True

    def reduce(self, x, axes):
        return x.sum(axis=tuple(axes)) if axes else x

    def matmul(self, a, b):
        return np.matmul(a, b)

    def mul(self, a, b):
        return a * b


class _Tropical(Algebra):
    name = "tropical"
    zero = -math.inf
    one = 0.0
    scaled = False

    def reduce(self, x, axes):
        return x.max(axis=tuple(axes)) if axes else x

    def matmul(self, a, b):
        if a.shape[2] == 1:
            return a + b
        return (a[:, :, :, None] + b[:, None, :, :]).max(axis=2)

    def mul(self, a, b):
        return a + b


REAL: Algebra = _Real()
TROPICAL: Algebra = _Tropical()


def normalize_buffer(data: np.ndarray) -> tuple[np.ndarray, int]:
    """Rescale ``data`` by a power of two so its max-abs entry lies in [0.5, 1).

    Returns the rescaled buffer and the base-2 exponent that was factored out.
    Scaling by powers of two is exact, so no precision is lost.
    """
    if data.size == 0:
        return data, 0
    peak = float(np.max(np.abs(data)))
    if peak == 0.0 or not math.isfinite(peak):
        return data, 0
    _, e = math.frexp(peak)
    if e == 0:
        return data, 0
    return np.ldexp(data, -e), e
