"""Fixed-point arithmetic for token and cash amounts.

Token quantities (1 token = 1 tCO2e) and stablecoin amounts share one
representation: an integer count of 1e-6 units.  Integer storage makes
conservation checks exact and replay byte-stable; binary floating point is
used only transiently for the exchange's fractional powers, after which the
result is pulled back onto the 1e-6 grid.

Grid rounding is direction-aware.  ``from_float(..., "ceil")`` and
``("floor")`` implement the exchange-conservative policy (a buyer's cash is
rounded up, a seller's proceeds down), but both first *snap* to the nearest
grid point when the float sits within a tiny relative tolerance of it.
Without the snap, a mathematically exact result such as 2100 would come out
of ``pow`` as 2100.0000000000018 and get conservatively rounded to
2100.000001, which is wrong by a full unit of resolution.
"""

from __future__ import annotations

import math
from decimal import Decimal, InvalidOperation
from typing import Union

SCALE = 10**6

# Fixed amounts must survive a signed 64-bit micro-unit encoding.
_LIMIT = 2**63

# Relative snap tolerance, in grid units per grid unit: three orders of
# magnitude above double-precision noise, six below the grid itself.
_SNAP_REL = 1e-12
_SNAP_ABS = 1e-6

ParseInput = Union[str, int, Decimal]


def _half_even(num: int, den: int) -> int:
    """round(num/den) with ties to even; den > 0, num may be negative."""
    q, r = divmod(num, den)
    twice = 2 * r
    if twice > den or (twice == den and q % 2 != 0):
        q += 1
    return q


class Fixed:
    """An immutable fixed-point amount with 1e-6 resolution."""

    __slots__ = ("micro",)

    def __init__(self, micro: int):
        if not isinstance(micro, int) or isinstance(micro, bool):
            raise TypeError(f"micro units must be int, got {type(micro).__name__}")
        if not -_LIMIT < micro < _LIMIT:
            raise OverflowError("amount exceeds the representable range")
        object.__setattr__(self, "micro", micro)

    def __setattr__(self, name, value):
        raise AttributeError("Fixed amounts are immutable")

    # -- construction -------------------------------------------------

    @classmethod
    def parse(cls, value: ParseInput) -> "Fixed":
        """Parse an exact decimal literal; finer than 1e-6 is an error."""
        if isinstance(value, bool):
            raise ValueError("booleans are not amounts")
        if isinstance(value, int):
            return cls(value * SCALE)
        if isinstance(value, Fixed):
            return value
        try:
            scaled = Decimal(str(value)).scaleb(6)
        except InvalidOperation as exc:
            raise ValueError(f"not a decimal amount: {value!r}") from exc
        if scaled != scaled.to_integral_value():
            raise ValueError(f"amount {value!r} is finer than the 1e-6 resolution")
        return cls(int(scaled))

    @classmethod
    def from_units(cls, units: int) -> "Fixed":
        return cls(units * SCALE)

    @classmethod
    def from_float(cls, value: float, rounding: str = "nearest") -> "Fixed":
        """Round a float onto the grid, snapping near-exact values first."""
        if not math.isfinite(value):
            raise ValueError(f"non-finite amount: {value!r}")
        y = value * SCALE
        if not -_LIMIT < y < _LIMIT:
            raise OverflowError("amount exceeds the representable range")
        nearest = round(y)
        if abs(y - nearest) <= max(_SNAP_ABS, abs(y) * _SNAP_REL):
            return cls(int(nearest))
        if rounding == "ceil":
            return cls(math.ceil(y))
        if rounding == "floor":
            return cls(math.floor(y))
        if rounding == "nearest":
            return cls(int(nearest))
        raise ValueError(f"unknown rounding mode {rounding!r}")

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other: "Fixed") -> "Fixed":
        return Fixed(self.micro + self._micro_of(other))

    def __sub__(self, other: "Fixed") -> "Fixed":
        return Fixed(self.micro - self._micro_of(other))

    def __neg__(self) -> "Fixed":
        return Fixed(-self.micro)

    def __abs__(self) -> "Fixed":
        return Fixed(abs(self.micro))

    def mul(self, other: "Fixed") -> "Fixed":
        """Product of two amounts (e.g. quantity x unit price), half-even."""
        return Fixed(_half_even(self.micro * other.micro, SCALE))

    def div(self, other: "Fixed") -> "Fixed":
        """Quotient of two amounts (e.g. cash / quantity), half-even."""
        den = other.micro
        if den == 0:
            raise ZeroDivisionError("division by zero amount")
        num = self.micro * SCALE
        if den < 0:
            num, den = -num, -den
        return Fixed(_half_even(num, den))

    # -- comparisons ----------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Fixed) and self.micro == other.micro

    def __lt__(self, other: "Fixed") -> bool:
        return self.micro < self._micro_of(other)

    def __le__(self, other: "Fixed") -> bool:
        return self.micro <= self._micro_of(other)

    def __gt__(self, other: "Fixed") -> bool:
        return self.micro > self._micro_of(other)

    def __ge__(self, other: "Fixed") -> bool:
        return self.micro >= self._micro_of(other)

    def __hash__(self) -> int:
        return hash(("Fixed", self.micro))

    @staticmethod
    def _micro_of(other: "Fixed") -> int:
        if not isinstance(other, Fixed):
            raise TypeError(f"expected Fixed, got {type(other).__name__}")
        return other.micro

    # -- views ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.micro == 0

    @property
    def is_positive(self) -> bool:
        return self.micro > 0

    @property
    def is_negative(self) -> bool:
        return self.micro < 0

    def to_float(self) -> float:
        return self.micro / SCALE

    def __str__(self) -> str:
        sign = "-" if self.micro < 0 else ""
        units, frac = divmod(abs(self.micro), SCALE)
        return f"{sign}{units}.{frac:06d}"

    def __repr__(self) -> str:
        return f"Fixed('{self}')"


ZERO = Fixed(0)
ONE = Fixed(SCALE)

# Semantic aliases: tokens (tCO2e) vs stablecoin cash. One representation.
Quantity = Fixed
Money = Fixed
