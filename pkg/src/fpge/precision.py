"""Exact decimal fixed-point arithmetic for genotype values in [0, 1].

A genotype is one number.  It is stored as ``numerator / 10**precision``
with the numerator a Python big integer, so the multiply-and-split
transcription step is exact: no rounding occurs anywhere in a decode, and
two equal (numerator, precision) pairs behave identically in every
operation on every platform.  The default precision is 150 significant
decimal digits.

The ``split`` operation is the transcription kernel: multiplying a value
in [0, 1] by the number of productions ``k`` yields ``i.r`` where the
integer part ``i`` picks a production and the fractional part ``r`` is the
residual genotype passed on to subsequent choices.  A value of exactly 1
would produce ``i == k``; it is clamped to the last production with
residual 1 so the top of the unit interval mirrors the bottom (value 0
always picks index 0 with residual 0).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .rng import Xoshiro256StarStar

DEFAULT_PRECISION = 150

_DECIMAL_RE = re.compile(r"(?P<whole>[01])(?:\.(?P<frac>[0-9]+))?\Z")


@lru_cache(maxsize=None)
def pow10(exponent: int) -> int:
    return 10 ** exponent


def split_numerator(numerator: int, k: int, scale: int) -> tuple[int, int]:
    """Raw transcription kernel on numerators.

    Returns ``(index, residual_numerator)`` for a value ``numerator/scale``
    split across ``k`` productions.  The value-one case (``index == k``,
    only reachable when ``numerator == scale``) is clamped to
    ``(k - 1, scale)``.
    """
    if k < 1:
        raise ValueError("production count must be >= 1")
    index, residual = divmod(numerator * k, scale)
    if index == k:
        return k - 1, scale
    return index, residual


class UnitFraction:
    """Immutable exact decimal fraction in [0, 1].

    ``precision`` is the number of decimal digits carried; the value is
    ``numerator / 10**precision`` with ``0 <= numerator <= 10**precision``.
    Instances of different precision never compare or combine.
    """

    __slots__ = ("numerator", "precision")

    def __init__(self, numerator: int, precision: int = DEFAULT_PRECISION) -> None:
        if precision < 1:
            raise ValueError("precision must be >= 1")
        scale = pow10(precision)
        if not 0 <= numerator <= scale:
            raise ValueError(
                f"numerator {numerator} outside [0, 10**{precision}]"
            )
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "precision", precision)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("UnitFraction is immutable")

    def __reduce__(self) -> tuple:
        # __setattr__ is blocked, so pickle must rebuild via the constructor.
        return (UnitFraction, (self.numerator, self.precision))

    @classmethod
    def from_decimal(cls, text: str, precision: int = DEFAULT_PRECISION) -> "UnitFraction":
        """Parse ``0``, ``1``, ``0.<digits>`` or ``1.0...0``.

        Rejects anything else: values outside [0, 1], malformed literals,
        and literals with more than ``precision`` fractional digits (no
        silent rounding, even of trailing zeros).
        """
        m = _DECIMAL_RE.match(text)
        if m is None:
            raise ValueError(f"malformed unit-interval literal: {text!r}")
        frac = m.group("frac") or ""
        if len(frac) > precision:
            raise ValueError(
                f"{len(frac)} fractional digits exceed precision {precision}: {text!r}"
            )
        numerator = int(m.group("whole")) * pow10(precision)
        if frac:
            numerator += int(frac) * pow10(precision - len(frac))
        if numerator > pow10(precision):
            raise ValueError(f"value {text!r} outside [0, 1]")
        return cls(numerator, precision)

    @classmethod
    def zero(cls, precision: int = DEFAULT_PRECISION) -> "UnitFraction":
        return cls(0, precision)

    @classmethod
    def one(cls, precision: int = DEFAULT_PRECISION) -> "UnitFraction":
        return cls(pow10(precision), precision)

    @property
    def scale(self) -> int:
        return pow10(self.precision)

    def decimal(self, trim: bool = True) -> str:
        """Decimal string form.

        Trimmed form drops trailing zeros (``0.5``, ``0``, ``1``); the
        untrimmed form always carries all ``precision`` fractional digits
        and is what CSV output uses.  Both forms parse back exactly.
        """
        whole, frac = divmod(self.numerator, self.scale)
        digits = f"{frac:0{self.precision}d}"
        if not trim:
            return f"{whole}.{digits}"
        digits = digits.rstrip("0")
        if not digits:
            return str(whole)
        return f"{whole}.{digits}"

    def split(self, k: int) -> "SplitResult":
        """One transcription step across ``k`` productions."""
        index, residual = split_numerator(self.numerator, k, self.scale)
        return SplitResult(index, UnitFraction(residual, self.precision))

    def perturb(self, delta: int) -> "UnitFraction":
        """Shift by ``delta`` numerator units with modular wrap-around.

        ``delta`` is a signed amount in units of ``10**-precision``; the
        result is ``(numerator + delta) mod 10**precision``, so a shift of
        +0.04 applied to 0.98 lands on 0.02.  Perturbation is a bijection
        on numerators mod ``10**precision``.
        """
        if not -self.scale < delta < self.scale:
            raise ValueError("perturbation must satisfy |delta| < 1")
        return UnitFraction((self.numerator + delta) % self.scale, self.precision)

    def as_float(self) -> float:
        """Nearest float64; lossy, used only for plotting coordinates."""
        return self.numerator / self.scale

    def _check_compatible(self, other: object) -> "UnitFraction":
        if not isinstance(other, UnitFraction):
            raise TypeError(f"cannot compare UnitFraction with {type(other).__name__}")
        if other.precision != self.precision:
            raise ValueError("mixed precisions")
        return other

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UnitFraction):
            return NotImplemented
        return (self.precision, self.numerator) == (other.precision, other.numerator)

    def __lt__(self, other: "UnitFraction") -> bool:
        return self.numerator < self._check_compatible(other).numerator

    def __le__(self, other: "UnitFraction") -> bool:
        return self.numerator <= self._check_compatible(other).numerator

    def __gt__(self, other: "UnitFraction") -> bool:
        return self.numerator > self._check_compatible(other).numerator

    def __ge__(self, other: "UnitFraction") -> bool:
        return self.numerator >= self._check_compatible(other).numerator

    def __hash__(self) -> int:
        return hash((self.numerator, self.precision))

    def __repr__(self) -> str:
        return f"UnitFraction({self.decimal()!r}, precision={self.precision})"


@dataclass(frozen=True)
class SplitResult:
    """Outcome of one transcription step: chosen index plus residual."""

    index: int
    residual: UnitFraction


def random_unit(rng: "Xoshiro256StarStar", precision: int = DEFAULT_PRECISION) -> UnitFraction:
    """Uniform value with numerator drawn from ``[0, 10**precision)``."""
    return UnitFraction(rng.randbelow(pow10(precision)), precision)


def random_in_range(rng: "Xoshiro256StarStar", lo: UnitFraction, hi: UnitFraction) -> UnitFraction:
    """Uniform value on the closed interval ``[lo, hi]``.

    Degenerate ranges (``lo == hi``) return that value without consuming
    a draw.
    """
    if lo.precision != hi.precision:
        raise ValueError("mixed precisions")
    if lo.numerator > hi.numerator:
        raise ValueError("empty range: lo > hi")
    span = hi.numerator - lo.numerator + 1
    return UnitFraction(lo.numerator + rng.randbelow(span), lo.precision)


def random_delta(rng: "Xoshiro256StarStar", half_width: UnitFraction) -> int:
    """Signed perturbation, uniform over ``[-half_width, +half_width)``.

    Returned in numerator units at the half-width's precision.  A zero
    half-width yields 0 without consuming a draw, making the perturbation
    an identity.
    """
    hw = half_width.numerator
    if hw == 0:
        return 0
    return rng.randbelow(2 * hw) - hw
