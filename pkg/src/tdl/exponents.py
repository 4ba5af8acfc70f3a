"""Exponents claimed for flat tori: Strichartz loss, counting and growth rates."""

from __future__ import annotations

from fractions import Fraction


def strichartz_exponent(d: int) -> Fraction:
    """Loss ``s0(d)`` in the L^4 Strichartz / bilinear estimates (epsilon dropped)."""
    if d == 2:
        return Fraction(1, 3)
    if d >= 3 and d % 2 == 1:
        return Fraction(d, 2) - Fraction(d, d + 1)
    if d >= 4:
        return Fraction(d, 2) - 1
    raise ValueError(f"no exponent for d={d}")


def counting_exponent(d: int) -> Fraction:
    """Growth exponent ``2 s0`` of the sup-annulus count in ``N``."""
    return 2 * strichartz_exponent(d)


def geometric_exponent(d: int) -> Fraction:
    """Exponent of the minimal diameter of non-degenerate simplices in an annulus."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return Fraction(1, 2 * (d + 1))


def growth_threshold(d: int) -> Fraction:
    """Infimum of admissible ``A`` in ``||u(t)||_{H^s} <~ t^{A(s-1)}``.

    From ``1/A < 1 - s0`` for ``d = 2`` and
    ``1/A < (1 - (d-2)/(2(d-2 s0))) (1 - (d-2)/(d-s0-1))`` for ``d = 3``.
    """
    s0 = strichartz_exponent(d)
    if d == 2:
        inv = 1 - s0
    elif d == 3:
        inv = (1 - Fraction(d - 2) / (2 * (d - 2 * s0))) * (1 - Fraction(d - 2) / (d - s0 - 1))
    else:
        raise ValueError("growth bound is stated for d = 2 and d = 3 only")
    return 1 / inv


class ExponentTable:
    """Lookup of every claimed exponent, as exact fractions."""

    def s0(self, d: int) -> Fraction:
        return strichartz_exponent(d)

    def count(self, d: int) -> Fraction:
        return counting_exponent(d)

    def geometric(self, d: int) -> Fraction:
        return geometric_exponent(d)

    def A(self, d: int) -> Fraction:
        return growth_threshold(d)

    def sobolev_growth(self, d: int, s: float) -> float:
        return float(self.A(d)) * (s - 1.0)


TABLE = ExponentTable()
