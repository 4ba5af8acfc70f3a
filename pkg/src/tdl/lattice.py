"""Quadratic forms of flat tori and exact lattice-point counts in their thin annuli.

The torus ``R^d / prod(alpha_j Z)`` has Laplacian eigenvalues
``Q(n) = sum_j (2 pi n_j / alpha_j)**2`` on the modes ``exp(2 pi i n.(x/alpha))``.
Everything here works with integer frequency vectors ``n`` and the diagonal
weights ``theta_j = (2 pi / alpha_j)**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ResourceBudgetExceeded

#: Default cap on the number of form values held in memory at once.
DEFAULT_MAX_VALUES = 2**27


@dataclass(frozen=True)
class TorusGeometry:
    """Side lengths of a rectangular flat torus, each in ``[1/2, 2]``."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        if len(alpha) < 1:
            raise ValueError("torus needs at least one side length")
        for a in alpha:
            if not (0.5 <= a <= 2.0):
                raise ValueError(f"side length {a} outside [1/2, 2]")
        object.__setattr__(self, "alpha", alpha)

    @property
    def d(self) -> int:
        return len(self.alpha)

    def volume(self) -> float:
        return float(math.prod(self.alpha))


@dataclass(frozen=True)
class QuadraticForm:
    """Diagonal positive form ``Q(m) = sum_j theta_j m_j**2``."""

    theta: tuple[float, ...]

    def __post_init__(self):
        theta = tuple(float(t) for t in np.atleast_1d(self.theta))
        if len(theta) < 1:
            raise ValueError("form needs at least one coefficient")
        if any(not (t > 0) or not math.isfinite(t) for t in theta):
            raise ValueError(f"coefficients must be positive and finite, got {theta}")
        object.__setattr__(self, "theta", theta)

    @property
    def d(self) -> int:
        return len(self.theta)

    def __call__(self, m) -> float | np.ndarray:
        return eval_form(self, m)

    def values_on_box(self, lo: Sequence[int], size: Sequence[int]) -> np.ndarray:
        """``Q`` on the integer box ``lo_j <= n_j < lo_j + size_j`` (C order)."""
        out = np.zeros(tuple(size))
        for j, (t, a, s) in enumerate(zip(self.theta, lo, size)):
            k = np.arange(a, a + s, dtype=float)
            shape = [1] * len(size)
            shape[j] = s
            out = out + (t * k * k).reshape(shape)
        return out


class AnnulusCount(NamedTuple):
    N: int
    ell: float
    count: int
    width: float = 1.0


class AnnulusSup(NamedTuple):
    ell_star: float
    count: int


def form_from_torus(geometry: TorusGeometry) -> QuadraticForm:
    return QuadraticForm(tuple((2.0 * math.pi / a) ** 2 for a in geometry.alpha))


def eval_form(Q: QuadraticForm, m) -> float | np.ndarray:
    """Evaluate ``Q`` on one vector or on a stack of vectors (last axis = d)."""
    m = np.asarray(m)
    if m.shape[-1:] != (Q.d,):
        raise ValueError(f"expected vectors of dimension {Q.d}, got shape {m.shape}")
    mf = m.astype(float)
    val = (mf * mf) @ np.asarray(Q.theta)
    return float(val) if np.ndim(val) == 0 else val


def pair_level(Q: QuadraticForm, n, a) -> float:
    """``Q(n) + Q(a - n)`` written through the polarization identity.

    ``Q(n) + Q(a-n) = Q(2n-a)/2 + Q(a)/2``: the phase of the pair ``(n, a-n)``
    depends on ``n`` only through ``Q(2n - a)``.
    """
    n = np.asarray(n)
    a = np.asarray(a)
    return 0.5 * eval_form(Q, 2 * n - a) + 0.5 * eval_form(Q, a)


def _axis_squares(Q: QuadraticForm, N: int, nonneg: bool = False) -> list[np.ndarray]:
    k = np.arange(0 if nonneg else -N, N + 1, dtype=float)
    return [t * k * k for t in Q.theta]


def _box_values(Q: QuadraticForm, N: int, nonneg: bool = False) -> np.ndarray:
    parts = _axis_squares(Q, N, nonneg)
    out = parts[0]
    for p in parts[1:]:
        out = np.add.outer(out, p)
    return out.ravel()


def _orthant_weights(d: int, N: int) -> np.ndarray:
    k = np.arange(N + 1)
    w1 = np.where(k == 0, 1, 2).astype(np.int64)
    out = w1
    for _ in range(d - 1):
        out = np.multiply.outer(out, w1)
    return out.ravel()


def count_annulus(Q: QuadraticForm, N: int, ell: float, width: float = 1.0) -> AnnulusCount:
    """Exact number of ``m`` in ``[-N, N]^d`` with ``|Q(m) - ell| <= width``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not width > 0:
        raise ValueError("width must be positive")
    parts = _axis_squares(Q, N)
    # Stream over the first axis so memory stays at (2N+1)^(d-1).
    rest = parts[1] if Q.d > 1 else np.zeros(1)
    for p in parts[2:]:
        rest = np.add.outer(rest, p)
    rest = rest.ravel()
    total = 0
    for v in parts[0]:
        total += int(np.count_nonzero(np.abs(v + rest - ell) <= width))
    return AnnulusCount(N, float(ell), total, float(width))


def sup_annulus_count(
    Q: QuadraticForm,
    N: int,
    width: float = 1.0,
    *,
    mode: str = "full",
    max_values: int = DEFAULT_MAX_VALUES,
) -> AnnulusSup:
    """Maximum over all real ``ell`` of :func:`count_annulus`, computed exactly.

    The count is a step function of ``ell``; a maximal window ``[ell - w, ell + w]``
    can always be slid until its left edge touches some value ``Q(m)``.  So the
    maximum is the largest number of sorted values inside ``[v, v + 2w]`` over
    left edges ``v``.

    ``mode="orthant"`` enumerates ``[0, N]^d`` with sign-orbit multiplicities
    ``2**(#nonzero coordinates)``; it gives identical counts with ``2**d`` less
    memory.  The returned ``ell_star`` is the midpoint of the maximizing value
    span, which sits inside every admissible window.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not width > 0:
        raise ValueError("width must be positive")
    if mode not in ("full", "orthant"):
        raise ValueError(f"unknown mode {mode!r}")
    n_vals = (N + 1) ** Q.d if mode == "orthant" else (2 * N + 1) ** Q.d
    if n_vals > max_values:
        raise ResourceBudgetExceeded(
            f"{n_vals} form values exceed the budget of {max_values}; "
            "use mode='orthant' or raise max_values"
        )
    if mode == "full":
        vals = np.sort(_box_values(Q, N))
        ends = np.searchsorted(vals, vals + 2.0 * width, side="right")
        counts = ends - np.arange(vals.size)
    else:
        vals = _box_values(Q, N, nonneg=True)
        order = np.argsort(vals, kind="stable")
        vals = vals[order]
        cum = np.concatenate(([0], np.cumsum(_orthant_weights(Q.d, N)[order])))
        ends = np.searchsorted(vals, vals + 2.0 * width, side="right")
        counts = cum[ends] - cum[:-1]
    i = int(np.argmax(counts))
    j = int(ends[i]) - 1
    return AnnulusSup(0.5 * (float(vals[i]) + float(vals[j])), int(counts[i]))


def sums_of_squares(dprime: int, M: int) -> np.ndarray:
    """Table of ``r_k(m)`` for ``0 <= m <= M`` with ``k = dprime``.

    ``r_k(m)`` counts integer vectors of length ``k`` with squared norm ``m``.
    Built by convolving ``k`` copies of the one-dimensional square indicator
    (value 1 at 0, 2 at every positive square).  Exact integer arithmetic.
    """
    if dprime < 1:
        raise ValueError("dprime must be >= 1")
    if M < 0:
        raise ValueError("M must be >= 0")
    roots = np.arange(0, math.isqrt(M) + 1)
    squares = roots * roots
    mult = np.where(roots == 0, 1, 2)
    r = np.zeros(M + 1, dtype=np.int64)
    r[squares] = mult
    for _ in range(dprime - 1):
        nxt = np.zeros_like(r)
        for sq, w in zip(squares, mult):
            nxt[sq:] += w * r[: M + 1 - sq]
        r = nxt
    return r


def exponential_sum(Q: QuadraticForm, N: int, t: float) -> complex:
    """``sum over m in [-N, N]^d of exp(i t Q(m))`` as a product of 1-d sums."""
    if N < 1:
        raise ValueError("N must be >= 1")
    k = np.arange(1, N + 1, dtype=float)
    out = 1.0 + 0.0j
    for th in Q.theta:
        phase = t * th * k * k
        out *= 1.0 + 2.0 * complex(np.sum(np.cos(phase)), np.sum(np.sin(phase)))
    return out


def counts_to_rows(Q: QuadraticForm, results: Sequence[AnnulusCount]) -> list[list]:
    """CSV rows ``(d, theta..., N, ell, width, count)``."""
    return [[Q.d, *Q.theta, r.N, r.ell, r.width, r.count] for r in results]
