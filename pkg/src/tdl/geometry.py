"""Lattice configurations in thin annuli of a quadratic form.

Brute-force checks of the convexity bound: any ``d+1`` affinely independent
lattice points in ``X <= Q(m) <= X + width`` have diameter of order at least
``X**(1/(2(d+1)))``.  All coplanarity tests use exact integer determinants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import CombinatorialBudgetExceeded, EmptySweep, NoNonDegenerateSimplex
from .fitting import PowerLawFit, fit_power_law
from .lattice import QuadraticForm, eval_form

#: Largest point count accepted by the subset scan, per dimension.
POINT_CAPS = {1: 10**6, 2: 2000, 3: 300}
#: Subset budget used for dimensions without an explicit point cap.
SUBSET_CAP = 10**8


@dataclass(frozen=True)
class AnnulusPointSet:
    X: float
    width: float
    points: np.ndarray  # (n, d) int64, lexicographically sorted

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SimplexDiagnostic:
    vertices: np.ndarray  # (d+1, d) int64
    determinant: int
    diameter: float


@dataclass
class GeometrySample:
    X: float
    n_points: int
    D: float
    ratio: float
    max_collinear: int
    determinant: int
    within_sqrt_x: bool  # side condition: diameter < X**(1/2)


@dataclass
class GeometrySweep:
    theta: tuple[float, ...]
    width: float
    samples: list[GeometrySample]
    skipped: list[tuple[float, str]] = field(default_factory=list)
    fit: PowerLawFit | None = None

    @property
    def exponent(self) -> float:
        return 1.0 / (2 * (len(self.theta) + 1))

    @property
    def min_ratio(self) -> float:
        return min(s.ratio for s in self.samples)

    @property
    def flagged(self) -> list[GeometrySample]:
        return [s for s in self.samples if not s.within_sqrt_x]

    def rows(self) -> list[list]:
        """CSV rows ``(d, theta..., X, width, n_points, D, ratio, max_collinear)``."""
        d = len(self.theta)
        return [
            [d, *self.theta, s.X, self.width, s.n_points, s.D, s.ratio, s.max_collinear]
            for s in self.samples
        ]


def annulus_points(Q: QuadraticForm, X: float, width: float = 1.0) -> AnnulusPointSet:
    """All lattice points with ``X <= Q(m) <= X + width``."""
    if not X > 0:
        raise ValueError("X must be positive")
    if not width > 0:
        raise ValueError("width must be positive")
    bounds = [math.ceil(math.sqrt((X + width) / t)) for t in Q.theta]
    axes = [np.arange(-b, b + 1) for b in bounds]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    q = eval_form(Q, pts)
    keep = (q >= X) & (q <= X + width)
    return AnnulusPointSet(float(X), float(width), pts[keep])


def _pairwise_sq(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _det_int(mat: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a small integer matrix (fraction-free elimination)."""
    a = [[Fraction(int(x)) for x in row] for row in mat]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if a[r][c] != 0), None)
        if p is None:
            return 0
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                for k in range(c, n):
                    a[r][k] -= f * a[c][k]
    return int(det)


def _batch_det(edges: np.ndarray) -> np.ndarray:
    """Determinants of a stack of integer ``(d, d)`` edge matrices, exact for d <= 3."""
    d = edges.shape[-1]
    e = edges
    if d == 1:
        return e[..., 0, 0]
    if d == 2:
        return e[..., 0, 0] * e[..., 1, 1] - e[..., 0, 1] * e[..., 1, 0]
    if d == 3:
        return (
            e[..., 0, 0] * (e[..., 1, 1] * e[..., 2, 2] - e[..., 1, 2] * e[..., 2, 1])
            - e[..., 0, 1] * (e[..., 1, 0] * e[..., 2, 2] - e[..., 1, 2] * e[..., 2, 0])
            + e[..., 0, 2] * (e[..., 1, 0] * e[..., 2, 1] - e[..., 1, 1] * e[..., 2, 0])
        )
    flat = e.reshape(-1, d, d)
    out = np.array([_det_int(m.tolist()) for m in flat], dtype=object)
    return out.reshape(e.shape[:-2])


def _check_budget(n: int, d: int) -> None:
    cap = POINT_CAPS.get(d)
    if cap is not None:
        if n > cap:
            raise CombinatorialBudgetExceeded(f"{n} points exceed the cap of {cap} for d={d}")
    elif math.comb(n, d + 1) > SUBSET_CAP:
        raise CombinatorialBudgetExceeded(
            f"C({n}, {d + 1}) subsets exceed the cap of {SUBSET_CAP}"
        )


def min_noncoplanar_diameter(points, d: int | None = None) -> tuple[float, SimplexDiagnostic]:
    """Smallest diameter over affinely independent ``(d+1)``-subsets.

    Depth-first over increasing index tuples; a candidate index survives only
    while its squared distance to every chosen vertex is below the best
    squared diameter found so far, and the last two vertices are scanned in a
    vectorized block.  Squared distances and determinants are integers, so the
    minimum is exact.
    """
    pts = np.asarray(points.points if isinstance(points, AnnulusPointSet) else points, dtype=np.int64)
    if pts.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    d = pts.shape[1] if d is None else d
    if pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {d}")
    n = len(pts)
    if n < d + 1:
        raise NoNonDegenerateSimplex(f"need at least {d + 1} points, got {n}")
    _check_budget(n, d)

    D2 = _pairwise_sq(pts)
    best = [np.iinfo(np.int64).max, None, 0]  # squared diameter, vertex indices, det

    def finish(chosen: list[int], cand: np.ndarray, cur: int) -> None:
        if len(cand) < 2:
            return
        ia, ib = np.triu_indices(len(cand), k=1)
        a, b = cand[ia], cand[ib]
        diam = np.maximum(D2[a, b], cur)
        if chosen:
            ch = np.asarray(chosen)
            diam = np.maximum(diam, D2[np.ix_(a, ch)].max(axis=1))
            diam = np.maximum(diam, D2[np.ix_(b, ch)].max(axis=1))
        ok = diam < best[0]
        if not ok.any():
            return
        a, b, diam = a[ok], b[ok], diam[ok]
        verts = [*chosen, None, None]
        base = pts[chosen[0]] if chosen else pts[a]
        rows = [pts[c] - base for c in chosen[1:]] if chosen else []
        if chosen:
            edges = np.stack(
                [np.broadcast_to(r, (len(a), d)) for r in rows] + [pts[a] - base, pts[b] - base],
                axis=-2,
            )
        else:  # d == 1: the simplex is the pair itself
            edges = (pts[b] - pts[a])[:, None, :]
        det = _batch_det(edges)
        good = det != 0
        if not good.any():
            return
        k = int(np.argmin(np.where(good, diam, np.iinfo(np.int64).max)))
        if diam[k] < best[0]:
            verts[-2], verts[-1] = int(a[k]), int(b[k])
            best[0], best[1], best[2] = int(diam[k]), verts, int(det[k])

    def descend(chosen: list[int], cand: np.ndarray, cur: int) -> None:
        if len(chosen) == d - 1:
            finish(chosen, cand, cur)
            return
        for pos, i in enumerate(cand):
            rest = cand[pos + 1 :]
            if len(rest) < d - len(chosen):
                break
            new_cur = max(cur, int(D2[i, chosen].max())) if chosen else 0
            if new_cur >= best[0]:
                continue
            rest = rest[D2[i, rest] < best[0]]
            descend(chosen + [int(i)], rest, new_cur)

    descend([], np.arange(n), 0)
    if best[1] is None:
        raise NoNonDegenerateSimplex("all subsets are affinely dependent")
    verts = pts[best[1]]
    diag = SimplexDiagnostic(verts.copy(), best[2], math.sqrt(best[0]))
    return diag.diameter, diag


def affine_rank(points) -> int:
    """Exact affine rank of an integer point set (dimension of its affine hull)."""
    pts = [list(map(int, p)) for p in np.asarray(points)]
    if not pts:
        return -1
    rows = [[Fraction(x - y) for x, y in zip(p, pts[0])] for p in pts[1:]]
    rank, col, ncol = 0, 0, len(pts[0])
    while rank < len(rows) and col < ncol:
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / rows[rank][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
        col += 1
    return rank


def _direction_keys(diff: np.ndarray) -> np.ndarray:
    g = np.gcd.reduce(np.abs(diff), axis=1)
    red = diff // g[:, None]
    first = np.argmax(red != 0, axis=1)
    sign = np.sign(red[np.arange(len(red)), first])
    return red * sign[:, None]


def max_collinear(points) -> int:
    """Size of the largest subset lying on one affine line."""
    pts = np.asarray(points.points if isinstance(points, AnnulusPointSet) else points, dtype=np.int64)
    n = len(pts)
    if n < 2:
        raise ValueError("need at least two points")
    best = 2
    for i in range(n - 1):
        if n - i <= best - 1:
            break
        keys = _direction_keys(pts[i + 1 :] - pts[i])
        _, counts = np.unique(keys, axis=0, return_counts=True)
        best = max(best, int(counts.max()) + 1)
    return best


def snap_levels(Q: QuadraticForm, targets: Iterable[float], width: float = 1.0,
                max_scan: int = 10_000, distinct: bool = False) -> list[float]:
    """Move each target up to the smallest level whose annulus is usable.

    A level ``X`` is usable when ``[X, X + width]`` holds ``d+1`` affinely
    independent lattice points.  The smallest usable level at or above a target
    is always some value ``Q(m)``, so candidates are scanned in increasing order.
    With ``distinct=True`` (targets taken in increasing order) each level is
    strictly above the previous one, so no two targets share a level.
    """
    d = Q.d
    out = []
    prev = -math.inf
    for x0 in (sorted(targets) if distinct else targets):
        if distinct and x0 <= prev:
            x0 = float(np.nextafter(prev, math.inf))
        span = max(width, 1.0)
        found = None
        while found is None:
            shell = annulus_points(Q, x0, span)
            if len(shell):
                q = eval_form(Q, shell.points)
                levels = np.unique(q)
                for lv in levels[:max_scan]:
                    sel = shell.points[(q >= lv) & (q <= lv + width)]
                    if lv + width > x0 + span:
                        break  # window not fully inside the scanned shell
                    if len(sel) >= d + 1 and affine_rank(sel) == d:
                        found = float(lv)
                        break
            span *= 2.0
            if span > 1e3 * max(x0, 1.0):
                raise EmptySweep(f"no usable annulus found above X={x0}")
        out.append(found)
        prev = found
    return out


def geometric_bound_sweep(Q: QuadraticForm, X_grid: Sequence[float], width: float = 1.0) -> GeometrySweep:
    """Diameter lower bound ``D(X)`` across levels, with a lower-envelope power fit.

    Levels whose annulus is too sparse (fewer than ``d+1`` points or no
    non-degenerate simplex) or too large for the subset scan are skipped and
    reported.  The lower envelope at ``X_i`` is ``min(D(X_j) for X_j >= X_i)``.
    """
    d = Q.d
    expo = 1.0 / (2 * (d + 1))
    samples: list[GeometrySample] = []
    skipped: list[tuple[float, str]] = []
    for X in X_grid:
        ps = annulus_points(Q, X, width)
        if len(ps) < d + 1:
            skipped.append((float(X), f"only {len(ps)} points"))
            continue
        try:
            D, diag = min_noncoplanar_diameter(ps, d)
        except (NoNonDegenerateSimplex, CombinatorialBudgetExceeded) as exc:
            skipped.append((float(X), f"{type(exc).__name__}: {exc}"))
            continue
        samples.append(
            GeometrySample(
                X=float(X),
                n_points=len(ps),
                D=D,
                ratio=D / X**expo,
                max_collinear=max_collinear(ps),
                determinant=diag.determinant,
                within_sqrt_x=D < math.sqrt(X),
            )
        )
    if not samples:
        raise EmptySweep("no level in the grid produced a usable annulus")
    samples.sort(key=lambda s: s.X)
    fit = None
    if len(samples) >= 2:
        xs = np.array([s.X for s in samples])
        env = np.minimum.accumulate(np.array([s.D for s in samples])[::-1])[::-1]
        fit = fit_power_law(list(zip(xs, env)))
    return GeometrySweep(Q.theta, float(width), samples, skipped, fit)
