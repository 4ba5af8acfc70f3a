"""Space-time norms of free Schrodinger evolutions of band-limited data.

The quartic functional ``Phi(f) = int_0^T int |e^{it Delta} f|^4 dx dt`` is
evaluated with an exact spatial rule (uniform grid of at least ``4N+1`` points
per axis) and composite trapezoid in time.  Its maximization over the unit
``L^2`` sphere gives lower bounds on the sharp Strichartz constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft as sp_fft
from scipy.optimize import minimize

from .errors import AliasError, ZeroFieldError
from .fields import SpectralField, _analyze, _synth, gaussian_field
from .lattice import QuadraticForm, TorusGeometry, form_from_torus

#: Minimum number of time nodes of the default rule.
MIN_TIME_NODES = 1001
#: Target number of complex entries per time batch.
BATCH_ELEMENTS = 2**20

Box = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class QuadratureSpec:
    """Time window ``[0, t_end]`` with ``n_time`` trapezoid nodes and a spatial grid.

    ``None`` entries are filled in by :func:`resolve_quadrature`.
    """

    t_end: float = 1.0
    n_time: int | None = None
    spatial_grid: tuple[int, ...] | None = None

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be positive and finite")
        if self.n_time is not None and int(self.n_time) < 2:
            raise ValueError("n_time must be >= 2")
        if self.spatial_grid is not None:
            object.__setattr__(self, "spatial_grid", tuple(int(m) for m in self.spatial_grid))


def max_phase_frequency(Q: QuadraticForm, box_a: Box, box_b: Box) -> float:
    """Bound on the time frequencies of ``|u_a u_b|^2`` for free evolutions.

    By polarization these are ``(Q(n1 - n2) - Q(n3 - n4)) / 2`` with
    ``n1, n3`` in ``box_a`` and ``n2, n4`` in ``box_b``.
    """
    total = 0.0
    for th, la, sa, lb, sb in zip(Q.theta, box_a[0], box_a[1], box_b[0], box_b[1]):
        lo = la - (lb + sb - 1)
        hi = (la + sa - 1) - lb
        big = max(lo * lo, hi * hi)
        small = 0 if lo <= 0 <= hi else min(lo * lo, hi * hi)
        total += 0.5 * th * (big - small)
    return total


def default_time_nodes(Q: QuadraticForm, box_a: Box, box_b: Box, t_end: float) -> int:
    """``max(1001, ceil(T Omega / pi) + 1)``; equals about ``50 N^2`` on the unit square torus."""
    omega = max_phase_frequency(Q, box_a, box_b)
    return max(MIN_TIME_NODES, int(math.ceil(t_end * omega / math.pi)) + 1)


def resolve_quadrature(quad: QuadratureSpec | None, Q: QuadraticForm, box_a: Box, box_b: Box) -> QuadratureSpec:
    """Fill defaults and check that the spatial grid integrates ``|u_a u_b|^2`` exactly."""
    quad = quad or QuadratureSpec()
    need = tuple(sa + sb - 1 for sa, sb in zip(box_a[1], box_b[1]))
    grid = quad.spatial_grid
    if grid is None:
        grid = tuple(sp_fft.next_fast_len(m) for m in need)
    if len(grid) != Q.d:
        raise ValueError(f"spatial grid must have {Q.d} entries")
    for m, n in zip(grid, need):
        if m < n:
            raise AliasError(f"spatial grid {grid} below the exact-quadrature size {need}")
    n_time = quad.n_time or default_time_nodes(Q, box_a, box_b, quad.t_end)
    return QuadratureSpec(quad.t_end, int(n_time), tuple(grid))


def trapezoid_weights(n: int, t_end: float) -> np.ndarray:
    h = t_end / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


class _FreeFlow:
    """Batched free evolution of one coefficient box on a fixed set of time nodes.

    For ``d <= 2`` the pruned transforms are dense DFT matrix products, which
    beat zero-padded FFTs at these sizes; higher dimensions use FFTs.
    """

    def __init__(self, Q: QuadraticForm, box: Box, quad: QuadratureSpec, dtype):
        self.lo, self.size = box
        self.quad = quad
        self.dtype = np.dtype(dtype)
        self.sym = Q.values_on_box(self.lo, self.size)
        self.h = quad.t_end / (quad.n_time - 1)
        self.weights = trapezoid_weights(quad.n_time, quad.t_end)
        cells = max(math.prod(quad.spatial_grid), 1)
        self.batch = max(1, min(quad.n_time, BATCH_ELEMENTS // cells))
        j = np.arange(self.batch).reshape((-1,) + (1,) * len(self.size))
        self.base = np.exp(-1j * self.h * j * self.sym)
        self.gemm = len(self.size) <= 2
        if self.gemm:
            self.E, self.EH = [], []
            for lo, L, M in zip(self.lo, self.size, quad.spatial_grid):
                E = np.exp(2j * np.pi * np.outer(np.arange(M), np.arange(lo, lo + L)) / M)
                self.E.append(E.astype(self.dtype))
                self.EH.append((E.conj().T / M).astype(self.dtype))
            self.ET = [np.ascontiguousarray(E.T) for E in self.E]
            self.EHT = [np.ascontiguousarray(E.T) for E in self.EH]

    def batches(self):
        """Yield ``(k0, k1, phases)`` with ``phases[k] = exp(-i t_{k0+k} Q)``."""
        n = self.quad.n_time
        for k0 in range(0, n, self.batch):
            k1 = min(n, k0 + self.batch)
            start = np.exp(-1j * (k0 * self.h) * self.sym)
            yield k0, k1, (start * self.base[: k1 - k0]).astype(self.dtype, copy=False)

    def synth(self, c_t: np.ndarray) -> np.ndarray:
        if not self.gemm:
            return _synth(c_t, self.lo, self.quad.spatial_grid)
        out = c_t @ self.ET[-1]
        if len(self.size) == 2:
            out = np.matmul(self.E[0], out)
        return out

    def analyze(self, v: np.ndarray) -> np.ndarray:
        if not self.gemm:
            return _analyze(v, self.lo, self.size)
        out = v @ self.EHT[-1]
        if len(self.size) == 2:
            out = np.matmul(self.EH[0], out)
        return out


def _precision_dtype(precision: str):
    if precision == "double":
        return np.complex128
    if precision == "single":
        return np.complex64
    raise ValueError(f"precision must be 'double' or 'single', got {precision!r}")


def _modsq(u: np.ndarray) -> np.ndarray:
    return u.real * u.real + u.imag * u.imag


class QuarticFunctional:
    """``Phi(c) = int int |e^{it Delta} f|^4`` and its gradient for one box.

    The gradient is ``G = 2 dPhi/d conj(c)``, so that the directional
    derivative along ``h`` equals ``Re sum conj(G) h``.
    """

    def __init__(self, geometry: TorusGeometry, N: int, quad: QuadratureSpec | None = None,
                 center: Sequence[int] | None = None, precision: str = "double"):
        self.geometry = geometry
        self.Q = form_from_torus(geometry)
        center = tuple(center) if center is not None else (0,) * geometry.d
        box = (tuple(a - N for a in center), (2 * N + 1,) * geometry.d)
        self.quad = resolve_quadrature(quad, self.Q, box, box)
        self.vol = geometry.volume()
        self.flow = _FreeFlow(self.Q, box, self.quad, _precision_dtype(precision))
        self.evaluations = 0

    def _run(self, c: np.ndarray, grad: bool):
        flow = self.flow
        c = np.asarray(c, dtype=flow.dtype)
        cells = math.prod(self.quad.spatial_grid)
        total = 0.0
        G = np.zeros(c.shape, dtype=complex) if grad else None
        self.evaluations += 1
        for k0, k1, ph in flow.batches():
            w = flow.weights[k0:k1]
            u = flow.synth(c * ph)
            a2 = _modsq(u)
            flat = a2.reshape(k1 - k0, -1)
            total += float(w @ np.einsum("ij,ij->i", flat, flat, dtype=float)) / cells
            if grad:
                u *= a2
                A = flow.analyze(u)
                A *= np.conj(ph)
                G += np.tensordot(w, A, axes=(0, 0))
        value = self.vol * total
        if grad:
            return value, 4.0 * self.vol * G
        return value

    def value(self, c) -> float:
        return self._run(c, False)

    def value_and_grad(self, c) -> tuple[float, np.ndarray]:
        return self._run(c, True)


class BilinearFunctional:
    """``B(c1, c2) = int int |e^{it Delta} f1 e^{it Delta} f2|^2`` with partial gradients.

    Gradients are ``G_i = 2 dB/d conj(c_i)``.
    """

    def __init__(self, geometry: TorusGeometry, N1: int, N2: int, quad: QuadratureSpec | None = None,
                 centers: tuple[Sequence[int], Sequence[int]] | None = None, precision: str = "double"):
        self.geometry = geometry
        self.Q = form_from_torus(geometry)
        d = geometry.d
        centers = centers or ((0,) * d, (0,) * d)
        box1 = (tuple(a - N1 for a in centers[0]), (2 * N1 + 1,) * d)
        box2 = (tuple(a - N2 for a in centers[1]), (2 * N2 + 1,) * d)
        self.quad = resolve_quadrature(quad, self.Q, box1, box2)
        self.vol = geometry.volume()
        dtype = _precision_dtype(precision)
        self.flows = (_FreeFlow(self.Q, box1, self.quad, dtype), _FreeFlow(self.Q, box2, self.quad, dtype))
        self.evaluations = 0

    def _run(self, c1, c2, grad: bool):
        f1, f2 = self.flows
        c1 = np.asarray(c1, dtype=f1.dtype)
        c2 = np.asarray(c2, dtype=f2.dtype)
        cells = math.prod(self.quad.spatial_grid)
        total = 0.0
        G1 = np.zeros(c1.shape, dtype=complex) if grad else None
        G2 = np.zeros(c2.shape, dtype=complex) if grad else None
        self.evaluations += 1
        for (k0, k1, p1), (_, _, p2) in zip(f1.batches(), f2.batches()):
            w = f1.weights[k0:k1]
            u1 = f1.synth(c1 * p1)
            u2 = f2.synth(c2 * p2)
            m1 = _modsq(u1)
            m2 = _modsq(u2)
            prod = (m1 * m2).reshape(k1 - k0, -1)
            total += float(w @ prod.sum(axis=1, dtype=float)) / cells
            if grad:
                u1 *= m2
                u2 *= m1
                A1 = f1.analyze(u1)
                A1 *= np.conj(p1)
                A2 = f2.analyze(u2)
                A2 *= np.conj(p2)
                G1 += np.tensordot(w, A1, axes=(0, 0))
                G2 += np.tensordot(w, A2, axes=(0, 0))
        value = self.vol * total
        if grad:
            return value, 2.0 * self.vol * G1, 2.0 * self.vol * G2
        return value

    def value(self, c1, c2) -> float:
        return self._run(c1, c2, False)

    def value_and_grads(self, c1, c2) -> tuple[float, np.ndarray, np.ndarray]:
        return self._run(c1, c2, True)


# -- norms and ratios -----------------------------------------------------------

def l4_spacetime_norm(f: SpectralField, quad: QuadratureSpec | None = None) -> float:
    """``(int_0^T int |e^{it Delta} f|^4 dx dt)^{1/4}``."""
    phi = QuarticFunctional(f.geometry, f.N, quad, f.center).value(f.coeffs)
    return max(phi, 0.0) ** 0.25


def strichartz_ratio(f: SpectralField, quad: QuadratureSpec | None = None) -> float:
    norm = f.l2_norm()
    if norm == 0:
        raise ZeroFieldError("ratio undefined for the zero field")
    return l4_spacetime_norm(f, quad) / norm


def bilinear_ratio(f1: SpectralField, f2: SpectralField, quad: QuadratureSpec | None = None) -> float:
    """``||e^{it Delta} f1 e^{it Delta} f2||_{L^2_{t,x}} / (||f1|| ||f2||)``."""
    if f1.geometry != f2.geometry:
        raise ValueError("fields live on different tori")
    n1, n2 = f1.l2_norm(), f2.l2_norm()
    if n1 == 0 or n2 == 0:
        raise ZeroFieldError("ratio undefined for a zero field")
    B = BilinearFunctional(f1.geometry, f1.N, f2.N, quad, (f1.center, f2.center))
    return math.sqrt(max(B.value(f1.coeffs, f2.coeffs), 0.0)) / (n1 * n2)


# -- maximization ---------------------------------------------------------------

@dataclass
class MaximizeResult:
    """Outcome of a multistart maximization.

    ``history[i]`` lists the ratio after each accepted iterate of restart
    ``i``; ``converged[i]`` is False when the restart ran out of evaluations
    (or was dropped by screening) before meeting the stopping test.
    """

    best_ratio: float
    argmax: SpectralField | tuple[SpectralField, SpectralField]
    history: list[list[float]]
    converged: list[bool]
    quadrature: QuadratureSpec
    trial_ratios: list[float] = field(default_factory=list)
    evaluations: int = 0

    @property
    def all_converged(self) -> bool:
        return all(self.converged)

    def __iter__(self):
        # allows ``best, argmax, history = maximize_ratio(...)``
        return iter((self.best_ratio, self.argmax, self.history))


def _normalize(c: np.ndarray, vol: float) -> np.ndarray:
    return c / math.sqrt(vol * float(np.sum(np.abs(c) ** 2)))


class _SphereProblem:
    """Scale-invariant objective ``R = F(c_1..c_m) / prod_i |c_i|^{2 p_i}`` on packed real vectors.

    ``F`` is homogeneous of degree ``2 p_i`` in each block, so maximizing
    ``R`` without constraints is the same as maximizing ``F`` on the product
    of unit spheres, and ``grad R`` is the tangential (projected) gradient.
    """

    def __init__(self, shapes, powers, vol, value_and_grads):
        self.shapes = shapes
        self.sizes = [math.prod(s) for s in shapes]
        self.powers = powers
        self.vol = vol
        self.vg = value_and_grads

    def unpack(self, x):
        out, k = [], 0
        for shape, n in zip(self.shapes, self.sizes):
            out.append((x[k:k + n] + 1j * x[k + n:k + 2 * n]).reshape(shape))
            k += 2 * n
        return out

    def pack(self, cs):
        return np.concatenate([np.concatenate([c.ravel().real, c.ravel().imag]) for c in cs])

    def __call__(self, x):
        cs = self.unpack(x)
        norms = [self.vol * float(np.sum(np.abs(c) ** 2)) for c in cs]
        val, *grads = self.vg(*cs)
        scale = math.prod(n**p for n, p in zip(norms, self.powers))
        R = val / scale
        parts = []
        for c, G, n, p in zip(cs, grads, norms, self.powers):
            g = G / scale - (2 * p * R * self.vol / n) * c
            parts.append(g)
        # minimize -R; real gradient of Re(conj(g) h) is (g.real, g.imag)
        return -R, -self.pack(parts)


def _lbfgs(problem: _SphereProblem, x0, max_evals: int, tol: float):
    """Run L-BFGS on ``-R``.  Returns ``(x, history, converged)``."""
    hist = []
    last = {}

    def fun(x):
        f, g = problem(x)
        last["x"], last["f"] = x.copy(), f
        if not hist or -f > hist[-1][0]:
            hist.append((-f, x.copy()))
        return f, g

    res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                   options=dict(maxfun=max_evals, maxiter=max_evals, ftol=tol, gtol=1e-12, maxls=10))
    best_val, best_x = hist[-1]
    converged = bool(res.status == 0)
    return best_x, [v for v, _ in hist], converged


def _fixed_point(problem: _SphereProblem, x0, max_evals: int, tol: float):
    """Projected ascent ``c -> c + eta (G/|G| - c)``, renormalized, with step control.

    For a convex functional the full step never decreases the value; larger
    steps are tried after each success and halved after each failure.
    """
    (c,) = problem.unpack(x0)
    vol = problem.vol
    c = _normalize(c, vol)
    f, g = problem(problem.pack([c]))
    (G,) = problem.unpack(-g)
    val, evals, eta, hist = -f, 1, 1.0, [-f]
    while evals < max_evals:
        target = _normalize(G + (2 * problem.powers[0] * val * vol) * c, vol)
        trial = _normalize(c + eta * (target - c), vol)
        f, g = problem(problem.pack([trial]))
        evals += 1
        if -f >= val:
            gain = (-f - val) / max(abs(val), 1e-300)
            c, val = trial, -f
            (G,) = problem.unpack(-g)
            hist.append(val)
            eta = min(eta * 1.5, 4.0)
            if gain <= tol:
                return problem.pack([c]), hist, True
        else:
            eta *= 0.5
            if eta < 1e-3:
                return problem.pack([c]), hist, True
    return problem.pack([c]), hist, False


def _multistart(problem, exact_ratio, draws, max_iters, tol, method, screen):
    """Shared restart loop; ``screen = (evals, survivors)`` races the restarts first."""
    ascend = {"lbfgs": _lbfgs, "fixed-point": _fixed_point}.get(method)
    if ascend is None:
        raise ValueError(f"unknown method {method!r}")
    if screen is None:
        first, keep = max_iters, len(draws)
    else:
        first, keep = int(screen[0]), int(screen[1])
        if not (1 <= first <= max_iters and keep >= 1):
            raise ValueError("screen must be (evals <= max_iters, survivors >= 1)")
    runs = []
    for x0 in draws:
        x, hist, ok = ascend(problem, x0, first, tol)
        runs.append([x, hist, ok])
    order = sorted(range(len(runs)), key=lambda i: -runs[i][1][-1])
    survivors = order[:keep]
    if first < max_iters:
        for i in survivors:
            x, hist, ok = runs[i]
            if not ok:
                x, more, ok = ascend(problem, x, max_iters - first, tol)
                runs[i] = [x, hist + [h for h in more if h > hist[-1]], ok]
    # Screened-out restarts keep their working-precision value; only
    # survivors are re-evaluated with the reference functional.
    ratios = [None] * len(runs)
    for i in range(len(runs)):
        ratios[i] = exact_ratio(runs[i][0]) if i in survivors else None
    best = max(survivors, key=lambda i: ratios[i])
    return runs, ratios, best


def maximize_ratio(N: int, geometry: TorusGeometry, trials: int = 16, max_iters: int = 50,
                   seed: int = 0, quad: QuadratureSpec | None = None, *, tol: float = 1e-9,
                   precision: str = "double", method: str = "lbfgs",
                   screen: tuple[int, int] | None = None) -> MaximizeResult:
    """Best ``||e^{it Delta} f||_{L^4} / ||f||_{L^2}`` found over random restarts.

    Each restart draws complex Gaussian coefficients and ascends ``Phi`` on the
    unit sphere, using at most ``max_iters`` evaluations of value and
    gradient.  ``method="lbfgs"`` takes quasi-Newton steps along the projected
    gradient; ``"fixed-point"`` uses the plain projected step.  With
    ``screen=(k, m)`` every restart first gets ``k`` evaluations and only the
    ``m`` best continue; without screening every restart gets ``max_iters``.
    With ``precision="single"`` the ascent runs in complex64 and the survivors
    are re-evaluated in double precision (screened-out restarts report their
    working-precision value in ``trial_ratios``).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if N < 0:
        raise ValueError("N must be >= 0")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    rng = np.random.default_rng(seed)
    fast = QuarticFunctional(geometry, N, quad, precision=precision)
    exact = fast if precision == "double" else QuarticFunctional(geometry, N, fast.quad)
    vol = fast.vol
    shape = (2 * N + 1,) * geometry.d
    problem = _SphereProblem([shape], [2], vol, fast.value_and_grad)
    draws = [problem.pack([gaussian_field(geometry, N, rng).coeffs]) for _ in range(trials)]

    def exact_ratio(x):
        (c,) = problem.unpack(x)
        return max(exact.value(_normalize(c, vol)), 0.0) ** 0.25

    runs, ratios, best = _multistart(problem, exact_ratio, draws, max_iters, tol, method, screen)
    ratios = [r if r is not None else max(run[1][-1], 0.0) ** 0.25 for r, run in zip(ratios, runs)]
    (c,) = problem.unpack(runs[best][0])
    return MaximizeResult(ratios[best], SpectralField(geometry, _normalize(c, vol)),
                          [[max(h, 0.0) ** 0.25 for h in r[1]] for r in runs],
                          [r[2] for r in runs], fast.quad, ratios, fast.evaluations)


def maximize_bilinear(N1: int, N2: int, geometry: TorusGeometry, trials: int = 8, max_iters: int = 50,
                      seed: int = 0, quad: QuadratureSpec | None = None, *, tol: float = 1e-9,
                      precision: str = "double", screen: tuple[int, int] | None = None) -> MaximizeResult:
    """Best bilinear ratio over the product of the two unit spheres.

    Same scheme as :func:`maximize_ratio`, with quasi-Newton steps along the
    joint projected gradient of ``B``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    rng = np.random.default_rng(seed)
    fast = BilinearFunctional(geometry, N1, N2, quad, precision=precision)
    exact = fast if precision == "double" else BilinearFunctional(geometry, N1, N2, fast.quad)
    vol = fast.vol
    d = geometry.d
    problem = _SphereProblem([(2 * N1 + 1,) * d, (2 * N2 + 1,) * d], [1, 1], vol, fast.value_and_grads)
    draws = [problem.pack([gaussian_field(geometry, N1, rng).coeffs, gaussian_field(geometry, N2, rng).coeffs])
             for _ in range(trials)]

    def exact_ratio(x):
        c1, c2 = problem.unpack(x)
        return math.sqrt(max(exact.value(_normalize(c1, vol), _normalize(c2, vol)), 0.0))

    runs, ratios, best = _multistart(problem, exact_ratio, draws, max_iters, tol, "lbfgs", screen)
    ratios = [r if r is not None else math.sqrt(max(run[1][-1], 0.0)) for r, run in zip(ratios, runs)]
    c1, c2 = problem.unpack(runs[best][0])
    argmax = (SpectralField(geometry, _normalize(c1, vol)), SpectralField(geometry, _normalize(c2, vol)))
    return MaximizeResult(ratios[best], argmax, [[math.sqrt(max(h, 0.0)) for h in r[1]] for r in runs],
                          [r[2] for r in runs], fast.quad, ratios, fast.evaluations)


# -- X^{s,b} --------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceTimeSpectrum:
    """Coefficients ``U[k, n]`` of ``u = sum U exp(2 pi i n.(x/alpha)) exp(i tau_k t)``.

    ``tau`` must be a uniform lattice; ``center`` locates the cube of ``n``.
    """

    coeffs: np.ndarray
    tau: np.ndarray
    s: float = 0.0
    b: float = 0.0
    center: tuple[int, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        tau = np.asarray(self.tau, dtype=float)
        if c.ndim < 2 or c.shape[0] != tau.size:
            raise ValueError("coeffs must have shape (len(tau), 2N+1, ..., 2N+1)")
        if tau.size > 1:
            st = np.diff(np.sort(tau))
            if not (np.all(st > 0) and np.allclose(st, st[0], rtol=1e-9, atol=0)):
                raise ValueError("time-frequency lattice must be uniform with positive spacing")
        d = c.ndim - 1
        center = tuple(int(a) for a in self.center) if len(self.center) else (0,) * d
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "center", center)

    @property
    def N(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    @property
    def d(self) -> int:
        return self.coeffs.ndim - 1


def space_time_spectrum(samples: np.ndarray, period: float, s: float = 0.0, b: float = 0.0,
                        center: Sequence[int] = ()) -> SpaceTimeSpectrum:
    """Discrete time transform of coefficient snapshots ``samples[j] = c(t_j)``.

    ``t_j = j period / K`` for ``K = len(samples)``, treated as one period of a
    periodic signal; ``tau_k = 2 pi k / period`` over signed ``k``.
    """
    samples = np.asarray(samples)
    K = samples.shape[0]
    U = np.fft.fft(samples, axis=0, norm="forward")
    tau = 2 * np.pi * np.fft.fftfreq(K, d=period / K)
    order = np.argsort(tau, kind="stable")
    return SpaceTimeSpectrum(U[order], tau[order], s, b, center)


def xsb_norm(U: SpaceTimeSpectrum, geometry: TorusGeometry) -> float:
    """``(sum (1 + |tau + Q(n)|)^{2b} (1 + Q(n))^s |U|^2)^{1/2}``."""
    if U.d != geometry.d:
        raise ValueError("spectrum dimension does not match the torus")
    Q = form_from_torus(geometry)
    size = U.coeffs.shape[1:]
    lo = tuple(a - (m - 1) // 2 for a, m in zip(U.center, size))
    q = Q.values_on_box(lo, size)
    tau = U.tau.reshape((-1,) + (1,) * U.d)
    w = (1.0 + np.abs(tau + q)) ** (2 * U.b) * (1.0 + q) ** U.s
    return float(np.sqrt(np.sum(w * np.abs(U.coeffs) ** 2)))


def maximize_rows(results: Sequence[tuple[int, MaximizeResult]]) -> list[list]:
    """CSV rows ``(N, best_ratio, trials, converged_trials, n_time, grid)``."""
    rows = []
    for N, r in results:
        rows.append([N, r.best_ratio, len(r.converged), sum(r.converged), r.quadrature.n_time,
                     "x".join(str(m) for m in r.quadrature.spatial_grid)])
    return rows
