"""Spectral Galerkin integrator for the cubic NLS ``i u_t + Delta u = sigma |u|^2 u``.

The kinetic flow is exact (``c -> c exp(-i t Q)``).  The nonlinear flow of the
Galerkin system ``i c_t = sigma P_N(|u|^2 u)`` is advanced by the implicit
midpoint rule written in a frame rotating at the instantaneous frequency
``lambda(w) = sigma int|w|^4 / int|w|^2``:

    w1 = w0 - i dt [sigma P_N(|wm|^2 wm) - lambda(wm) wm],   wm = (w0 + w1) / 2,
    u1 = exp(-i lambda(wm) dt) w1.

Implicit midpoint keeps every quadratic invariant of the truncated system
(mass and momentum) up to the solver tolerance, and it is symmetric.  The
rotation makes plane waves exact: for a single mode the bracket vanishes.
Strang composition with the exact kinetic half steps gives a second-order,
time-reversible scheme.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sp_fft

from . import fields as fields_mod
from .errors import AliasError, InsufficientSamples, NonFiniteDetected
from .fields import SpectralField, dump_field, load_field
from .fitting import PowerLawFit, fit_power_law
from .lattice import TorusGeometry, form_from_torus

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SimulationConfig:
    geometry: TorusGeometry
    N: int
    dt: float
    t_end: float
    record_stride: int = 1
    sobolev_orders: tuple[float, ...] = (1.0, 2.0)
    seed: int = 0
    sigma: float = 1.0
    max_inner: int = 60

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be positive and finite")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        orders = tuple(float(s) for s in self.sobolev_orders)
        if any(s < 0 or not math.isfinite(s) for s in orders):
            raise ValueError("Sobolev orders must be finite and >= 0")
        object.__setattr__(self, "sobolev_orders", orders)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class FieldState:
    time: float
    field: SpectralField


@dataclass
class NormTrace:
    """Recorded ``(time, mass, energy, momentum, H^s norms)`` rows."""

    d: int
    sobolev_orders: tuple[float, ...]
    rows: list[tuple] = field(default_factory=list)

    @property
    def header(self) -> list[str]:
        mom = ["px", "py", "pz"][: self.d] if self.d <= 3 else [f"p{j + 1}" for j in range(self.d)]
        return ["time", "mass", "energy", *mom, *[f"Hs_{s:g}" for s in self.sobolev_orders]]

    def append(self, time: float, mass: float, energy: float, momentum: Sequence[float], hs: Sequence[float]):
        if self.rows and not time > self.rows[-1][0]:
            raise ValueError("trace times must increase strictly")
        self.rows.append((float(time), float(mass), float(energy), *map(float, momentum), *map(float, hs)))

    def column(self, name: str) -> np.ndarray:
        return np.array([r[self.header.index(name)] for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("time")

    def momentum(self) -> np.ndarray:
        return np.array([r[3:3 + self.d] for r in self.rows])

    def hs(self, s: float) -> np.ndarray:
        return self.column(f"Hs_{float(s):g}")

    def to_csv(self, dest: str | os.PathLike | io.TextIOBase | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([repr(float(v)) for v in r])
        text = buf.getvalue()
        if dest is not None:
            if hasattr(dest, "write"):
                dest.write(text)
            else:
                with open(dest, "w", newline="") as fh:
                    fh.write(text)
        return text

    @classmethod
    def from_csv(cls, src: str | os.PathLike) -> "NormTrace":
        with open(src, newline="") as fh:
            rows = list(csv.reader(fh))
        header = rows[0]
        orders = tuple(float(h[3:]) for h in header if h.startswith("Hs_"))
        d = len(header) - 3 - len(orders)
        out = cls(d, orders)
        out.rows = [tuple(float(v) for v in r) for r in rows[1:]]
        return out


# -- the cubic term -------------------------------------------------------------

class GalerkinCubic:
    """``P_N(|u|^2 u)`` and ``int |u|^4`` on a grid of at least ``4N+1`` points.

    On such a grid neither quantity has aliasing error.
    """

    def __init__(self, geometry: TorusGeometry, N: int, center: Sequence[int] | None = None,
                 grid: int | None = None):
        d = geometry.d
        self.N = N
        self.d = d
        self.vol = geometry.volume()
        M = sp_fft.next_fast_len(4 * N + 1) if grid is None else int(grid)
        if M < 4 * N + 1:
            raise AliasError(f"grid {M} below 4N+1 = {4 * N + 1}")
        self.M = M
        center = tuple(center) if center is not None else (0,) * d
        self.index = np.ix_(*[np.arange(a - N, a + N + 1) % M for a in center])

    def to_grid(self, c: np.ndarray) -> np.ndarray:
        buf = np.zeros((self.M,) * self.d, dtype=complex)
        buf[self.index] = c
        return sp_fft.ifftn(buf, norm="forward", workers=fields_mod.FFT_WORKERS)

    def to_modes(self, v: np.ndarray) -> np.ndarray:
        return sp_fft.fftn(v, norm="forward", workers=fields_mod.FFT_WORKERS)[self.index]

    def cubic(self, c: np.ndarray) -> tuple[np.ndarray, float]:
        """``(P_N(|u|^2 u), int |u|^4)``."""
        u = self.to_grid(c)
        a2 = u.real * u.real + u.imag * u.imag
        quartic = self.vol * float(np.mean(a2 * a2))
        return self.to_modes(a2 * u), quartic

    def quartic(self, c: np.ndarray) -> float:
        u = self.to_grid(c)
        a2 = u.real * u.real + u.imag * u.imag
        return self.vol * float(np.mean(a2 * a2))


class StrangSolver:
    """Fixed-step Strang splitting for one geometry, box and step size."""

    def __init__(self, geometry: TorusGeometry, N: int, dt: float, sigma: float = 1.0,
                 center: Sequence[int] | None = None, max_inner: int = 60):
        if dt == 0 or not math.isfinite(dt):
            raise ValueError("dt must be nonzero and finite")
        self.geometry = geometry
        self.N = N
        self.dt = float(dt)
        self.sigma = float(sigma)
        self.max_inner = max_inner
        d = geometry.d
        self.center = tuple(center) if center is not None else (0,) * d
        lo = tuple(a - N for a in self.center)
        self.sym = form_from_torus(geometry).values_on_box(lo, (2 * N + 1,) * d)
        self.half = np.exp(-0.5j * self.dt * self.sym)
        self.cubic = GalerkinCubic(geometry, N, self.center)
        self.vol = self.cubic.vol
        self.inner_iterations = 0

    def _mass(self, c) -> float:
        return self.vol * float(np.sum(c.real * c.real + c.imag * c.imag))

    def nonlinear(self, c0: np.ndarray, dt: float) -> np.ndarray:
        """One implicit-midpoint step of the rotating-frame nonlinear flow."""
        m0 = self._mass(c0)
        if m0 == 0.0:
            return c0.copy()
        sigma = self.sigma
        u = self.cubic.to_grid(c0)
        a2 = u.real * u.real + u.imag * u.imag
        lam = sigma * self.vol * float(np.mean(a2 * a2)) / m0
        w1 = np.exp(1j * lam * dt) * self.cubic.to_modes(np.exp(-1j * sigma * dt * a2) * u)
        scale = 4 * _EPS * math.sqrt(float(np.sum(np.abs(c0) ** 2)))
        prev = math.inf
        for _ in range(self.max_inner):
            wm = 0.5 * (c0 + w1)
            P, q = self.cubic.cubic(wm)
            lam = sigma * q / self._mass(wm)
            new = c0 - 1j * dt * (sigma * P - lam * wm)
            diff = math.sqrt(float(np.sum(np.abs(new - w1) ** 2)))
            w1 = new
            self.inner_iterations += 1
            if diff <= scale or diff >= prev:
                break
            prev = diff
        return np.exp(-1j * lam * dt) * w1

    def step(self, c: np.ndarray, dt: float | None = None) -> np.ndarray:
        if dt is None or dt == self.dt:
            half, dt = self.half, self.dt
        else:
            half = np.exp(-0.5j * dt * self.sym)
        c = half * c
        c = self.nonlinear(c, dt)
        return half * c


def strang_step(state: FieldState, dt: float, sigma: float = 1.0) -> FieldState:
    """Advance one Strang step (negative ``dt`` steps backwards)."""
    f = state.field
    solver = StrangSolver(f.geometry, f.N, dt, sigma, f.center)
    return FieldState(state.time + dt, f.with_coeffs(solver.step(f.coeffs)))


# -- diagnostics ----------------------------------------------------------------

def sobolev_norm(f: SpectralField, s: float) -> float:
    """``(vol sum (1 + Q(n))^s |c(n)|^2)^{1/2}``."""
    w = (1.0 + f.symbol()) ** s
    return float(np.sqrt(f.volume() * np.sum(w * np.abs(f.coeffs) ** 2)))


def momentum_of(f: SpectralField) -> np.ndarray:
    vol = f.volume()
    p2 = np.abs(f.coeffs) ** 2
    out = np.zeros(f.d)
    for j, (idx, a) in enumerate(zip(f.indices(), f.geometry.alpha)):
        axes = tuple(k for k in range(f.d) if k != j)
        out[j] = vol * float(np.dot(2 * np.pi * idx / a, p2.sum(axis=axes)))
    return out


def invariants_of(f: SpectralField, sigma: float = 1.0, grid: int | None = None) -> tuple[float, float, np.ndarray]:
    """``(mass, energy, momentum)`` with energy ``int |grad u|^2 + (sigma/2) int |u|^4``."""
    p2 = np.abs(f.coeffs) ** 2
    vol = f.volume()
    mass = vol * float(np.sum(p2))
    kinetic = vol * float(np.sum(f.symbol() * p2))
    quartic = GalerkinCubic(f.geometry, f.N, f.center, grid).quartic(f.coeffs) if mass > 0 else 0.0
    return mass, kinetic + 0.5 * sigma * quartic, momentum_of(f)


def record_state(trace: NormTrace, t: float, f: SpectralField, sigma: float = 1.0):
    """Append the diagnostics of ``f`` at time ``t``."""
    mass, energy, mom = invariants_of(f, sigma)
    trace.append(t, mass, energy, mom, [sobolev_norm(f, s) for s in trace.sobolev_orders])


def growth_fit(trace: NormTrace, s: float, t_min: float) -> PowerLawFit:
    """Log-log slope of ``||u(t)||_{H^s}`` against ``t`` over ``t >= t_min``."""
    t = trace.times
    y = trace.hs(s)
    keep = t >= t_min
    keep &= t > 0
    if np.count_nonzero(keep) < 2:
        raise InsufficientSamples(f"fewer than 2 records with t >= {t_min}")
    return fit_power_law(zip(t[keep], y[keep]))


# -- driver ---------------------------------------------------------------------

@dataclass
class SimulationResult:
    trace: NormTrace
    final: FieldState
    inner_iterations: int = 0


def run_simulation(config: SimulationConfig, u0: SpectralField | FieldState, *,
                   checkpoint_path: str | os.PathLike | None = None, checkpoint_every: int = 0,
                   trace: NormTrace | None = None,
                   progress: Callable[[FieldState], None] | None = None) -> SimulationResult:
    """Integrate from ``u0`` (a field at time 0 or a saved state) up to ``t_end``.

    Records every ``record_stride`` steps counted from time 0, so a resumed
    run lines up with an uninterrupted one.  Times are ``k * dt``.
    """
    state = u0 if isinstance(u0, FieldState) else FieldState(0.0, u0)
    f = state.field
    if f.geometry != config.geometry or f.N != config.N:
        raise ValueError("initial field does not match the configured torus and N")
    solver = StrangSolver(config.geometry, config.N, config.dt, config.sigma, f.center, config.max_inner)
    k0 = int(round(state.time / config.dt))
    if trace is None:
        trace = NormTrace(config.geometry.d, config.sobolev_orders)
        if k0 % config.record_stride == 0:
            record_state(trace, k0 * config.dt, f, config.sigma)
    c = f.coeffs.copy()
    for k in range(k0 + 1, config.n_steps + 1):
        c = solver.step(c)
        t = k * config.dt
        if not np.all(np.isfinite(c)):
            raise NonFiniteDetected(f"non-finite coefficients at t = {t:g}", t)
        if k % config.record_stride == 0 or k == config.n_steps:
            record_state(trace, t, f.with_coeffs(c), config.sigma)
        if checkpoint_path is not None and checkpoint_every and k % checkpoint_every == 0:
            save_checkpoint(checkpoint_path, FieldState(t, f.with_coeffs(c)))
        if progress is not None:
            progress(FieldState(t, f.with_coeffs(c)))
    final = FieldState(config.n_steps * config.dt, f.with_coeffs(c))
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, final)
    return SimulationResult(trace, final, solver.inner_iterations)


def save_checkpoint(path: str | os.PathLike, state: FieldState) -> None:
    tmp = f"{os.fspath(path)}.tmp"
    dump_field(tmp, state.field, state.time)
    os.replace(tmp, path)


def load_checkpoint(path: str | os.PathLike) -> FieldState:
    f, t = load_field(path)
    if t is None:
        raise ValueError("field dump carries no time stamp")
    return FieldState(t, f)


def trim_trace(trace: NormTrace, time: float, config: SimulationConfig) -> None:
    """Keep the on-stride rows up to ``time`` (drops an earlier run's closing row)."""
    k_end = round(time / config.dt)
    trace.rows = [r for r in trace.rows
                  if (k := round(r[0] / config.dt)) <= k_end and k % config.record_stride == 0]


def resume_simulation(config: SimulationConfig, checkpoint_path: str | os.PathLike,
                      trace_path: str | os.PathLike | None = None, **kw) -> SimulationResult:
    """Continue from a checkpoint, appending to an existing trace CSV when given."""
    state = load_checkpoint(checkpoint_path)
    trace = None
    if trace_path is not None and os.path.exists(trace_path):
        trace = NormTrace.from_csv(trace_path)
        trim_trace(trace, state.time, config)
    return run_simulation(config, state, trace=trace, checkpoint_path=checkpoint_path, **kw)


# -- Picard iteration -----------------------------------------------------------

class _Double:
    """complex128 kernels for the Picard iteration."""

    pi = math.pi

    def num(self, x):
        return float(x)

    def array(self, a):
        return np.asarray(a, dtype=complex)

    def exp_i(self, x):
        return np.exp(1j * np.asarray(x, dtype=float))

    def modsq(self, z):
        return z.real * z.real + z.imag * z.imag

    def sqrt(self, x):
        return math.sqrt(float(x))


class _Multi:
    """gmpy2 kernels on object arrays, at a fixed binary precision."""

    def __init__(self, bits: int):
        import gmpy2

        self.g = gmpy2
        self.context = gmpy2.context(precision=bits)
        with gmpy2.context(self.context):
            self.pi = gmpy2.const_pi()
        self._exp_i = np.frompyfunc(lambda x: gmpy2.exp(gmpy2.mpc(0, x)), 1, 1)
        self._modsq = np.frompyfunc(gmpy2.norm, 1, 1)
        self._mpc = np.frompyfunc(lambda z: gmpy2.mpc(complex(z)), 1, 1)

    def num(self, x):
        return self.g.mpfr(x)

    def array(self, a):
        return self._mpc(np.asarray(a, dtype=complex)).astype(object)

    def exp_i(self, x):
        return self._exp_i(x)

    def modsq(self, z):
        return self._modsq(z)

    def sqrt(self, x):
        return self.g.sqrt(x)


def _picard(u0: SpectralField, T: float, iters: int, n_time: int, sigma: float, s: float, ar) -> list[float]:
    d, N = u0.d, u0.N
    L, M = 2 * N + 1, 4 * N + 1
    vol = ar.num(u0.volume())
    idx = [np.arange(lo, lo + L) for lo in u0.lo]
    # Q(n) and the H^s weight in working precision
    Qn = 0
    for j, (a, k) in enumerate(zip(u0.geometry.alpha, idx)):
        th = (2 * ar.pi / ar.num(a)) ** 2
        shape = [1] * d
        shape[j] = L
        Qn = Qn + (th * (k * k).astype(object if isinstance(ar, _Multi) else float)).reshape(shape)
    Qn = Qn + np.zeros((L,) * d, dtype=object if isinstance(ar, _Multi) else float)
    weight = (1 + Qn) ** ar.num(s)
    # exact DFT matrices: synthesis M x L, analysis L x M
    E, EH = [], []
    for k in idx:
        phase = np.outer(np.arange(M), k) % M
        e = ar.exp_i(2 * ar.pi * phase.astype(object if isinstance(ar, _Multi) else float) / M)
        E.append(e)
        EH.append(np.conj(e).T / M)

    def apply(mats, a):
        for j, m in enumerate(mats):
            a = np.moveaxis(np.tensordot(m, a, axes=([1], [j])), 0, j)
        return a

    def cubic(c):
        u = apply(E, c)
        return apply(EH, ar.modsq(u) * u)

    h = ar.num(T) / (n_time - 1)
    times = [h * j for j in range(n_time)]
    c0 = ar.array(u0.coeffs)
    prop = [ar.exp_i(-t * Qn) for t in times]
    back = [ar.exp_i(t * Qn) for t in times]
    current = [p * c0 for p in prop]
    deltas = []
    for _ in range(iters):
        integrand = [back[j] * (sigma * cubic(current[j])) for j in range(n_time)]
        acc = 0 * c0
        nxt = [prop[0] * c0]
        for j in range(1, n_time):
            acc = acc + (integrand[j - 1] + integrand[j]) * (h / 2)
            nxt.append(prop[j] * (c0 - 1j * acc))
        dist = 0.0
        for a, b in zip(nxt, current):
            diff = a - b
            val = float(ar.sqrt(vol * np.sum(weight * ar.modsq(diff))))
            if not math.isfinite(val):
                raise NonFiniteDetected("non-finite Picard iterate", float(T))
            dist = max(dist, val)
        deltas.append(dist)
        current = nxt
    return deltas


def picard_iteration(u0: SpectralField, T: float, iters: int, n_time: int = 101,
                     sigma: float = 1.0, s: float = 1.0,
                     precision_bits: int | None = None) -> list[float]:
    """Distances ``delta_k = max_j ||u^{k+1}(t_j) - u^k(t_j)||_{H^s}`` of Duhamel iterates.

    ``u^{k+1}(t) = e^{it Delta} u0 - i sigma int_0^t e^{i(t - tau) Delta} P_N(|u^k|^2 u^k) dtau``
    with ``u^0(t) = e^{it Delta} u0``, the integral by cumulative trapezoid on
    ``n_time`` uniform nodes of ``[0, T]`` and the cubic term exact on a grid
    of ``4N+1`` points.  Small data contract so fast that double precision
    bottoms out after a few iterates; ``precision_bits`` switches every
    operation to gmpy2 multiprecision.
    """
    if iters < 2:
        raise ValueError("iters must be >= 2")
    if not T > 0:
        raise ValueError("T must be positive")
    if n_time < 2:
        raise ValueError("n_time must be >= 2")
    if precision_bits is None:
        return _picard(u0, T, iters, n_time, sigma, s, _Double())
    import gmpy2

    ar = _Multi(precision_bits)
    with gmpy2.context(ar.context):
        return _picard(u0, T, iters, n_time, sigma, s, ar)
