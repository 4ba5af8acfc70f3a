"""Band-limited fields on a flat torus, stored as Fourier coefficients.

Convention: ``u(x) = sum_n c(n) exp(2 pi i n.(x/alpha))`` with ``n`` ranging over
the cube ``center + [-N, N]^d``.  Physical grids are uniform with ``M_j`` points
per axis, ``x_k = alpha * k / M``, so that ``u(x_k) = sum_n c(n) exp(2 pi i n.k/M)``.
The free flow ``e^{it Delta}`` multiplies ``c(n)`` by ``exp(-i t Q(n))``.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Sequence

import numpy as np
import scipy.fft as sp_fft

from .errors import AliasError
from .lattice import QuadraticForm, TorusGeometry, form_from_torus

FFT_WORKERS: int | None = None


@dataclass(frozen=True)
class SpectralField:
    geometry: TorusGeometry
    coeffs: np.ndarray
    center: tuple[int, ...] = field(default=())

    def __post_init__(self):
        d = self.geometry.d
        c = np.asarray(self.coeffs)
        if not np.iscomplexobj(c):
            c = c.astype(complex)
        if c.ndim != d:
            raise ValueError(f"coefficient array must have {d} axes, got {c.ndim}")
        L = c.shape[0]
        if any(s != L for s in c.shape) or L % 2 == 0:
            raise ValueError(f"coefficients must live on an odd cube, got shape {c.shape}")
        center = tuple(int(a) for a in self.center) if len(self.center) else (0,) * d
        if len(center) != d:
            raise ValueError("center must have one entry per dimension")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "center", center)

    @property
    def d(self) -> int:
        return self.geometry.d

    @property
    def N(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def lo(self) -> tuple[int, ...]:
        return tuple(a - self.N for a in self.center)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape

    def volume(self) -> float:
        return self.geometry.volume()

    def form(self) -> QuadraticForm:
        return form_from_torus(self.geometry)

    def indices(self) -> list[np.ndarray]:
        return [np.arange(lo, lo + s) for lo, s in zip(self.lo, self.shape)]

    def symbol(self) -> np.ndarray:
        """``Q(n)`` on the coefficient cube."""
        return self.form().values_on_box(self.lo, self.shape)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.volume() * np.sum(np.abs(self.coeffs) ** 2)))

    def with_coeffs(self, coeffs) -> "SpectralField":
        return replace(self, coeffs=np.asarray(coeffs))

    def __mul__(self, scalar) -> "SpectralField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__


def zeros(geometry: TorusGeometry, N: int) -> SpectralField:
    return SpectralField(geometry, np.zeros((2 * N + 1,) * geometry.d, dtype=complex))


def single_mode(geometry: TorusGeometry, N: int, n: Sequence[int], amplitude: complex = 1.0) -> SpectralField:
    f = zeros(geometry, N)
    c = f.coeffs.copy()
    c[tuple(int(k) + N for k in n)] = amplitude
    return f.with_coeffs(c)


def gaussian_field(geometry: TorusGeometry, N: int, rng: np.random.Generator) -> SpectralField:
    """Complex Gaussian coefficients, unit ``L^2`` norm."""
    shape = (2 * N + 1,) * geometry.d
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    f = SpectralField(geometry, c)
    return f * (1.0 / f.l2_norm())


def smooth_random_field(geometry: TorusGeometry, N: int, rng: np.random.Generator,
                        h1_norm: float = 1.0, width: float | None = None) -> SpectralField:
    """Random field with a Gaussian spectral envelope ``exp(-|n|^2 / (2 width^2))``.

    ``width`` defaults to ``max(1, N/6)`` so the tail at the cube edge is far
    below double precision.  Rescaled to the requested ``H^1`` norm.
    """
    width = max(1.0, N / 6.0) if width is None else float(width)
    shape = (2 * N + 1,) * geometry.d
    k = np.arange(-N, N + 1, dtype=float)
    r2 = sum(np.meshgrid(*([k * k] * geometry.d), indexing="ij"))
    env = np.exp(-r2 / (2 * width**2))
    c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * env
    f = SpectralField(geometry, c)
    norm = np.sqrt(f.volume() * np.sum((1.0 + f.symbol()) * np.abs(c) ** 2))
    return f * (h1_norm / norm)


# -- transforms -----------------------------------------------------------------

def _synth(c: np.ndarray, lo: Sequence[int], grid: Sequence[int]) -> np.ndarray:
    """Grid values from coefficients over the trailing ``d`` axes (batch axes lead)."""
    d = len(grid)
    out = c
    for j in reversed(range(d)):
        ax = out.ndim - d + j
        L, M = out.shape[ax], grid[j]
        idx = (lo[j] + np.arange(L)) % M
        shape = list(out.shape)
        shape[ax] = M
        buf = np.zeros(shape, dtype=out.dtype)
        buf[(slice(None),) * ax + (idx,)] = out
        out = sp_fft.ifft(buf, axis=ax, norm="forward", workers=FFT_WORKERS)
    return out


def _analyze(v: np.ndarray, lo: Sequence[int], size: Sequence[int]) -> np.ndarray:
    """Fourier coefficients on the box ``lo + [0, size)`` of grid values (trailing axes)."""
    d = len(size)
    out = v
    for j in range(d):
        ax = out.ndim - d + j
        M = out.shape[ax]
        out = sp_fft.fft(out, axis=ax, norm="forward", workers=FFT_WORKERS)
        out = np.take(out, (lo[j] + np.arange(size[j])) % M, axis=ax)
    return out


def _check_grid(grid: Sequence[int], need: Sequence[int], what: str) -> tuple[int, ...]:
    grid = tuple(int(m) for m in grid)
    if len(grid) != len(need):
        raise ValueError(f"grid must have {len(need)} entries")
    for m, n in zip(grid, need):
        if m < n:
            raise AliasError(f"grid {grid} too small for {what}: need at least {tuple(need)}")
    return grid


def synthesize(f: SpectralField, grid: Sequence[int] | int | None = None) -> np.ndarray:
    """Values of ``f`` on the uniform grid; exact for any grid with ``M_j >= 2N+1``."""
    need = [s for s in f.shape]
    if grid is None:
        grid = need
    elif np.isscalar(grid):
        grid = [int(grid)] * f.d
    grid = _check_grid(grid, need, "synthesis")
    return _synth(f.coeffs, f.lo, grid)


def analyze(values: np.ndarray, geometry: TorusGeometry, N: int,
            center: Sequence[int] | None = None) -> SpectralField:
    """Project grid values onto the cube ``center + [-N, N]^d``."""
    d = geometry.d
    center = tuple(center) if center is not None else (0,) * d
    lo = tuple(a - N for a in center)
    c = _analyze(np.asarray(values), lo, (2 * N + 1,) * d)
    return SpectralField(geometry, c, center)


def evolve_field(f: SpectralField, t: float) -> SpectralField:
    """Free Schrodinger flow ``e^{it Delta}``: ``c(n) -> c(n) exp(-i t Q(n))``."""
    if t == 0:
        return f
    return f.with_coeffs(f.coeffs * np.exp(-1j * t * f.symbol()))


def frequency_shift(f: SpectralField, a: Sequence[int]) -> SpectralField:
    """Re-index ``n -> n + a``: multiplication by ``exp(2 pi i a.(x/alpha))``."""
    a = tuple(int(x) for x in a)
    if len(a) != f.d:
        raise ValueError("shift must have one entry per dimension")
    return SpectralField(f.geometry, f.coeffs.copy(), tuple(c + s for c, s in zip(f.center, a)))


def sobolev_weight(f: SpectralField, s: float) -> np.ndarray:
    return (1.0 + f.symbol()) ** s


# -- binary dump ----------------------------------------------------------------

MAGIC = b"TDLF"
VERSION = 1
LAYOUT_C = 0
FLAG_TIME = 1
_HEAD = struct.Struct("<4sHHIBBH")


def dump_field(dest: str | os.PathLike | BinaryIO, f: SpectralField, time: float | None = None) -> None:
    """Write ``f`` (and optionally a time stamp) in the documented binary layout.

    Little endian: magic ``TDLF``, u16 version, u16 d, u32 N, u8 layout (0 = C
    order, last axis fastest), u8 flags (bit 0: time present), u16 reserved;
    then ``d`` int64 centre entries, ``d`` float64 side lengths, an optional
    float64 time, and ``(2N+1)^d`` (re, im) float64 pairs.
    """
    flags = FLAG_TIME if time is not None else 0
    buf = io.BytesIO()
    buf.write(_HEAD.pack(MAGIC, VERSION, f.d, f.N, LAYOUT_C, flags, 0))
    buf.write(np.asarray(f.center, dtype="<i8").tobytes())
    buf.write(np.asarray(f.geometry.alpha, dtype="<f8").tobytes())
    if time is not None:
        buf.write(struct.pack("<d", float(time)))
    buf.write(np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes())
    data = buf.getvalue()
    if hasattr(dest, "write"):
        dest.write(data)
    else:
        with open(dest, "wb") as fh:
            fh.write(data)


def load_field(src: str | os.PathLike | BinaryIO) -> tuple[SpectralField, float | None]:
    if hasattr(src, "read"):
        data = src.read()
    else:
        with open(src, "rb") as fh:
            data = fh.read()
    magic, version, d, N, layout, flags, _ = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError("not a field dump (bad magic)")
    if version != VERSION or layout != LAYOUT_C:
        raise ValueError(f"unsupported dump version {version} / layout {layout}")
    off = _HEAD.size
    center = tuple(int(x) for x in np.frombuffer(data, "<i8", d, off))
    off += 8 * d
    alpha = tuple(float(x) for x in np.frombuffer(data, "<f8", d, off))
    off += 8 * d
    time = None
    if flags & FLAG_TIME:
        (time,) = struct.unpack_from("<d", data, off)
        off += 8
    L = 2 * N + 1
    coeffs = np.frombuffer(data, "<c16", L**d, off).reshape((L,) * d).astype(complex)
    if off + 16 * L**d != len(data):
        raise ValueError("trailing or missing bytes in field dump")
    return SpectralField(TorusGeometry(alpha), coeffs, center), time
