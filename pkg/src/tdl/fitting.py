"""Log-log power-law fits and verdicts against claimed exponents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import InsufficientSamples, NonPositiveSample


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line through ``(log x, log y)``.

    ``residual`` is the root-mean-square of the log-space residuals.
    """

    x: np.ndarray
    y: np.ndarray
    slope: float
    intercept: float
    residual: float

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


class Verdict(NamedTuple):
    passed: bool
    slope: float
    claim: float
    tolerance: float
    direction: str

    def describe(self) -> str:
        op = "<=" if self.direction == "upper" else ">="
        bound = self.claim + self.tolerance if self.direction == "upper" else self.claim - self.tolerance
        status = "PASS" if self.passed else "FAIL"
        return f"{status}: slope {self.slope:.4f} {op} {bound:.4f} (claim {self.claim:.4f}, tol {self.tolerance})"


def fit_power_law(samples: Iterable[tuple[float, float]]) -> PowerLawFit:
    pts = np.asarray(list(samples), dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {len(pts)}")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise NonPositiveSample("power-law fit needs positive x and y")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise InsufficientSamples("all x values coincide")
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - (slope * lx + intercept)
    return PowerLawFit(x, y, float(slope), float(intercept), float(np.sqrt(np.mean(res**2))))


def compare_to_table(fit: PowerLawFit | float, claim: float, tolerance: float = 0.1,
                     direction: str = "upper") -> Verdict:
    """``upper``: pass iff slope <= claim + tol; ``lower``: pass iff slope >= claim - tol."""
    slope = fit.slope if isinstance(fit, PowerLawFit) else float(fit)
    if direction == "upper":
        ok = slope <= claim + tolerance
    elif direction == "lower":
        ok = slope >= claim - tolerance
    else:
        raise ValueError(f"direction must be 'upper' or 'lower', got {direction!r}")
    return Verdict(bool(ok), slope, float(claim), float(tolerance), direction)
