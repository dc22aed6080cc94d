"""Reference arithmetic: exact MAC, fixed-point MAC and error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Reported figures for the digital 5x4 baselines (energy fJ/MAC, error %,
# MSE, area um^2/MAC).  Kept for reports; not computed.
FXP_BASELINES = {
    "3x3": {"energy_fj_per_mac": 60.9, "error_pct": 64.7, "mse": 14.64, "area_um2_per_mac": 127.7},
    "4x4": {"energy_fj_per_mac": 107.0, "error_pct": 10.0, "mse": 0.24, "area_um2_per_mac": 246.2},
    "8x4": {"energy_fj_per_mac": 226.2, "error_pct": 6.52, "mse": 0.099, "area_um2_per_mac": 655.8},
    "8x8": {"energy_fj_per_mac": 526.0, "error_pct": 0.74, "mse": 0.002, "area_um2_per_mac": 1380.7},
    "C3PU": {"energy_fj_per_mac": 66.4, "error_pct": 5.7, "mse": 0.082, "area_um2_per_mac": 180.0},
}


def ideal_mac(inputs, weights) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise ValidationError(f"cannot multiply inputs {x.shape} by weights {w.shape}")
    return x @ w


@dataclass(frozen=True)
class FxpFormat:
    input_bits: int
    weight_bits: int
    rounding: str = "nearest"  # or "truncate"

    def __post_init__(self):
        if self.input_bits < 1 or self.weight_bits < 1:
            raise ValidationError("bit widths must be >= 1")
        if self.rounding not in ("nearest", "truncate"):
            raise ValidationError(f"unknown rounding mode {self.rounding!r}")

    @property
    def label(self) -> str:
        return f"{self.input_bits}x{self.weight_bits}"


def quantize(x, bits: int, rounding: str = "nearest") -> np.ndarray:
    """Integer codes of ``x`` on a uniform ``2**bits``-level grid over [0, 1]."""
    levels = (1 << bits) - 1
    scaled = np.clip(np.asarray(x, dtype=float), 0.0, 1.0) * levels
    codes = np.floor(scaled + 0.5) if rounding == "nearest" else np.floor(scaled)
    return codes.astype(np.int64)


def fxp_mac(inputs, weights, fmt: FxpFormat) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise ValidationError(f"cannot multiply inputs {x.shape} by weights {w.shape}")
    if x.min(initial=0) < 0 or x.max(initial=0) > 1 or w.min() < 0 or w.max() > 1:
        raise ValidationError("fixed-point operands must lie in [0, 1]")
    xi = quantize(x, fmt.input_bits, fmt.rounding)
    wi = quantize(w, fmt.weight_bits, fmt.rounding)
    acc = xi @ wi  # exact in int64
    return acc / (((1 << fmt.input_bits) - 1) * ((1 << fmt.weight_bits) - 1))


@dataclass(frozen=True)
class ErrorReport:
    per_column: np.ndarray  # samples x cols, percent
    average: float
    mse: float

    @property
    def column_average(self) -> np.ndarray:
        return self.per_column.mean(axis=0)


def error_report(observed, expected) -> ErrorReport:
    """Relative error in percent per entry, its mean, and the MSE.

    Entries whose expected value is zero report ``100 * |obs - exp|``
    (absolute error on the same percent scale) instead.
    """
    obs = np.atleast_2d(np.asarray(observed, dtype=float))
    exp = np.atleast_2d(np.asarray(expected, dtype=float))
    if obs.shape != exp.shape:
        raise ValidationError(f"shape mismatch: observed {obs.shape} vs expected {exp.shape}")
    diff = np.abs(obs - exp)
    denom = np.where(exp == 0, 1.0, np.abs(exp))
    pct = 100.0 * diff / denom
    return ErrorReport(pct, float(pct.mean()), float(np.mean((obs - exp) ** 2)))
