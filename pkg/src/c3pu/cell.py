"""One C3PU computational element.

The stored operand is the capacitive-divider ratio
``x_eq = C_c / (C_c + C_b + C_g)``; the gate sees ``V_g = V_amp * x_eq`` and
the transistor turns that into a drain current.  Driving the cell with a
pulse of width ``pw`` deposits ``I_ds * pw`` on the bitline, so the charge is
the product of both operands.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NonlinearityWarning, ValidationError

# Legal x_eq window for linear operation.
XEQ_WINDOW = (0.5, 0.75)
DEFAULT_C_B = 2.5e-15
DEFAULT_C_G = 0.1667e-15


@dataclass(frozen=True)
class CellConfig:
    c_c: float
    c_b: float = DEFAULT_C_B
    c_g: float = DEFAULT_C_G

    def __post_init__(self):
        if not self.c_c > 0:
            raise ValidationError(f"c_c must be positive, got {self.c_c}")
        if self.c_b < 0 or self.c_g < 0:
            raise ValidationError("c_b and c_g must be non-negative")

    @classmethod
    def for_weight(cls, x_target: float, c_b: float = DEFAULT_C_B, c_g: float = DEFAULT_C_G):
        return cls(capacitance_for_weight(x_target, c_b, c_g), c_b, c_g)


@dataclass(frozen=True)
class TransistorModel:
    """Piecewise transfer: linear (``g_m * V_g``) inside the window.

    With ``continuous=True`` (default) the current is clamped to the window
    edges outside it.  Otherwise ``i_off`` is used below and ``i_sat`` above.
    """

    g_m: float = 230.13e-6
    v_g_linear: tuple[float, float] = (0.5, 0.8)
    continuous: bool = True
    i_off: float = 0.0
    i_sat: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "v_g_linear", tuple(float(v) for v in self.v_g_linear))
        if not self.g_m > 0:
            raise ValidationError(f"g_m must be positive, got {self.g_m}")
        lo, hi = self.v_g_linear
        if not 0 <= lo < hi:
            raise ValidationError(f"linear window must be ordered, got {self.v_g_linear}")
        if self.i_sat is None:
            object.__setattr__(self, "i_sat", self.g_m * hi)

    def in_window(self, v_g):
        lo, hi = self.v_g_linear
        v = np.asarray(v_g, dtype=float)
        return (v >= lo - 1e-12) & (v <= hi + 1e-12)


def x_eq(c: CellConfig) -> float:
    total = c.c_c + c.c_b + c.c_g
    if total <= 0:
        raise ValidationError("total cell capacitance must be positive")
    return c.c_c / total


def xeq_array(c_c, c_b, c_g):
    """Vectorized ``x_eq`` over broadcastable capacitance arrays."""
    c_c = np.asarray(c_c, dtype=float)
    total = c_c + np.asarray(c_b, dtype=float) + np.asarray(c_g, dtype=float)
    if np.any(total <= 0):
        raise ValidationError("total cell capacitance must be positive")
    return c_c / total


def gate_voltage(v_amp: float, c: CellConfig) -> float:
    if v_amp < 0:
        raise ValidationError(f"pulse amplitude must be >= 0, got {v_amp}")
    return v_amp * x_eq(c)


def drain_current(v_g, t: TransistorModel = TransistorModel()):
    v = np.asarray(v_g, dtype=float)
    if np.any(v < 0):
        raise ValidationError("gate voltage must be >= 0")
    lo, hi = t.v_g_linear
    if t.continuous:
        out = t.g_m * np.clip(v, lo, hi)
    else:
        out = np.where(v < lo, t.i_off, np.where(v > hi, t.i_sat, t.g_m * v))
    return float(out) if out.ndim == 0 else out


def cell_charge(pw: float, v_amp: float, c: CellConfig, t: TransistorModel = TransistorModel()) -> float:
    """Charge one cell delivers to its bitline during a pulse of width ``pw``.

    Emits :class:`NonlinearityWarning` when the gate voltage sits outside the
    transistor's linear window; the piecewise model is still evaluated.
    """
    if pw < 0:
        raise ValidationError(f"pulse width must be >= 0, got {pw}")
    v_g = gate_voltage(v_amp, c)
    if not t.in_window(v_g):
        warnings.warn(
            f"gate voltage {v_g:.4g} V outside linear window {t.v_g_linear}",
            NonlinearityWarning,
            stacklevel=2,
        )
    return drain_current(v_g, t) * pw


def capacitance_for_weight(x_target, c_b: float = DEFAULT_C_B, c_g: float = DEFAULT_C_G):
    """Coupling capacitance that realizes ``x_target`` for the given loading."""
    x = np.asarray(x_target, dtype=float)
    if np.any(x <= 0) or np.any(x >= 1):
        raise ValidationError(f"target ratio must lie in (0, 1), got {x_target!r}")
    out = x * (c_b + c_g) / (1.0 - x)
    return float(out) if out.ndim == 0 else out
