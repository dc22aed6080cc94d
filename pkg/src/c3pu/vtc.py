"""Behavioral model of the charge-sharing voltage-to-time converter (VTC).

The converter samples ``V_in`` on ``C1`` and ``VDD`` on ``C2``, shares the
charge, then discharges the common node through a constant current source
until the output inverter flips at ``V_sp``.  The resulting delay is affine
in the input voltage::

    t = (C1*V_in + C2*VDD - V_sp*(C1 + C2)) / I_avg + t_offset

``t_offset`` lumps the inverter-chain and gating logic that the discharge
equation does not capture.  All quantities are SI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ValidationError

# Tolerance when checking that an input sits inside the converter's range.
_RANGE_EPS = 1e-12


@dataclass(frozen=True)
class VtcParams:
    c1: float = 27e-15
    c2: float = 18e-15
    vdd: float = 1.0
    v_sp: float = 0.35
    i_avg: float = 14e-6
    t_offset: float = 0.21e-9
    v_in_range: tuple[float, float] = (0.0, 1.0)
    power: float = 5.7e-6

    def __post_init__(self):
        object.__setattr__(self, "v_in_range", tuple(float(v) for v in self.v_in_range))
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValidationError(f"capacitances must be positive (c1={self.c1}, c2={self.c2})")
        if not self.i_avg > 0:
            raise ValidationError(f"i_avg must be positive, got {self.i_avg}")
        if not 0 < self.v_sp < self.vdd:
            raise ValidationError(f"v_sp must lie in (0, vdd), got {self.v_sp}")
        if self.t_offset < 0:
            raise ValidationError(f"t_offset must be >= 0, got {self.t_offset}")
        if self.power <= 0:
            raise ValidationError(f"power must be positive, got {self.power}")
        lo, hi = self.v_in_range
        if not lo < hi:
            raise ValidationError(f"v_in_range must be increasing, got {self.v_in_range}")
        q = self.discharge_charge(lo)
        if q <= 0:
            raise ConfigurationError(
                f"discharge charge at v_in={lo} V is {q:.4g} C (<= 0): "
                f"c2*vdd must exceed v_sp*(c1+c2) - c1*v_in_min; check c2={self.c2:g} F"
            )

    def discharge_charge(self, v_in):
        """Charge removed from the shared node before the inverter trips."""
        return self.c1 * v_in + self.c2 * self.vdd - self.v_sp * (self.c1 + self.c2)


@dataclass(frozen=True)
class InverterRatio:
    beta_ratio: float
    v_thn: float
    v_thp_abs: float
    vdd: float = 1.0

    def __post_init__(self):
        if not self.beta_ratio > 0:
            raise ValidationError(f"beta_ratio must be positive, got {self.beta_ratio}")
        if not 0 < self.v_thn < self.vdd:
            raise ValidationError(f"v_thn must lie in (0, vdd), got {self.v_thn}")
        if not 0 < self.v_thp_abs < self.vdd:
            raise ValidationError(f"v_thp_abs must lie in (0, vdd), got {self.v_thp_abs}")


def switching_point(r: InverterRatio) -> float:
    """Inverter trip voltage from the NMOS/PMOS strength ratio."""
    k = math.sqrt(r.beta_ratio)
    return (r.vdd - r.v_thp_abs + k * r.v_thn) / (1.0 + k)


def _check_range(v_in, p: VtcParams):
    lo, hi = p.v_in_range
    arr = np.asarray(v_in, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < lo - _RANGE_EPS) or np.any(arr > hi + _RANGE_EPS):
        raise ValidationError(f"v_in outside converter range [{lo}, {hi}] V: {v_in!r}")
    return arr


def delay(v_in, p: VtcParams):
    """Pulse delay for ``v_in`` (scalar or array), including the logic offset."""
    arr = _check_range(v_in, p)
    out = p.discharge_charge(arr) / p.i_avg + p.t_offset
    return float(out) if out.ndim == 0 else out


def conversion_gain(p: VtcParams) -> float:
    """Slope of the delay characteristic in s/V."""
    return p.c1 / p.i_avg


def pulse_width(v_in, p: VtcParams, clk_high: float):
    """Delay gated by the high phase of the sampling clock."""
    if not clk_high > 0:
        raise ValidationError(f"clk_high must be positive, got {clk_high}")
    out = np.minimum(delay(v_in, p), clk_high)
    return float(out) if np.ndim(out) == 0 else out


def cascade_delay(v_in, n_stages: int, p: VtcParams) -> float:
    """Nominal delay of ``n_stages`` identical converters in series."""
    if n_stages < 1:
        raise ValidationError(f"n_stages must be >= 1, got {n_stages}")
    return n_stages * delay(v_in, p)


@dataclass(frozen=True)
class DelayElement:
    """A converter re-biased as a linear pulse stretcher (output = gain * input width)."""

    gain: float = 18.0

    def __post_init__(self):
        if not self.gain > 0:
            raise ValidationError(f"delay-element gain must be positive, got {self.gain}")


def delay_element_scale(pw_in, element: DelayElement | float = DelayElement()):
    if not isinstance(element, DelayElement):
        element = DelayElement(float(element))
    arr = np.asarray(pw_in, dtype=float)
    if np.any(arr < 0):
        raise ValidationError(f"pulse width must be >= 0, got {pw_in!r}")
    out = element.gain * arr
    return float(out) if out.ndim == 0 else out


def fom(accuracy: float, gain: float, power: float) -> float:
    """accuracy * gain / power, in s/(V*W)."""
    if not 0 <= accuracy <= 1:
        raise ValidationError(f"accuracy must be a fraction in [0, 1], got {accuracy}")
    if not power > 0:
        raise ValidationError(f"power must be positive, got {power}")
    return accuracy * gain / power


def snr_db(signal_power: float, noise_power: float) -> float:
    if not (signal_power > 0 and noise_power > 0):
        raise ValidationError("signal and noise power must both be positive")
    return 10.0 * math.log10(signal_power / noise_power)


def linear_fit_mse(v_in, delays) -> float:
    """Mean squared residual of ``delays`` about their least-squares line."""
    v = np.asarray(v_in, dtype=float)
    d = np.asarray(delays, dtype=float)
    if v.shape != d.shape or v.size < 2:
        raise ValidationError("need at least two matching samples for a line fit")
    slope, intercept = np.polyfit(v, d, 1)
    resid = d - (slope * v + intercept)
    return float(np.mean(resid**2))
