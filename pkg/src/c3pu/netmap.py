"""Compile a trained 4-3-3 network onto two C3PU arrays and run inference.

Per layer, the weight-plus-bias block is shifted by its minimum so every
entry is non-negative, mapped affinely into the legal x_eq window, and a
last column holding the mapped ``|w_min|`` is appended.  Subtracting that
column's output from every other column removes both the shift and the
window offset, leaving a positive multiple of the original pre-activation.

Phase 1 drives the first array with VTC pulses (4 features + bias at 1 V),
converts the integrator outputs back to pulses, subtracts the w_min pulse
(XOR/AND logic, which also implements ReLU), drops pulses narrower than
``t_min`` and stretches the rest with a delay element.  Phase 2 feeds those
pulses plus a bias pulse to the second array; the final subtraction and
softmax run in software.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import vtc as _vtc
from .ann import AnnModel, softmax
from .cell import XEQ_WINDOW
from .crossbar import (
    Calibration,
    CrossbarConfig,
    PulseTrain,
    calibrate_crossbar,
    calibrate_scaling,
    encode_inputs,
    simulate_mac,
)
from .errors import TimingViolation, ValidationError
from .variability import MismatchSpec, perturb_crossbar, sample_rngs, vtc_gains

PHASE1_WINDOW = 3e-9
PHASE2_WINDOW = 9e-9
DEFAULT_T_MIN = 10e-12
DEFAULT_PULSE_SCALE = 18.0
# Largest stretched pulse targeted by the automatic pulse-scale calibration.
AUTO_SCALE_TARGET = 7.5e-9
CALIBRATION_MODES = ("instance", "design")


def shift_weights(w) -> tuple[np.ndarray, float]:
    """Shift ``w`` by its minimum so every entry is non-negative."""
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite")
    w_min = float(w.min())
    return w - w_min, w_min


def map_weights_to_xeq(w_shifted, w_min: float, xeq_range=XEQ_WINDOW) -> tuple[np.ndarray, float]:
    """Affine weight -> x_eq map with the ``|w_min|`` column appended.

    Returns the ``rows x (cols + 1)`` ratio matrix and the x_eq-per-weight
    slope.  The map's full-scale weight is the larger of ``max(w_shifted)``
    and ``|w_min|`` so the extra column stays in range too.
    """
    ws = np.asarray(w_shifted, dtype=float)
    if np.any(ws < 0):
        raise ValidationError("shifted weights must be non-negative")
    if w_min > 0:
        raise ValidationError("a positive w_min cannot be removed by a subtraction column; shift by 0 instead")
    lo, hi = xeq_range
    if not 0 < lo < hi < 1:
        raise ValidationError(f"invalid x_eq range {xeq_range}")
    if float(ws.max()) == 0:
        raise ValidationError("all-zero shifted weight block: the mapping range is degenerate")
    w_max = max(float(ws.max()), abs(w_min))
    slope = (hi - lo) / w_max
    if not np.isfinite(slope):
        raise ValidationError(f"weight range {w_max:g} is too small to map")
    xeq = lo + slope * ws
    wmin_col = np.full((ws.shape[0], 1), lo + slope * abs(w_min))
    return np.hstack([xeq, wmin_col]), slope


def time_subtract_relu(pw, pw_ref):
    """Width of ``pw`` beyond ``pw_ref``; zero when ``pw_ref`` is wider."""
    a = np.asarray(pw, dtype=float)
    b = np.asarray(pw_ref, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise ValidationError("pulse widths must be >= 0")
    out = np.maximum(0.0, a - b)
    return float(out) if out.ndim == 0 else out


def quantize_pulse(pw, t_min: float):
    a = np.asarray(pw, dtype=float)
    if np.any(a < 0):
        raise ValidationError("pulse widths must be >= 0")
    out = np.where(a >= t_min, a, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class MappedNetwork:
    model: AnnModel
    vtc: _vtc.VtcParams
    xbar1: CrossbarConfig
    xbar2: CrossbarConfig
    w_min1: float
    w_min2: float
    slope1: float  # x_eq per weight unit, layer 1
    slope2: float
    cal1: Calibration
    cal2: Calibration
    readout_gain: float  # volts per x_eq-weighted input sum at the layer-1 readout
    pulse_scale: float
    t_min: float
    phase1_window: float = PHASE1_WINDOW
    phase2_window: float = PHASE2_WINDOW

    @property
    def activation_time(self) -> float:
        """Stretched pulse width that represents one unit of hidden activation."""
        return self.pulse_scale * _vtc.conversion_gain(self.vtc) * self.readout_gain * self.slope1

    def describe(self) -> dict:
        return {
            "w_min1": self.w_min1,
            "w_min2": self.w_min2,
            "xeq_slope1": self.slope1,
            "xeq_slope2": self.slope2,
            "readout_gain": self.readout_gain,
            "pulse_scale": self.pulse_scale,
            "t_min_s": self.t_min,
            "activation_time_s": self.activation_time,
            "phase1_window_s": self.phase1_window,
            "phase2_window_s": self.phase2_window,
            "xeq1": self.xbar1.xeq.tolist(),
            "xeq2": self.xbar2.xeq.tolist(),
            "scale1": self.cal1.factor.tolist(),
            "scale2": self.cal2.factor.tolist(),
        }


def _layer_block(w, b):
    block = np.vstack([w, b])
    shifted, w_min = shift_weights(block)
    if w_min > 0:
        shifted, w_min = block, 0.0
    return shifted, w_min


def compile_network(
    model: AnnModel,
    vtc: _vtc.VtcParams = _vtc.VtcParams(),
    xeq_range=XEQ_WINDOW,
    pulse_scale: float | str = DEFAULT_PULSE_SCALE,
    t_min: float = DEFAULT_T_MIN,
    calibration_inputs=None,
    headroom: float = 0.95,
    phase1_window: float = PHASE1_WINDOW,
    phase2_window: float = PHASE2_WINDOW,
) -> MappedNetwork:
    """Map ``model`` onto two arrays and derive every readout constant.

    ``calibration_inputs`` (normalized training features) set the layer-1
    readout gain so the largest integrator output reaches ``headroom`` of
    the converter range; without them the worst case over [0, 1] inputs is
    used.  ``pulse_scale="auto"`` stretches the widest training-set hidden
    pulse to 7.5 ns.
    """
    s1, w_min1 = _layer_block(model.w1, model.b1)
    s2, w_min2 = _layer_block(model.w2, model.b2)
    x1, slope1 = map_weights_to_xeq(s1, w_min1, xeq_range)
    x2, slope2 = map_weights_to_xeq(s2, w_min2, xeq_range)

    v_lo, v_hi = vtc.v_in_range
    xbar1 = CrossbarConfig.from_xeq(x1, clk_high=phase1_window, period=2 * phase1_window)
    xbar2 = CrossbarConfig.from_xeq(x2, clk_high=phase2_window, period=phase1_window + phase2_window)
    cal1 = calibrate_crossbar(xbar1, vtc)

    if calibration_inputs is not None:
        v = _with_bias(np.atleast_2d(calibration_inputs))
        sums = v @ x1
    else:
        sums = np.ones((1, x1.shape[0])) @ x1
    readout_gain = headroom * (v_hi - v_lo) / float(sums.max())

    if pulse_scale == "auto":
        if calibration_inputs is None:
            raise ValidationError("pulse_scale='auto' needs calibration inputs")
        diff = _vtc.conversion_gain(vtc) * readout_gain * (sums[:, :-1] - sums[:, -1:])
        widest = float(np.max(diff))
        if widest <= 0:
            raise ValidationError("no positive hidden activation on the calibration set")
        pulse_scale = AUTO_SCALE_TARGET / widest
    pulse_scale = float(pulse_scale)
    if pulse_scale <= 0:
        raise ValidationError("pulse_scale must be positive")

    unit = pulse_scale * _vtc.conversion_gain(vtc) * readout_gain * slope1
    if unit > phase2_window:
        raise TimingViolation(f"bias pulse {unit:.4g} s does not fit the phase-2 window {phase2_window:.4g} s")
    cal2 = _calibrate_layer2(xbar2, unit, xbar2)

    return MappedNetwork(
        model, vtc, xbar1, xbar2, w_min1, w_min2, slope1, slope2, cal1, cal2,
        readout_gain, pulse_scale, float(t_min), phase1_window, phase2_window,
    )


def _calibrate_layer2(xb: CrossbarConfig, unit: float, reference: CrossbarConfig) -> Calibration:
    probe = simulate_mac(PulseTrain(np.full(xb.rows, unit)), xb).voltages
    return calibrate_scaling(probe, np.ones(xb.rows) @ reference.xeq)


def _with_bias(v):
    v = np.asarray(v, dtype=float)
    return np.concatenate([v, np.ones(v.shape[:-1] + (1,))], axis=-1)


@dataclass
class InferenceTrace:
    inputs: np.ndarray
    input_pulses: np.ndarray
    layer1_voltages: np.ndarray
    readout_pulses: np.ndarray
    hidden_pulses: np.ndarray
    scaled_pulses: np.ndarray
    layer2_pulses: np.ndarray
    logits: np.ndarray
    probabilities: np.ndarray
    label: int
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        out = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}
        out["label"] = int(self.label)
        return out


def infer(
    v,
    net: MappedNetwork,
    noise: MismatchSpec | None = None,
    rng: np.random.Generator | None = None,
    readout_mismatch: str = "shared",
    calibration: str = "instance",
) -> InferenceTrace:
    """Classify one normalized feature vector through both hardware phases.

    With ``noise`` set, ``rng`` draws one mismatched hardware instance: every
    converter (5 input, 4 readout, 4 delay elements) gets a delay error and
    both arrays get cell mismatch.

    ``calibration="instance"`` re-measures both scaling factors on that
    instance (zero and full-scale probes through its own input converters
    for layer 1, unit pulses for layer 2) against the design's x_eq.
    ``"design"`` reuses the factors computed at compile time.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (net.xbar1.rows - 1,):
        raise ValidationError(f"expected {net.xbar1.rows - 1} features, got {v.size}")
    lo, hi = net.vtc.v_in_range
    if np.any(v < lo) or np.any(v > hi):
        raise ValidationError(f"features must be normalized into [{lo}, {hi}] V")
    noisy = noise is not None and not noise.is_null
    if noisy and rng is None:
        raise ValidationError("a random generator is required when noise is enabled")
    sigma = noise.vtc_delay_rel_sigma if noisy else 0.0
    n_cols1 = net.xbar1.cols
    g_in = vtc_gains(net.xbar1.rows, sigma, rng) if noisy else None
    if not noisy:
        g_out = np.ones(n_cols1)
    elif readout_mismatch == "shared":
        g_out = np.full(n_cols1, vtc_gains(1, sigma, rng)[0])
    elif readout_mismatch == "independent":
        g_out = vtc_gains(n_cols1, sigma, rng)
    else:
        raise ValidationError(f"unknown readout_mismatch mode {readout_mismatch!r}")
    g_de = vtc_gains(net.xbar2.rows, sigma, rng) if noisy else np.ones(net.xbar2.rows)
    xb1 = perturb_crossbar(net.xbar1, noise, rng) if noisy else net.xbar1
    xb2 = perturb_crossbar(net.xbar2, noise, rng) if noisy else net.xbar2
    if calibration not in CALIBRATION_MODES:
        raise ValidationError(f"unknown calibration mode {calibration!r}")
    cal1, cal2 = net.cal1, net.cal2
    if noisy and calibration == "instance":
        cal1 = calibrate_crossbar(xb1, net.vtc, gains=g_in, reference=net.xbar1)
        cal2 = _calibrate_layer2(xb2, net.activation_time, net.xbar2)
    notes = []

    # phase 1
    inputs = _with_bias(v)
    p1 = encode_inputs(inputs, net.vtc, net.phase1_window, g_in)
    r1 = simulate_mac(p1, xb1)
    notes += r1.warnings
    volts = net.readout_gain * cal1.read(r1.voltages)
    clipped = np.clip(volts, lo, hi)
    if np.any(clipped != volts):
        notes.append(f"layer-1 readout clipped to converter range: {volts.tolist()}")
    pw = np.minimum(_vtc.delay(clipped, net.vtc) * g_out, net.phase1_window)
    hidden = quantize_pulse(time_subtract_relu(pw[:-1], pw[-1]), net.t_min)
    scaled = _vtc.delay_element_scale(hidden, net.pulse_scale) * g_de[:-1]
    bias_pw = net.activation_time * g_de[-1]
    l2 = np.append(scaled, bias_pw)
    if np.any(l2 > net.phase2_window):
        raise TimingViolation(
            f"phase-2 pulse {l2.max():.4g} s exceeds the {net.phase2_window:.4g} s window"
        )

    # phase 2
    r2 = simulate_mac(PulseTrain(l2), xb2)
    notes += r2.warnings
    u2 = cal2.read(r2.voltages)
    logits = (u2[:-1] - u2[-1]) / net.slope2
    probs = softmax(logits)
    return InferenceTrace(inputs, p1.widths, volts, pw, hidden, scaled, l2, logits, probs, int(np.argmax(logits)), notes)


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray
    predictions: np.ndarray
    traces: list[InferenceTrace]


def evaluate(
    v,
    labels,
    net: MappedNetwork,
    noise: MismatchSpec | None = None,
    keep_traces: bool = False,
    readout_mismatch: str = "shared",
    calibration: str = "instance",
) -> EvalResult:
    """Hardware-simulated accuracy over normalized samples ``v``.

    Sample ``k`` uses mismatch instance ``k`` of ``noise.seed``.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    labels = np.asarray(labels)
    if v.shape[0] == 0 or v.shape[0] != labels.size:
        raise ValidationError("need a non-empty split with one label per sample")
    noisy = noise is not None and not noise.is_null
    rngs = sample_rngs(noise.seed, v.shape[0]) if noisy else [None] * v.shape[0]
    traces = [
        infer(x, net, noise if noisy else None, r, readout_mismatch, calibration)
        for x, r in zip(v, rngs)
    ]
    pred = np.array([t.label for t in traces])
    k = net.model.w2.shape[1]
    conf = np.zeros((k, k), dtype=int)
    np.add.at(conf, (labels, pred), 1)
    return EvalResult(float(np.mean(pred == labels)), conf, pred, traces if keep_traces else [])
