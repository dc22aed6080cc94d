"""R x C array of C3PU cells with per-column virtual-ground integrators.

Each wordline carries a pulse from its VTC; every cell on that row sinks
``I_ds * width`` of charge from its bitline, and the column integrator turns
the summed charge into ``V_j = Q_j / C_j``.  Calibration maps these volts
back to dimensionless dot products.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import vtc as _vtc
from .cell import (
    DEFAULT_C_B,
    DEFAULT_C_G,
    XEQ_WINDOW,
    CellConfig,
    TransistorModel,
    capacitance_for_weight,
    drain_current,
    xeq_array,
)
from .errors import CalibrationError, ConfigurationError, TimingViolation, ValidationError

MAX_COLUMNS = 46
INTEGRATOR_CAP_PER_ROW = 60e-15
_TIME_EPS = 1e-15


@dataclass(frozen=True)
class DegradationModel:
    """Piecewise-linear pulse loss vs. column count, anchored at (0, 0)."""

    anchors: tuple[tuple[int, float], ...] = ((32, 0.108), (46, 0.134))
    enabled: bool = True
    mode: str = "width"  # or "amplitude"

    def __post_init__(self):
        anchors = tuple((int(n), float(loss)) for n, loss in self.anchors)
        object.__setattr__(self, "anchors", anchors)
        if not anchors:
            raise ValidationError("degradation model needs at least one anchor")
        cols = [0] + [n for n, _ in anchors]
        losses = [0.0] + [loss for _, loss in anchors]
        if any(b <= a for a, b in zip(cols, cols[1:])):
            raise ValidationError("degradation anchors must be strictly increasing in column count")
        if any(b < a for a, b in zip(losses, losses[1:])) or losses[-1] >= 1:
            raise ValidationError("degradation losses must be nondecreasing and < 1")
        if self.mode not in ("width", "amplitude"):
            raise ValidationError(f"unknown degradation mode {self.mode!r}")

    @property
    def max_columns(self) -> int:
        return self.anchors[-1][0]


@dataclass(frozen=True)
class EnergyParams:
    crossbar_fj_per_mac: float = 26.3
    vtc_fj_per_mac: float = 40.1

    def __post_init__(self):
        if self.crossbar_fj_per_mac < 0 or self.vtc_fj_per_mac < 0:
            raise ValidationError("energy constants must be >= 0")


@dataclass(frozen=True)
class EnergyReport:
    n_macs: int
    crossbar_fj_per_mac: float
    vtc_fj_per_mac: float
    per_mac_fj: float
    total_fj: float

    def as_dict(self):
        return {
            "n_macs": self.n_macs,
            "crossbar_fJ_per_MAC": self.crossbar_fj_per_mac,
            "vtc_fJ_per_MAC": self.vtc_fj_per_mac,
            "total_fJ_per_MAC": self.per_mac_fj,
            "total_energy_J": self.total_fj * 1e-15,
        }


def integrator_cap_for_rows(n_rows: int) -> float:
    """Integrator capacitor that keeps column voltages in range (300 fF per 5 rows)."""
    if n_rows < 1:
        raise ValidationError(f"n_rows must be >= 1, got {n_rows}")
    return n_rows * INTEGRATOR_CAP_PER_ROW


def column_degradation(n_cols: int, d: DegradationModel = DegradationModel()) -> float:
    if n_cols < 1:
        raise ValidationError(f"n_cols must be >= 1, got {n_cols}")
    if n_cols > d.max_columns:
        raise ConfigurationError(
            f"{n_cols} columns exceeds the maximum of {d.max_columns} the wordline can drive"
        )
    xs = [0] + [n for n, _ in d.anchors]
    ys = [0.0] + [loss for _, loss in d.anchors]
    return float(np.interp(n_cols, xs, ys))


def energy_report(n_macs: int, e: EnergyParams = EnergyParams()) -> EnergyReport:
    if n_macs < 0:
        raise ValidationError("n_macs must be >= 0")
    per_mac = e.crossbar_fj_per_mac + e.vtc_fj_per_mac
    return EnergyReport(n_macs, e.crossbar_fj_per_mac, e.vtc_fj_per_mac, per_mac, per_mac * n_macs)


@dataclass(frozen=True)
class PulseTrain:
    widths: np.ndarray
    amplitude: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.widths, dtype=float).reshape(-1)
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("pulse widths must be finite and >= 0")
        if self.amplitude < 0:
            raise ValidationError("pulse amplitude must be >= 0")
        object.__setattr__(self, "widths", w)


@dataclass(frozen=True, eq=False)
class CrossbarConfig:
    """Array geometry and electrical parameters.

    Cell capacitances are held as ``rows x cols`` arrays; ``c_b`` and ``c_g``
    may be scalars and are broadcast.  ``gm_scale`` optionally carries
    per-cell transconductance mismatch.
    """

    c_c: np.ndarray
    c_b: np.ndarray | float = DEFAULT_C_B
    c_g: np.ndarray | float = DEFAULT_C_G
    transistor: TransistorModel = TransistorModel()
    vdd_c3pu: float = 0.3
    integrator_caps: np.ndarray | None = None
    clk_high: float = 3e-9
    period: float = 6e-9
    degradation: DegradationModel = DegradationModel()
    energy: EnergyParams = EnergyParams()
    gm_scale: np.ndarray | None = None

    def __post_init__(self):
        c_c = np.atleast_2d(np.asarray(self.c_c, dtype=float))
        if c_c.ndim != 2 or c_c.size == 0:
            raise ValidationError("c_c must be a non-empty rows x cols matrix")
        c_b = np.broadcast_to(np.asarray(self.c_b, dtype=float), c_c.shape).copy()
        c_g = np.broadcast_to(np.asarray(self.c_g, dtype=float), c_c.shape).copy()
        if np.any(c_c <= 0) or np.any(c_b < 0) or np.any(c_g < 0):
            raise ValidationError("cell capacitances must be positive (c_c) / non-negative (c_b, c_g)")
        rows, cols = c_c.shape
        caps = self.integrator_caps
        if caps is None:
            caps = np.full(cols, integrator_cap_for_rows(rows))
        caps = np.broadcast_to(np.asarray(caps, dtype=float), (cols,)).copy()
        if np.any(caps <= 0):
            raise ValidationError("integrator capacitors must be positive")
        gm = self.gm_scale
        if gm is not None:
            gm = np.broadcast_to(np.asarray(gm, dtype=float), c_c.shape).copy()
            if np.any(gm < 0):
                raise ValidationError("gm_scale must be >= 0")
        if not self.clk_high > 0:
            raise ValidationError("clk_high must be positive")
        for name, arr in (("c_c", c_c), ("c_b", c_b), ("c_g", c_g), ("integrator_caps", caps), ("gm_scale", gm)):
            if arr is not None:
                arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_xeq(cls, xeq, c_b: float = DEFAULT_C_B, c_g: float = DEFAULT_C_G, **kw):
        """Build an array whose cells realize the target ratios ``xeq``."""
        xeq = np.atleast_2d(np.asarray(xeq, dtype=float))
        return cls(c_c=capacitance_for_weight(xeq, c_b, c_g), c_b=c_b, c_g=c_g, **kw)

    @property
    def rows(self) -> int:
        return self.c_c.shape[0]

    @property
    def cols(self) -> int:
        return self.c_c.shape[1]

    @property
    def xeq(self) -> np.ndarray:
        return xeq_array(self.c_c, self.c_b, self.c_g)

    def cell(self, i: int, j: int) -> CellConfig:
        return CellConfig(float(self.c_c[i, j]), float(self.c_b[i, j]), float(self.c_g[i, j]))

    def replace(self, **kw) -> "CrossbarConfig":
        return replace(self, **kw)


def default_crossbar() -> CrossbarConfig:
    """5 x 4 demonstrator with weights spread over the legal x_eq window."""
    lo, hi = XEQ_WINDOW
    ramp = np.linspace(lo, hi, 20).reshape(5, 4)
    return CrossbarConfig.from_xeq(ramp)


@dataclass
class MacResult:
    voltages: np.ndarray
    cell_charges: np.ndarray
    column_charges: np.ndarray
    degradation: float
    warnings: list[str] = field(default_factory=list)


def simulate_mac(pulses: PulseTrain, cfg: CrossbarConfig) -> MacResult:
    """Integrate every column's bitline charge for one input vector."""
    w = pulses.widths
    if w.shape != (cfg.rows,):
        raise ValidationError(f"expected {cfg.rows} pulse widths, got {w.shape[0]}")
    if np.any(w > cfg.clk_high + _TIME_EPS):
        raise TimingViolation(
            f"pulse width {w.max():.4g} s exceeds the computation window {cfg.clk_high:.4g} s"
        )
    if cfg.cols > MAX_COLUMNS:
        raise ConfigurationError(f"{cfg.cols} columns exceeds the maximum of {MAX_COLUMNS}")
    d = column_degradation(cfg.cols, cfg.degradation) if cfg.degradation.enabled else 0.0
    amp = pulses.amplitude
    if d and cfg.degradation.mode == "width":
        w = w * (1.0 - d)
    elif d:
        amp = amp * (1.0 - d)

    v_g = amp * cfg.xeq
    current = drain_current(v_g, cfg.transistor)
    if cfg.gm_scale is not None:
        current = current * cfg.gm_scale
    q = current * w[:, None]
    q_col = q.sum(axis=0)
    volts = q_col / cfg.integrator_caps

    msgs = []
    outside = ~cfg.transistor.in_window(v_g) & (w[:, None] > 0)
    for i, j in zip(*np.nonzero(outside)):
        msgs.append(f"cell ({i},{j}): V_g={v_g[i, j]:.4g} V outside linear window {cfg.transistor.v_g_linear}")
    return MacResult(volts, q, q_col, d, msgs)


def encode_inputs(v_in, vtc: _vtc.VtcParams, clk_high: float, gains=None, amplitude: float = 1.0) -> PulseTrain:
    """Convert input voltages to wordline pulses, one VTC per row.

    ``gains`` are per-converter multiplicative delay errors (mismatch).
    """
    d = np.asarray(_vtc.delay(np.asarray(v_in, dtype=float), vtc), dtype=float).reshape(-1)
    if gains is not None:
        d = d * np.asarray(gains, dtype=float)
    return PulseTrain(np.minimum(d, clk_high), amplitude)


@dataclass(frozen=True)
class Calibration:
    """Per-column affine readout: ``(observed - baseline) / factor``."""

    factor: np.ndarray
    baseline: np.ndarray

    def read(self, observed):
        return (np.asarray(observed, dtype=float) - self.baseline) / self.factor


def calibrate_scaling(observed, expected, baseline=None) -> Calibration:
    """Scaling factor per column from one probe vector.

    ``baseline`` is an optional zero-input response subtracted before the
    ratio is taken; it defaults to zero.
    """
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    base = np.zeros_like(obs) if baseline is None else np.asarray(baseline, dtype=float)
    if obs.shape != exp.shape or base.shape != obs.shape:
        raise ValidationError("observed, expected and baseline must have the same shape")
    signal = obs - base
    bad = (exp == 0) & (signal != 0)
    if np.any(bad):
        raise CalibrationError(f"columns {np.nonzero(bad)[0].tolist()} have zero expected value but nonzero output")
    if np.any((exp != 0) & (signal <= 0)):
        raise CalibrationError("observed signal must be positive wherever the expected value is")
    factor = np.where(exp == 0, 1.0, signal / np.where(exp == 0, 1.0, exp))
    return Calibration(factor, base)


def calibrate_crossbar(cfg: CrossbarConfig, vtc: _vtc.VtcParams, probe=None, gains=None, reference=None) -> Calibration:
    """Calibrate against ``probe`` inputs (default: all inputs at full scale).

    The zero-input response is measured first and used as the baseline, so
    the converter's delay offset does not leak into the readout.  ``gains``
    are per-row converter delay errors of the instance being measured and
    ``reference`` the design whose x_eq sets the expected values (defaults
    to ``cfg`` itself).
    """
    lo, hi = vtc.v_in_range
    probe = np.full(cfg.rows, hi) if probe is None else np.asarray(probe, dtype=float)
    zero = np.full(cfg.rows, lo)
    base = simulate_mac(encode_inputs(zero, vtc, cfg.clk_high, gains), cfg).voltages
    obs = simulate_mac(encode_inputs(probe, vtc, cfg.clk_high, gains), cfg).voltages
    expected = (probe - lo) @ (cfg if reference is None else reference).xeq
    return calibrate_scaling(obs, expected, base)


def run_mac(v_in, cfg: CrossbarConfig, vtc: _vtc.VtcParams, cal: Calibration, gains=None) -> tuple[np.ndarray, MacResult]:
    """Encode, integrate and read back one input vector in dot-product units."""
    res = simulate_mac(encode_inputs(v_in, vtc, cfg.clk_high, gains), cfg)
    return cal.read(res.voltages), res


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str


def validate_config(
    cfg: CrossbarConfig,
    max_pulse: float | None = None,
    cap_tolerance: float = 0.05,
) -> list[Violation]:
    """Return every design-rule violation; an empty list means the array is legal."""
    out = []
    if cfg.cols > MAX_COLUMNS or (cfg.degradation.enabled and cfg.cols > cfg.degradation.max_columns):
        out.append(Violation("column-limit", f"{cfg.cols} columns > maximum {MAX_COLUMNS}"))
    if max_pulse is None:
        p = _vtc.VtcParams()
        max_pulse = _vtc.delay(p.v_in_range[1], p)
    if cfg.clk_high + _TIME_EPS < max_pulse:
        out.append(Violation("clock-window", f"clk_high {cfg.clk_high:.4g} s < max pulse {max_pulse:.4g} s"))
    if cfg.period + _TIME_EPS < cfg.clk_high:
        out.append(Violation("period", f"period {cfg.period:.4g} s < clk_high {cfg.clk_high:.4g} s"))
    want = integrator_cap_for_rows(cfg.rows)
    for j, c in enumerate(cfg.integrator_caps):
        if abs(c - want) / want > cap_tolerance:
            out.append(Violation("integrator-sizing", f"column {j}: C_j={c:.4g} F, rows call for {want:.4g} F"))
    lo, hi = XEQ_WINDOW
    xeq = cfg.xeq
    for i, j in zip(*np.nonzero((xeq < lo - 1e-9) | (xeq > hi + 1e-9))):
        out.append(Violation("xeq-window", f"cell ({i},{j}): x_eq={xeq[i, j]:.4g} outside [{lo}, {hi}]"))
    return out


def simulate_tiled(v_in, tiles, vtc: _vtc.VtcParams) -> np.ndarray:
    """Raw column voltages of a grid of independent arrays.

    ``tiles[r][c]`` is a :class:`CrossbarConfig`; row tiles split ``v_in`` and
    their integrator outputs are summed, column tiles are concatenated.
    Pulses reaching later column tiles are regenerated by a lossless repeater,
    so each tile sees only its own column degradation.
    """
    v_in = np.asarray(v_in, dtype=float)
    row_sizes = [row[0].rows for row in tiles]
    if sum(row_sizes) != v_in.size:
        raise ValidationError(f"tiles cover {sum(row_sizes)} rows, got {v_in.size} inputs")
    starts = np.cumsum([0] + row_sizes)
    total = None
    for r, row in enumerate(tiles):
        seg = v_in[starts[r] : starts[r + 1]]
        parts = [simulate_mac(encode_inputs(seg, vtc, t.clk_high), t).voltages for t in row]
        out = np.concatenate(parts)
        total = out if total is None else total + out
    return total
