"""Reusable experiment runners shared by the command line and the tests.

Each runner returns plain numbers/arrays; file output lives in ``cli``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import vtc as _vtc
from .crossbar import Calibration, CrossbarConfig, calibrate_crossbar, energy_report, run_mac
from .errors import ValidationError
from .oracle import ErrorReport, FxpFormat, error_report, fxp_mac, ideal_mac
from .variability import (
    McStats,
    MismatchSpec,
    cascade_variation_table,
    monte_carlo,
    perturb_crossbar,
    sample_rngs,
    vtc_gains,
)


@dataclass(frozen=True)
class Sweep:
    v_in: np.ndarray
    delay: np.ndarray
    pulse_width: np.ndarray
    gain: float  # endpoint slope, s/V
    linear_mse: float  # s^2


def vtc_sweep(p: _vtc.VtcParams, steps: int = 101, clk_high: float = 3e-9) -> Sweep:
    if steps < 2:
        raise ValidationError("a sweep needs at least 2 steps")
    lo, hi = p.v_in_range
    v = np.linspace(lo, hi, steps)
    d = np.asarray(_vtc.delay(v, p), dtype=float)
    pw = np.asarray(_vtc.pulse_width(v, p, clk_high), dtype=float)
    gain = float((d[-1] - d[0]) / (v[-1] - v[0]))
    return Sweep(v, d, pw, gain, _vtc.linear_fit_mse(v, d))


def random_input_sets(seed: int, n_sets: int, rows: int, bias: bool = False) -> np.ndarray:
    """Seeded uniform [0, 1] input sets; ``bias`` pins the last input to 1."""
    x = np.random.default_rng(seed).random((n_sets, rows))
    if bias:
        x[:, -1] = 1.0
    return x


def read_inputs_csv(path, rows: int) -> np.ndarray:
    """Input sets from a CSV with a header row and ``rows`` columns per line."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1:
                try:
                    [float(c) for c in row]
                except ValueError:
                    continue  # header
            if len(row) != rows:
                raise ValidationError(f"{path}:{lineno}: expected {rows} columns, got {len(row)}")
            try:
                out.append([float(c) for c in row])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not out:
        raise ValidationError(f"{path}: no input rows")
    return np.array(out)


def default_table5_path() -> Path:
    return Path(str(resources.files("c3pu") / "data" / "table5_inputs.csv"))


@dataclass(frozen=True)
class CrossbarBatch:
    inputs: np.ndarray
    observed: np.ndarray  # calibrated, dot-product units
    expected: np.ndarray
    voltages: np.ndarray  # raw integrator volts
    errors: ErrorReport
    energy: dict


def crossbar_batch(
    inputs,
    cfg: CrossbarConfig,
    p: _vtc.VtcParams,
    noise: MismatchSpec | None = None,
    cal: Calibration | None = None,
) -> CrossbarBatch:
    """Run input sets through the array and compare with the exact MAC.

    Input set ``k`` runs on mismatch instance ``k`` of ``noise.seed``
    (per-row converter errors plus cell mismatch).  The scaling factors are
    those of the nominal design, measured once.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    if x.shape[1] != cfg.rows:
        raise ValidationError(f"input sets have {x.shape[1]} values, the array has {cfg.rows} rows")
    lo, hi = p.v_in_range
    if np.any(x < lo) or np.any(x > hi):
        raise ValidationError(f"inputs must lie in [{lo}, {hi}] V")
    cal = calibrate_crossbar(cfg, p) if cal is None else cal
    noisy = noise is not None and not noise.is_null
    rngs = sample_rngs(noise.seed, x.shape[0]) if noisy else [None] * x.shape[0]
    obs, volts = [], []
    for row, rng in zip(x, rngs):
        inst, gains = cfg, None
        if noisy:
            gains = vtc_gains(cfg.rows, noise.vtc_delay_rel_sigma, rng)
            inst = perturb_crossbar(cfg, noise, rng)
        read, res = run_mac(row, inst, p, cal, gains)
        obs.append(read)
        volts.append(res.voltages)
    obs = np.array(obs)
    exp = ideal_mac(x - lo, cfg.xeq)
    n_macs = x.shape[0] * cfg.cols
    return CrossbarBatch(x, obs, exp, np.array(volts), error_report(obs, exp), energy_report(n_macs, cfg.energy).as_dict())


def mc_vtc(p: _vtc.VtcParams, stages, n: int, spec: MismatchSpec, v_in: float = 1.0) -> list[McStats]:
    return cascade_variation_table(stages, n, spec, v_in, p)


def mc_crossbar(cfg: CrossbarConfig, p: _vtc.VtcParams, n: int, spec: MismatchSpec, v_in: float = 1.0) -> list[McStats]:
    """Per-column statistics of the raw integrator voltage with every input at ``v_in``."""
    x = np.full(cfg.rows, v_in)
    nominal_cal = Calibration(np.ones(cfg.cols), np.zeros(cfg.cols))
    cols = [[] for _ in range(cfg.cols)]

    def run(rng):
        gains = vtc_gains(cfg.rows, spec.vtc_delay_rel_sigma, rng)
        volts, _ = run_mac(x, perturb_crossbar(cfg, spec, rng), p, nominal_cal, gains)
        for j, v in enumerate(volts):
            cols[j].append(v)
        return float(volts.mean())

    monte_carlo(run, n, spec)
    return [McStats.from_samples(c) for c in cols]


@dataclass(frozen=True)
class FxpRow:
    label: str
    average_pct: float
    mse: float


def fxp_compare(formats, seed: int = 0, n_sets: int = 30, rows: int = 5, cols: int = 4) -> list[FxpRow]:
    """Fixed-point MAC error against the exact MAC on one seeded dataset.

    Inputs and weights are uniform on [0, 1]; both come from ``seed``.
    """
    rng = np.random.default_rng(seed)
    x = rng.random((n_sets, rows))
    w = rng.random((rows, cols))
    exact = ideal_mac(x, w)
    out = []
    for f in formats:
        f = f if isinstance(f, FxpFormat) else FxpFormat(*f)
        rep = error_report(fxp_mac(x, w, f), exact)
        out.append(FxpRow(f.label, rep.average, rep.mse))
    return out
