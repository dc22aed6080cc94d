"""Seeded Monte Carlo mismatch engine.

Every sample draws from its own child of ``SeedSequence(seed)``, so results
depend only on ``(seed, sample index)`` and never on evaluation order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import vtc as _vtc
from .cell import capacitance_for_weight
from .crossbar import CrossbarConfig
from .errors import MonteCarloError, ValidationError

log = logging.getLogger(__name__)

# x_eq may not be pushed to (or past) 1 by a perturbation.
_XEQ_CEIL = 0.999


@dataclass(frozen=True)
class MismatchSpec:
    vtc_delay_rel_sigma: float = 0.092
    xeq_rel_sigma: float = 0.0
    gm_rel_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.vtc_delay_rel_sigma, self.xeq_rel_sigma, self.gm_rel_sigma) < 0:
            raise ValidationError("mismatch sigmas must be >= 0")

    @property
    def is_null(self) -> bool:
        return self.vtc_delay_rel_sigma == 0 and self.xeq_rel_sigma == 0 and self.gm_rel_sigma == 0


NOISELESS = MismatchSpec(0.0, 0.0, 0.0)
PAPER_NOISE = MismatchSpec(vtc_delay_rel_sigma=0.092, xeq_rel_sigma=0.02)


@dataclass(frozen=True)
class McStats:
    mean: float
    std: float
    variation_pct: float
    n_samples: int
    samples: tuple[float, ...] = ()

    @classmethod
    def from_samples(cls, samples) -> "McStats":
        x = np.asarray(samples, dtype=float)
        if x.size < 1:
            raise ValidationError("need at least one sample")
        mean = float(x.mean())
        # identical samples must give exactly zero spread, not rounding residue
        std = float(x.std(ddof=1)) if x.size > 1 and np.ptp(x) > 0 else 0.0
        var = 100.0 * std / abs(mean) if mean != 0 else 0.0
        return cls(mean, std, var, int(x.size), tuple(x.tolist()))


def sample_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators for samples ``0..n-1``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def perturb(nominal, rel_sigma: float, rng: np.random.Generator):
    """``nominal * (1 + N(0, rel_sigma))``; negative draws clamp to zero."""
    if rel_sigma < 0:
        raise ValidationError("rel_sigma must be >= 0")
    nom = np.asarray(nominal, dtype=float)
    if rel_sigma == 0:
        return float(nom) if nom.ndim == 0 else nom.copy()
    out = nom * (1.0 + rng.normal(0.0, rel_sigma, size=nom.shape))
    if np.any(out < 0):
        log.warning("perturbation produced %d negative value(s); clamped to 0", int(np.sum(out < 0)))
        out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def monte_carlo(run: Callable[[np.random.Generator], float], n: int, spec: MismatchSpec) -> McStats:
    """Evaluate ``run`` once per sample generator and summarize.

    ``run`` receives the sample's generator and returns one scalar.
    """
    if n < 2:
        raise ValidationError(f"Monte Carlo needs n >= 2, got {n}")
    values, failures = [], []
    for i, rng in enumerate(sample_rngs(spec.seed, n)):
        try:
            values.append(float(run(rng)))
        except Exception as exc:  # collected and re-raised below
            failures.append((i, exc))
    if failures:
        raise MonteCarloError(failures)
    return McStats.from_samples(values)


def cascade_variation_table(
    stages,
    n: int,
    spec: MismatchSpec,
    v_in: float = 1.0,
    params: _vtc.VtcParams = _vtc.VtcParams(),
) -> list[McStats]:
    """Delay statistics of 1..N cascaded converters with independent per-stage mismatch.

    Sample ``k`` of every row uses the same generator, so an N-stage chain
    extends the (N-1)-stage chain of the same sample by one stage.
    """
    stages = list(stages)
    if not stages:
        raise ValidationError("stages must be non-empty")
    if any(s < 1 for s in stages):
        raise ValidationError("stage counts must be >= 1")
    nominal = _vtc.delay(v_in, params)

    def chain(n_stages):
        def run(rng):
            return float(np.sum(perturb(np.full(n_stages, nominal), spec.vtc_delay_rel_sigma, rng)))

        return run

    return [monte_carlo(chain(s), n, spec) for s in stages]


def vtc_gains(count: int, rel_sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Multiplicative delay errors for ``count`` converters."""
    return perturb(np.ones(count), rel_sigma, rng)


def perturb_crossbar(cfg: CrossbarConfig, spec: MismatchSpec, rng: np.random.Generator) -> CrossbarConfig:
    """One mismatched instance of ``cfg`` (x_eq and g_m per cell)."""
    if spec.xeq_rel_sigma == 0 and spec.gm_rel_sigma == 0:
        return cfg
    kw = {}
    if spec.xeq_rel_sigma > 0:
        x = np.clip(perturb(cfg.xeq, spec.xeq_rel_sigma, rng), 1e-6, _XEQ_CEIL)
        kw["c_c"] = capacitance_for_weight(x, cfg.c_b, cfg.c_g)
    if spec.gm_rel_sigma > 0:
        base = np.ones(cfg.c_c.shape) if cfg.gm_scale is None else cfg.gm_scale
        kw["gm_scale"] = perturb(base, spec.gm_rel_sigma, rng)
    return cfg.replace(**kw)


def histogram(samples, bins: int = 20) -> tuple[np.ndarray, np.ndarray]:
    counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins)
    return edges, counts
