import logging

import numpy as np
import pytest

from c3pu import variability as mc
from c3pu import vtc
from c3pu.crossbar import default_crossbar
from c3pu.errors import MonteCarloError, ValidationError

SIGMA = mc.MismatchSpec(0.092, seed=7)


class TestPerturb:
    def test_zero_sigma_identity(self, rng):
        x = np.array([1.0, 2.5, 3.0])
        np.testing.assert_array_equal(mc.perturb(x, 0.0, rng), x)
        assert mc.perturb(2.0, 0.0, rng) == 2.0

    def test_moments(self, rng):
        draws = mc.perturb(np.full(100_000, 2.0), 0.092, rng)
        assert abs(draws.mean() - 2.0) < 3 * 2.0 * 0.092 / np.sqrt(draws.size)
        assert draws.std() / draws.mean() == pytest.approx(0.092, abs=0.003)

    def test_negative_clamped(self, rng, caplog):
        with caplog.at_level(logging.WARNING, logger="c3pu.variability"):
            out = mc.perturb(np.ones(2000), 1.0, rng)
        assert out.min() == 0.0
        assert "clamped" in caplog.text

    def test_negative_sigma(self, rng):
        with pytest.raises(ValidationError):
            mc.perturb(1.0, -0.1, rng)
        with pytest.raises(ValidationError):
            mc.MismatchSpec(-0.1)


class TestMonteCarlo:
    def test_single_stage(self):
        d = vtc.delay(1.0, vtc.VtcParams())
        s = mc.monte_carlo(lambda r: mc.perturb(d, 0.092, r), 200, SIGMA)
        assert s.n_samples == 200
        assert s.variation_pct == pytest.approx(9.2, abs=1.5)

    def test_zero_sigma(self):
        s = mc.monte_carlo(lambda r: mc.perturb(3.0, 0.0, r), 50, mc.NOISELESS)
        assert s.variation_pct == 0.0 and s.mean == 3.0

    def test_deterministic(self):
        f = lambda r: float(r.normal())  # noqa: E731
        assert mc.monte_carlo(f, 30, SIGMA) == mc.monte_carlo(f, 30, SIGMA)

    def test_order_independent(self):
        # sample k depends only on (seed, k)
        a = [float(r.normal()) for r in mc.sample_rngs(3, 10)]
        b = [float(r.normal()) for r in reversed(mc.sample_rngs(3, 10))]
        assert a == list(reversed(b))
        assert [float(r.normal()) for r in mc.sample_rngs(3, 4)] == a[:4]

    def test_failures_collected(self):
        def run(r):
            if r.random() < 0.5:
                raise RuntimeError("boom")
            return 1.0

        with pytest.raises(MonteCarloError) as exc:
            mc.monte_carlo(run, 20, SIGMA)
        assert exc.value.failures and all(isinstance(e, RuntimeError) for _, e in exc.value.failures)

    def test_needs_two_samples(self):
        with pytest.raises(ValidationError):
            mc.monte_carlo(lambda r: 1.0, 1, SIGMA)


class TestCascade:
    def test_table(self):
        rows = mc.cascade_variation_table([1, 2, 3, 4], 200, mc.MismatchSpec(0.092, seed=0))
        var = [r.variation_pct for r in rows]
        assert var == sorted(var, reverse=True)
        assert var[3] / var[0] == pytest.approx(0.5, abs=0.1)
        d = vtc.delay(1.0, vtc.VtcParams())
        for n, r in enumerate(rows, start=1):
            assert r.mean == pytest.approx(n * d, rel=0.03)

    def test_zero_sigma(self):
        (row,) = mc.cascade_variation_table([1], 10, mc.NOISELESS)
        assert row.variation_pct == 0

    def test_bad_stages(self):
        with pytest.raises(ValidationError):
            mc.cascade_variation_table([], 10, SIGMA)
        with pytest.raises(ValidationError):
            mc.cascade_variation_table([0, 1], 10, SIGMA)

    def test_seed_means_agree(self):
        a, b = (mc.cascade_variation_table([1], 200, mc.MismatchSpec(0.092, seed=s))[0] for s in (1, 2))
        se = np.hypot(a.std, b.std) / np.sqrt(200)
        assert abs(a.mean - b.mean) < 3 * se


class TestCrossbarMismatch:
    def test_null_spec_returns_same(self, rng):
        cfg = default_crossbar()
        assert mc.perturb_crossbar(cfg, mc.MismatchSpec(0.092), rng) is cfg

    def test_xeq_perturbed(self, rng):
        cfg = default_crossbar()
        inst = mc.perturb_crossbar(cfg, mc.MismatchSpec(0.0, xeq_rel_sigma=0.02), rng)
        rel = inst.xeq / cfg.xeq - 1
        assert 0 < np.abs(rel).max() < 0.1
        assert inst.gm_scale is None

    def test_gm_perturbed(self, rng):
        inst = mc.perturb_crossbar(default_crossbar(), mc.MismatchSpec(0.0, gm_rel_sigma=0.05), rng)
        assert inst.gm_scale.shape == (5, 4) and not np.all(inst.gm_scale == 1)

    def test_histogram(self):
        edges, counts = mc.histogram([1, 2, 2, 3], bins=2)
        assert counts.sum() == 4 and edges.size == 3
