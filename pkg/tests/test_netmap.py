import numpy as np
import pytest

from c3pu import netmap as nm
from c3pu.errors import TimingViolation, ValidationError
from c3pu.variability import PAPER_NOISE, MismatchSpec, sample_rngs


class TestShift:
    def test_example(self):
        s, w_min = nm.shift_weights([[1, -2], [0, 3]])
        assert w_min == -2
        np.testing.assert_array_equal(s, [[3, 0], [2, 5]])

    def test_nonnegative_unchanged(self):
        s, w_min = nm.shift_weights([[0, 1], [2, 3]])
        assert w_min == 0
        np.testing.assert_array_equal(s, [[0, 1], [2, 3]])

    def test_correction_term(self):
        w = np.array([[1.0, -2.0], [0.0, 3.0]])
        s, w_min = nm.shift_weights(w)
        x = np.array([1.0, 1.0])
        # shifted MAC minus |w_min| * sum(inputs) recovers the original MAC
        np.testing.assert_allclose(x @ s - abs(w_min) * x.sum(), x @ w)
        assert abs(w_min) * x.sum() == 4

    def test_nonfinite(self):
        with pytest.raises(ValidationError):
            nm.shift_weights([[np.inf]])


class TestMap:
    def test_endpoints_and_midpoint(self):
        x, slope = nm.map_weights_to_xeq(np.array([[0.0, 2.0, 4.0]]), -1.0)
        np.testing.assert_allclose(x[0, :3], [0.5, 0.625, 0.75])
        assert x[0, 3] == pytest.approx(0.5 + 0.25 / 4)
        assert slope == pytest.approx(0.25 / 4)

    def test_order_preserved(self, rng):
        w = rng.random((5, 3))
        x, _ = nm.map_weights_to_xeq(w, -0.2)
        np.testing.assert_array_equal(np.argsort(w, axis=None), np.argsort(x[:, :3], axis=None))

    def test_errors(self):
        with pytest.raises(ValidationError):
            nm.map_weights_to_xeq(np.zeros((2, 2)), -1.0)
        with pytest.raises(ValidationError):
            nm.map_weights_to_xeq(np.array([[-0.1, 1.0]]), 0.0)
        with pytest.raises(ValidationError):
            nm.map_weights_to_xeq(np.array([[1.0]]), 0.5)


class TestTimeDomain:
    @pytest.mark.parametrize("a, b, out", [(2.0e-9, 1.5e-9, 0.5e-9), (1e-9, 1e-9, 0.0), (0.5e-9, 2e-9, 0.0)])
    def test_subtract(self, a, b, out):
        assert nm.time_subtract_relu(a, b) == pytest.approx(out, abs=1e-21)

    @pytest.mark.parametrize("pw, t_min, out", [(30e-12, 50e-12, 0.0), (0.0, 50e-12, 0.0), (2e-9, 50e-12, 2e-9)])
    def test_quantize(self, pw, t_min, out):
        assert nm.quantize_pulse(pw, t_min) == out

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            nm.time_subtract_relu(-1e-12, 0.0)
        with pytest.raises(ValidationError):
            nm.quantize_pulse(-1e-12, 1e-12)


class TestCompiled:
    def test_xeq_window(self, mapped):
        for xb in (mapped.xbar1, mapped.xbar2):
            assert xb.xeq.min() >= 0.5 - 1e-12 and xb.xeq.max() <= 0.75 + 1e-12
        assert mapped.xbar1.xeq.shape == (5, 4) and mapped.xbar2.xeq.shape == (4, 4)
        # w_min column replicated down the array
        assert np.ptp(mapped.xbar1.xeq[:, -1]) < 1e-12

    def test_noiseless_matches_software_everywhere(self, iris, pretrained, mapped):
        v = pretrained.normalize(iris.features)
        res = nm.evaluate(v, iris.labels, mapped)
        np.testing.assert_array_equal(res.predictions, np.argmax(pretrained.logits(v), axis=1))

    def test_noiseless_logits_are_scaled_copies(self, iris, pretrained, mapped):
        # with t_min effectively off, hardware logits equal software logits up to one positive gain
        net = nm.compile_network(pretrained, t_min=0.0, calibration_inputs=pretrained.normalize(iris.features))
        v = pretrained.normalize(iris.features[:20])
        hw = np.array([nm.infer(x, net).logits for x in v])
        sw = pretrained.logits(v)
        gain = hw / sw
        np.testing.assert_allclose(gain, gain.flat[0], rtol=1e-9)
        assert gain.flat[0] > 0

    def test_zero_features_drive_bias_only(self, mapped):
        tr = nm.infer(np.zeros(4), mapped)
        assert tr.input_pulses[:4].tolist() == [tr.input_pulses[0]] * 4
        assert tr.inputs.tolist() == [0, 0, 0, 0, 1]

    def test_trace_contents(self, mapped):
        tr = nm.infer(np.full(4, 0.5), mapped)
        assert tr.layer2_pulses.size == 4 and tr.probabilities.sum() == pytest.approx(1.0)
        assert tr.layer2_pulses[-1] == pytest.approx(mapped.activation_time)
        assert set(tr.as_dict()) >= {"logits", "label", "hidden_pulses"}

    def test_input_validation(self, mapped):
        with pytest.raises(ValidationError):
            nm.infer(np.zeros(3), mapped)
        with pytest.raises(ValidationError):
            nm.infer(np.full(4, 1.5), mapped)
        with pytest.raises(ValidationError):
            nm.infer(np.zeros(4), mapped, PAPER_NOISE)
        with pytest.raises(ValidationError):
            nm.infer(np.zeros(4), mapped, calibration="sometimes")

    def test_timing_violation(self, pretrained, iris):
        net = nm.compile_network(pretrained, pulse_scale=100.0, calibration_inputs=pretrained.normalize(iris.features))
        v = pretrained.normalize(iris.features)
        with pytest.raises(TimingViolation):
            for x in v:
                nm.infer(x, net)

    def test_auto_pulse_scale(self, pretrained, iris):
        v = pretrained.normalize(iris.features)
        net = nm.compile_network(pretrained, pulse_scale="auto", calibration_inputs=v)
        widest = max(nm.infer(x, net, ).scaled_pulses.max() for x in v)
        assert widest == pytest.approx(nm.AUTO_SCALE_TARGET, rel=1e-6)
        with pytest.raises(ValidationError):
            nm.compile_network(pretrained, pulse_scale="auto")

    def test_noisy_is_deterministic(self, iris, pretrained, mapped, split):
        _, test = split
        v = pretrained.normalize(iris.features[test])
        a = nm.evaluate(v, iris.labels[test], mapped, PAPER_NOISE)
        b = nm.evaluate(v, iris.labels[test], mapped, PAPER_NOISE)
        np.testing.assert_array_equal(a.predictions, b.predictions)
        assert a.confusion.sum() == 30

    def test_instance_vs_design_calibration(self, iris, pretrained, mapped, split):
        _, test = split
        v = pretrained.normalize(iris.features[test])
        spec = MismatchSpec(0.092, 0.02, seed=1)
        inst = nm.evaluate(v, iris.labels[test], mapped, spec, calibration="instance")
        design = nm.evaluate(v, iris.labels[test], mapped, spec, calibration="design")
        assert inst.accuracy >= design.accuracy

    def test_instance_calibration_noop_without_noise(self, mapped):
        x = np.array([0.6, 0.5, 0.3, 0.1])
        rng = sample_rngs(0, 1)[0]
        a = nm.infer(x, mapped, MismatchSpec(0.0, 0.0), rng, calibration="instance")
        b = nm.infer(x, mapped, None, None, calibration="design")
        np.testing.assert_array_equal(a.logits, b.logits)

    def test_describe(self, mapped):
        d = mapped.describe()
        assert d["pulse_scale"] == 18.0 and len(d["xeq1"]) == 5
