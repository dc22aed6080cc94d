import warnings

import numpy as np
import pytest

from c3pu import cell
from c3pu.errors import NonlinearityWarning, ValidationError

GM = 230.13e-6


class TestXeq:
    def test_equal_split(self):
        assert cell.x_eq(cell.CellConfig(2.5e-15, 2.5e-15, 0.0)) == 0.5

    def test_window_top(self):
        assert cell.x_eq(cell.CellConfig(8e-15, 2.5e-15, 0.1667e-15)) == pytest.approx(0.75, abs=1e-5)

    def test_no_loading(self):
        assert cell.x_eq(cell.CellConfig(1.0, 0.0, 0.0)) == 1.0

    def test_invalid(self):
        with pytest.raises(ValidationError):
            cell.CellConfig(0.0, 2.5e-15, 0.0)
        with pytest.raises(ValidationError):
            cell.CellConfig(1e-15, -1e-15, 0.0)

    def test_array_version(self):
        c = np.array([2.5e-15, 8e-15])
        np.testing.assert_allclose(cell.xeq_array(c, 2.5e-15, 0.1667e-15), c / (c + 2.6667e-15))


class TestGateAndCurrent:
    @pytest.mark.parametrize("x", [0.5, 0.75])
    def test_gate_voltage(self, x):
        c = cell.CellConfig.for_weight(x)
        assert cell.gate_voltage(1.0, c) == pytest.approx(x)
        assert cell.gate_voltage(0.0, c) == 0.0

    def test_negative_amplitude(self):
        with pytest.raises(ValidationError):
            cell.gate_voltage(-0.1, cell.CellConfig(2.5e-15))

    @pytest.mark.parametrize("vg, ua", [(0.5, 115.065), (0.75, 172.5975)])
    def test_linear_region(self, vg, ua):
        assert cell.drain_current(vg) == pytest.approx(GM * vg)
        assert cell.drain_current(vg) * 1e6 == pytest.approx(ua, abs=1e-3)

    def test_below_window_off(self):
        t = cell.TransistorModel(continuous=False)
        assert cell.drain_current(0.1, t) == 0.0
        assert cell.drain_current(0.9, t) == pytest.approx(GM * 0.8)

    def test_default_clamps(self):
        assert cell.drain_current(0.1) == pytest.approx(GM * 0.5)
        assert cell.drain_current(0.95) == pytest.approx(GM * 0.8)

    def test_continuous_at_edges(self):
        t = cell.TransistorModel()
        for edge in t.v_g_linear:
            lo, hi = cell.drain_current([edge - 1e-9, edge + 1e-9], t)
            assert hi - lo == pytest.approx(0.0, abs=GM * 3e-9)

    def test_invalid_model(self):
        with pytest.raises(ValidationError):
            cell.TransistorModel(g_m=0)
        with pytest.raises(ValidationError):
            cell.TransistorModel(v_g_linear=(0.8, 0.5))


class TestCellCharge:
    def test_full_scale_pulse(self):
        q = cell.cell_charge(2.0893e-9, 1.0, cell.CellConfig.for_weight(0.5))
        assert q == pytest.approx(GM * 0.5 * 2.0893e-9)
        assert q * 1e15 == pytest.approx(240.4, abs=0.05)

    def test_zero_width(self):
        assert cell.cell_charge(0.0, 1.0, cell.CellConfig.for_weight(0.6)) == 0.0

    def test_top_of_window(self):
        q = cell.cell_charge(1e-9, 1.0, cell.CellConfig.for_weight(0.75))
        assert q * 1e15 == pytest.approx(172.6, abs=0.05)

    def test_nonlinearity_warned(self):
        with pytest.warns(NonlinearityWarning):
            cell.cell_charge(1e-9, 1.0, cell.CellConfig.for_weight(0.9))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            cell.cell_charge(1e-9, 1.0, cell.CellConfig.for_weight(0.6))

    def test_negative_width(self):
        with pytest.raises(ValidationError):
            cell.cell_charge(-1e-12, 1.0, cell.CellConfig.for_weight(0.6))


class TestInverse:
    @pytest.mark.parametrize("x, cb, cg, want", [(0.5, 2.5e-15, 0.0, 2.5e-15),
                                                 (0.75, 2.5e-15, 0.1667e-15, 8.0e-15),
                                                 (0.6, 2.5e-15, 0.0, 3.75e-15)])
    def test_examples(self, x, cb, cg, want):
        assert cell.capacitance_for_weight(x, cb, cg) == pytest.approx(want, rel=1e-4)

    @pytest.mark.parametrize("x", [0.0, 1.0, 1.2])
    def test_rejects(self, x):
        with pytest.raises(ValidationError):
            cell.capacitance_for_weight(x)

    def test_scale_invariance(self):
        c = cell.CellConfig(3e-15, 2.5e-15, 0.2e-15)
        k = 7.3
        assert cell.x_eq(cell.CellConfig(k * 3e-15, k * 2.5e-15, k * 0.2e-15)) == pytest.approx(cell.x_eq(c), rel=1e-14)
