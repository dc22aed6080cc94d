"""Randomized invariants.  The four core suites run 10^4 cases each."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from c3pu import cell, netmap, oracle, vtc
from c3pu.crossbar import CrossbarConfig, DegradationModel, PulseTrain, simulate_mac
from c3pu.variability import MismatchSpec, cascade_variation_table, sample_rngs, vtc_gains

N_CORE = 10_000
core = settings(max_examples=N_CORE, deadline=None, suppress_health_check=[HealthCheck.too_slow])
light = settings(max_examples=300, deadline=None)

ratio = st.floats(1e-6, 1 - 1e-6)
cap = st.floats(1e-17, 1e-12)
width = st.floats(0.0, 1e-8, allow_nan=False)


# ---- criterion 11 core suites -----------------------------------------------

@core
@given(x=ratio, c_b=cap, c_g=st.one_of(st.just(0.0), cap))
def test_mapping_round_trip(x, c_b, c_g):
    c_c = cell.capacitance_for_weight(x, c_b, c_g)
    assert abs(cell.x_eq(cell.CellConfig(c_c, c_b, c_g)) - x) <= 4 * np.finfo(float).eps


@core
@given(a=width, b=width)
def test_subtract_relu_identities(a, b):
    f = netmap.time_subtract_relu
    assert f(a, b) >= 0
    assert f(a, b) + f(b, a) == abs(a - b)
    assert f(a, a) == 0
    # width difference then re-adding the reference restores the larger pulse
    assert f(a, b) + b == max(a, b) or abs(f(a, b) + b - max(a, b)) <= 2 * np.finfo(float).eps * max(a, b)


@core
@given(
    data=st.data(),
    rows=st.integers(1, 8),
    cols=st.integers(1, 8),
)
def test_charge_conservation(data, rows, cols):
    x = data.draw(hnp.arrays(float, (rows, cols), elements=st.floats(0.05, 0.95)))
    w = data.draw(hnp.arrays(float, rows, elements=st.floats(0.0, 3e-9)))
    caps = data.draw(hnp.arrays(float, cols, elements=st.floats(1e-14, 1e-12)))
    cfg = CrossbarConfig.from_xeq(x, integrator_caps=caps, degradation=DegradationModel(enabled=False))
    res = simulate_mac(PulseTrain(w), cfg)
    np.testing.assert_allclose(res.voltages * cfg.integrator_caps, res.cell_charges.sum(axis=0), rtol=1e-14, atol=0)
    assert np.all(res.cell_charges >= 0)


@core
@given(seed=st.integers(0, 2**63 - 1), k=st.integers(0, 7))
def test_determinism_under_fixed_seed(seed, k):
    a = sample_rngs(seed, 8)[k]
    b = sample_rngs(seed, 8)[k]
    assert np.array_equal(vtc_gains(5, 0.092, a), vtc_gains(5, 0.092, b))


def test_monte_carlo_tables_bit_identical():
    spec = MismatchSpec(0.092, seed=11)
    assert cascade_variation_table([1, 2, 3, 4], 200, spec) == cascade_variation_table([1, 2, 3, 4], 200, spec)


# ---- further module invariants --------------------------------------------------

@light
@given(x=st.floats(0, 1), y=st.floats(0, 1), a=st.floats(0, 1))
def test_delay_affine(x, y, a):
    p = vtc.VtcParams()
    lhs = vtc.delay(a * x + (1 - a) * y, p)
    rhs = a * vtc.delay(x, p) + (1 - a) * vtc.delay(y, p)
    assert abs(lhs - rhs) <= 1e-14 * abs(rhs)


@light
@given(x=st.floats(0, 1), y=st.floats(0, 1))
def test_delay_monotone(x, y):
    p = vtc.VtcParams()
    if x <= y:
        assert vtc.delay(x, p) <= vtc.delay(y, p)
    if y - x > 1e-12:
        assert vtc.delay(x, p) < vtc.delay(y, p)


@light
@given(pw=st.floats(0, 1e-9), c=st.floats(0, 100))
def test_delay_element_homogeneous(pw, c):
    lhs = vtc.delay_element_scale(c * pw)
    assert abs(lhs - c * vtc.delay_element_scale(pw)) <= 1e-12 * max(lhs, 1e-30)


@light
@given(pw=width, t=st.floats(0, 1e-9))
def test_quantize_idempotent(pw, t):
    once = netmap.quantize_pulse(pw, t)
    assert netmap.quantize_pulse(once, t) == once


@light
@given(c_c=cap, c_b=cap, c_g=cap, k=st.floats(1e-3, 1e3))
def test_xeq_scale_invariant(c_c, c_b, c_g, k):
    a = cell.x_eq(cell.CellConfig(c_c, c_b, c_g))
    b = cell.x_eq(cell.CellConfig(k * c_c, k * c_b, k * c_g))
    assert abs(a - b) <= 1e-14


@light
@given(pw=st.floats(0, 5e-9), x=st.floats(0.5, 0.75), v=st.floats(0.7, 1.0))
def test_cell_multiplies(pw, x, v):
    c = cell.CellConfig.for_weight(x)
    t = cell.TransistorModel(v_g_linear=(0.0, 1.0))
    assert abs(cell.cell_charge(pw, v, c, t) - t.g_m * v * cell.x_eq(c) * pw) <= 1e-12 * t.g_m * pw + 1e-30


@light
@given(a=st.floats(0, 1), b=st.floats(0, 1), bits=st.integers(1, 16))
def test_quantize_monotone(a, b, bits):
    lo, hi = sorted((a, b))
    assert oracle.quantize(lo, bits) <= oracle.quantize(hi, bits)


@light
@given(
    hnp.arrays(float, 6, elements=st.floats(-10, 10, allow_subnormal=False)),
    hnp.arrays(float, 6, elements=st.floats(-10, 10, allow_subnormal=False)),
)
def test_error_report_zero_iff_equal(obs, exp):
    with np.errstate(over="ignore"):  # tiny denominators
        r = oracle.error_report(obs, exp)
    assert (r.average == 0) == np.array_equal(obs, exp)


@light
@given(
    data=st.data(),
    n_in=st.integers(1, 5),
    n_out=st.integers(1, 4),
)
def test_mapping_preserves_preactivation_order(data, n_in, n_out):
    w = data.draw(hnp.arrays(float, (n_in + 1, n_out), elements=st.floats(-3, 3, allow_subnormal=False)))
    v = data.draw(hnp.arrays(float, n_in, elements=st.floats(0, 1)))
    shifted, w_min = netmap.shift_weights(w)
    if w_min > 0:
        shifted, w_min = w, 0.0
    if shifted.max() < 1e-6:
        return  # degenerate block, rejected by the mapper
    x, slope = netmap.map_weights_to_xeq(shifted, w_min)
    inp = np.append(v, 1.0)
    out = inp @ x
    recovered = (out[:-1] - out[-1]) / slope
    np.testing.assert_allclose(recovered, inp @ w, atol=1e-9)


@light
@given(a=hnp.arrays(float, 5, elements=st.floats(0, 1.4e-9)), b=hnp.arrays(float, 5, elements=st.floats(0, 1.4e-9)))
def test_array_superposition(a, b):
    from c3pu.crossbar import default_crossbar

    cfg = default_crossbar()
    sim = lambda w: simulate_mac(PulseTrain(w), cfg).voltages  # noqa: E731
    np.testing.assert_allclose(sim(a + b), sim(a) + sim(b), rtol=1e-12, atol=1e-18)
