import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ilw_limits.grid import Grid
from ilw_limits.symbols import (
    DepthParam,
    EquationSpec,
    build_symbol_table,
    coth_stable,
    deep_asymptotic_constants,
    dispersion,
    dispersion_derivative,
    dk_delta,
    h_closed,
    h_series,
    h_series_terms,
    k_delta,
    l_delta,
    q_delta,
    shallow_lower_constant,
)

mp.mp.dps = 50


def k_ref(delta, xi):
    d, x = mp.mpf(delta), mp.mpf(xi)
    return x * mp.coth(d * x) - 1 / d if x != 0 else mp.mpf(0)


def h_ref(delta, xi):
    d, x = mp.mpf(delta), mp.mpf(xi)
    return 3 * (1 / d + d * x**2 / 3 - x * mp.coth(d * x)) / x**2


@pytest.mark.parametrize("x", [1e-9, 1e-5, 9.9e-5, 1.01e-4, 0.3, 1.0, 5.0, 19.9, 20.1, 100.0])
def test_coth_stable_against_high_precision(x):
    for v in (x, -x):
        assert coth_stable(v) == pytest.approx(float(mp.coth(mp.mpf(v))), rel=1e-14)


def test_coth_undefined_at_zero():
    with pytest.raises(ValueError):
        coth_stable(0.0)
    assert coth_stable(1.0) == pytest.approx(1.3130352854993315, rel=1e-15)


@pytest.mark.parametrize("delta", [1e-3, 0.1, 0.5, 2.0, 10.0, 1e4])
def test_k_delta_against_high_precision(delta):
    xi = np.array([1e-7, 1e-3, 0.5, 1.0, 3.0, 40.0, 512.0])
    got = np.asarray(k_delta(delta, xi))
    ref = np.array([float(k_ref(delta, x)) for x in xi])
    np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-300)


def test_k_delta_basic_structure():
    assert k_delta(3.0, 0.0) == 0.0
    xi = np.linspace(-50, 50, 201)
    np.testing.assert_array_equal(k_delta(3.0, xi), k_delta(3.0, -xi))
    np.testing.assert_array_equal(k_delta(math.inf, xi), np.abs(xi))
    with pytest.raises(ValueError):
        k_delta(0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(2.0, 1e6), st.floats(-1e3, 1e3, allow_nan=False))
def test_sandwich_and_q_range(delta, xi):
    K = k_delta(delta, xi)
    assert max(0.0, abs(xi) - 1 / delta) <= K <= abs(xi)
    q = q_delta(delta, xi)
    assert 0.0 <= q <= 2.0 / delta


def test_q_needs_the_deep_regime():
    with pytest.raises(ValueError):
        q_delta(1.5, 1.0)
    assert q_delta(math.inf, 7.0) == 0.0


@pytest.mark.parametrize("delta", [1e-3, 0.05, 0.7, 2.0, 50.0, 1e6])
@pytest.mark.parametrize("xi", [1e-4, 0.3, 1.0, 17.0, 512.0])
def test_h_series_and_closed_form_against_high_precision(delta, xi):
    ref = float(h_ref(delta, xi))
    assert h_series(delta, xi) == pytest.approx(ref, rel=1e-13)
    assert h_closed(delta, xi) == pytest.approx(ref, rel=1e-13)


def test_h_series_cost_stays_bounded():
    # the Euler-Maclaurin tail keeps huge delta*xi cheap
    assert h_series_terms(1e6, 512.0) < 10_000
    assert h_series_terms(1.0, 0.0) == 0
    assert h_series(2.0, 0.0) == 0.0
    # a loose tolerance needs fewer terms
    assert h_series_terms(1.0, 3.0, tol=1e-6) < h_series_terms(1.0, 3.0)


def test_h_closed_is_continuous_across_its_series_branch():
    x = np.array([1 - 1e-12, 1 + 1e-12])
    h = np.asarray(h_closed(1.0, x))
    assert abs(h[1] - h[0]) < 1e-11
    assert h_closed(1.0, 0.0) == 0.0
    # O(delta^3) for fixed xi: h ~ delta^3 xi^2 / 15
    assert h_closed(1e-4, 2.0) == pytest.approx(1e-12 * 4 / 15, rel=1e-6)


def test_taylor_identity():
    for d in (0.01, 0.3, 2.0, 40.0):
        for x in (0.5, 3.0, 60.0):
            lhs = x / math.tanh(d * x)
            rhs = 1 / d + d * x * x / 3 - x * x * h_series(d, x) / 3
            assert abs(lhs - rhs) <= 1e-12 * (1 / d + d * x * x)


def test_l_delta_tends_to_xi_squared():
    for x in (1.0, 4.0, 16.0):
        vals = [l_delta(d, x) for d in (0.4, 0.2, 0.1, 0.05, 0.01, 1e-4)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(x * x, rel=1e-6)
    assert l_delta(0.3, 2.0) == pytest.approx(3 / 0.3 * k_delta(0.3, 2.0))


def test_dk_delta_against_finite_differences():
    for d in (0.1, 2.0, 30.0):
        for x in (-5.0, -0.01, 1e-5, 0.7, 8.0, 400.0):
            h = 1e-6 * max(1.0, abs(x))
            fd = (k_delta(d, x + h) - k_delta(d, x - h)) / (2 * h)
            assert dk_delta(d, x) == pytest.approx(fd, rel=1e-6, abs=1e-9)
    assert dk_delta(math.inf, -3.0) == -1.0


def test_equation_spec_validation():
    with pytest.raises(ValueError):
        EquationSpec.ilw(1.5)
    with pytest.raises(ValueError):
        EquationSpec.scaled_ilw(1.0)
    with pytest.raises(ValueError):
        EquationSpec.bo(k=1)
    with pytest.raises(ValueError):
        EquationSpec("gILW-deep", 2, DepthParam.shallow(0.5))
    with pytest.raises(ValueError):
        EquationSpec("gXYZ", 2)
    assert EquationSpec.bo().delta == math.inf
    assert EquationSpec.kdv(3).delta == 0.0
    assert EquationSpec.unscaled_ilw(0.3).delta == 0.3


SPECS = [
    EquationSpec.ilw(4.0),
    EquationSpec.bo(),
    EquationSpec.scaled_ilw(0.1),
    EquationSpec.kdv(),
    EquationSpec.unscaled_ilw(0.5),
]


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(SPECS), st.floats(-300, 300, allow_nan=False))
def test_dispersion_is_odd(spec, xi):
    assert dispersion(spec, -xi) == -dispersion(spec, xi)


def test_dispersion_values():
    xi = np.array([-3.0, 0.0, 2.0])
    np.testing.assert_array_equal(dispersion(EquationSpec.bo(), xi), [-9.0, 0.0, 4.0])
    np.testing.assert_array_equal(dispersion(EquationSpec.kdv(), xi), [-27.0, 0.0, 8.0])
    assert dispersion(EquationSpec.ilw(2.0), 1.0) == pytest.approx(float(k_ref(2.0, 1.0)))
    assert dispersion(EquationSpec.scaled_ilw(0.2), 1.0) == pytest.approx(3 / 0.2 * float(k_ref(0.2, 1.0)))


def test_dispersion_derivative_against_finite_differences():
    for spec in SPECS:
        for x in (0.3, 2.0, 11.0):
            h = 1e-5
            fd = (dispersion(spec, x + h) - dispersion(spec, x - h)) / (2 * h)
            assert dispersion_derivative(spec, x) == pytest.approx(fd, rel=1e-7)


def test_symbol_table_layout_and_csv():
    g = Grid(16)
    t = build_symbol_table(EquationSpec.ilw(2.0), g)
    full = t.full("p")
    np.testing.assert_array_equal(full[:7], -full[8:15][::-1])
    lines = t.to_csv().splitlines()
    assert lines[0] == "mode,xi,p,K,L,q,h"
    assert len(lines) == 17
    cells = lines[1].split(",")
    assert cells[0] == "-7" and cells[4] == "" and cells[6] == "" and cells[5] != ""
    kdv = build_symbol_table(EquationSpec.kdv(), g).to_csv().splitlines()[-1].split(",")
    assert kdv[:5] == ["8", "8.0", "512.0", "", "64.0"]
    with pytest.raises(ValueError):
        t.p[0] = 1.0


def test_measured_regime_constants():
    xis = np.arange(1, 513, dtype=float)
    # L_delta(xi) >~ |xi| uniformly in the shallow regime
    assert shallow_lower_constant(xis, [0.9, 0.5, 0.1, 0.01]) > 0.5
    c = deep_asymptotic_constants([2.0, 10.0, 1e3], np.concatenate([np.logspace(-5, -2, 20), xis]))
    lo, hi = c["high_frequency"]
    assert 0.5 <= lo <= hi <= 1.0
    lo, hi = c["low_frequency"]
    assert 0.25 <= lo <= hi <= 1 / 3 + 1e-12
