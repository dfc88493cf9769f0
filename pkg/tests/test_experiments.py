import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ilw_limits.evolution import SolverConfig, evolve
from ilw_limits.experiments import (
    DataProfile,
    Perturbation,
    SweepConfig,
    apply_scaling_transform,
    deep_water_sweep,
    fit_rate,
    run_sweep,
    scaling_amplitude,
    scaling_consistency,
    truncated_shallow_sweep,
    varying_data_sweep,
)
from ilw_limits.grid import Grid
from ilw_limits.symbols import EquationSpec

DEEP = (2.0, 4.0, 8.0, 16.0, 32.0)


def small(regime, deltas, **kw):
    return SweepConfig(regime, deltas, modes=64, T=0.1, **kw)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 100.0))
def test_fit_rate_recovers_power_laws(slope, c):
    d = np.array([0.1, 0.3, 1.0, 4.0, 9.0])
    s, intercept, residual = fit_rate(d, c * d**slope)
    assert s == pytest.approx(slope, abs=1e-9)
    assert math.exp(intercept) == pytest.approx(c, rel=1e-9)
    assert residual < 1e-9


def test_fit_rate_rejects_degenerate_input():
    with pytest.raises(ValueError):
        fit_rate([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_rate([1, 2, 3, 4], [1, 0, 3, 4])


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig("deep", (2.0, 4.0, 8.0))
    with pytest.raises(ValueError):
        SweepConfig("deep", (1.0, 4.0, 8.0, 16.0))
    with pytest.raises(ValueError):
        SweepConfig("shallow", (0.5, 0.2, 0.1, 1.0))
    with pytest.raises(ValueError):
        SweepConfig("deep", (2.0, 2.0, 8.0, 16.0))
    with pytest.raises(ValueError):
        SweepConfig("shallow-truncated", (0.2, 0.1, 0.05, 0.025))
    with pytest.raises(ValueError):
        SweepConfig("shallow-truncated", (0.2, 0.1, 0.05, 0.025), modes=64, truncation=22)
    with pytest.raises(ValueError):
        SweepConfig("medium", DEEP)
    assert SweepConfig("shallow", (0.05, 0.4, 0.1, 0.2)).ordered_deltas == (0.4, 0.2, 0.1, 0.05)
    assert SweepConfig("deep", (8.0, 2.0, 32.0, 4.0)).ordered_deltas == (2.0, 4.0, 8.0, 32.0)


def test_data_profile():
    g = Grid(64)
    u = DataProfile().build(g)
    assert u.coeff(1) == pytest.approx(0.5)
    assert u.coeff(2) == pytest.approx(0.25 * np.exp(1j))
    rough = DataProfile(tail_amplitude=0.3, band_limit=10).build(g)
    assert np.all(rough.coeffs[11:] == 0) and np.any(rough.coeffs[5:11] != u.coeffs[5:11])
    assert rough.coeffs[-1] == 0
    with pytest.raises(ValueError):
        Perturbation(decay="quadratic")
    assert Perturbation().scale(4.0) == 0.25
    assert Perturbation(decay="constant").scale(4.0) == 1.0
    assert Perturbation(decay="none").scale(4.0) == 0.0


def test_scaling_amplitude():
    for d in (0.1, 0.5, 3.0):
        # a^{k-1} = 3/delta; for k = 2 this is the prefactor 3 delta^{1/(1-k)}
        assert scaling_amplitude(d, 2) == pytest.approx(3 / d)
        assert scaling_amplitude(d, 3) ** 2 == pytest.approx(3 / d)
    assert scaling_amplitude(3.0, 2) == 1.0


def test_scaling_transform_identity_and_missing_snapshot():
    g = Grid(64)
    u0 = DataProfile().build(g)
    traj = evolve(u0, SolverConfig(EquationSpec.unscaled_ilw(3.0), g, 0.002, 0.05, snapshot_stride=5))
    mapped = apply_scaling_transform(traj, 3.0, 2)
    assert mapped.times == traj.times
    assert all(np.array_equal(a.coeffs, b.coeffs) for a, b in zip(mapped.fields, traj.fields))
    with pytest.raises(KeyError):
        apply_scaling_transform(traj, 3.0, 2, times=[0.0123])
    with pytest.raises(ValueError):
        apply_scaling_transform(traj, 0.0, 2)


@pytest.mark.parametrize("delta,k", [(0.5, 2), (0.2, 3)])
def test_scaling_consistency(delta, k):
    g = Grid(64)
    u0 = DataProfile().build(g)
    assert scaling_consistency(u0 * 0.5, delta, k, 0.05, 0.0005, stride=10) < 1e-9


def test_deep_sweep_small():
    rep = deep_water_sweep(small("deep", DEEP))
    assert rep.strictly_decreasing
    assert rep.slope < -0.8
    lines = rep.csv().splitlines()
    assert lines[0] == "delta,error_hsm1,error_hs" and len(lines) == 6
    assert rep.config["deltas"] == list(DEEP)
    assert "runtime" not in rep.to_dict() and "runtime" in rep.to_dict(include_runtime=True)


def test_sweeps_are_deterministic_across_threads():
    cfg = small("deep", DEEP)
    a = deep_water_sweep(cfg).to_dict()
    b = deep_water_sweep(replace(cfg, threads=4)).to_dict()
    b["config"]["threads"] = a["config"]["threads"]
    assert a == b


def test_linear_only_deep_sweep_respects_the_symbol_gap_bound():
    rep = deep_water_sweep(small("deep", DEEP, linear_only=True))
    assert rep.extras["symbol_gap_bound_holds"]
    assert all(e <= b for e, b in zip(rep.errors_hsm1, rep.extras["symbol_gap_bound"]))


def test_truncated_sweep_small():
    rep = truncated_shallow_sweep(small("shallow-truncated", (0.2, 0.1, 0.05, 0.025), truncation=8))
    assert rep.strictly_decreasing
    assert rep.slope == pytest.approx(2.0, abs=0.3)
    assert rep.extras["truncation_gap"]["K"] == 8


def test_varying_data_controls():
    cfg = small("deep-varying-data", DEEP)
    inverse = varying_data_sweep(cfg)
    assert inverse.extras["converging"]
    constant = varying_data_sweep(replace(cfg, perturbation=Perturbation(decay="constant")))
    assert not constant.extras["converging"]
    none = varying_data_sweep(replace(cfg, perturbation=Perturbation(decay="none")))
    fixed = deep_water_sweep(small("deep", DEEP))
    np.testing.assert_allclose(none.errors_hsm1, fixed.errors_hsm1, rtol=1e-12)
    assert all(g == 0 for g in none.extras["data_gap_hs"])


def test_run_sweep_dispatch():
    rep = run_sweep(small("shallow", (0.4, 0.2, 0.1, 0.05)))
    assert rep.regime == "shallow"
    assert rep.extras["scaling_consistency"]["relative_h1_gap"] < 1e-9
