import math

import numpy as np
import pytest

from ilw_limits.evolution import (
    BlowUpError,
    SolverConfig,
    advisory_dt,
    default_padding,
    evolve,
    integrate,
    invariant_i2,
    linear_propagator,
    nonlinear_term,
)
from ilw_limits.experiments import DataProfile
from ilw_limits.grid import Grid, from_function, random_hs_field, sobolev_norm, to_physical, to_spectral
from ilw_limits.symbols import EquationSpec, build_symbol_table, k_delta

G = Grid(64)
U0 = DataProfile().build(G)


def fine_dt(k=2):
    """The advisory step the same data gets on a 256-mode grid (band-limited data, same flow)."""
    return advisory_dt(G, U0, k) / 4


SPECS = [
    EquationSpec.ilw(4.0),
    EquationSpec.bo(),
    EquationSpec.scaled_ilw(0.1),
    EquationSpec.kdv(),
    EquationSpec.ilw(2.0, 3),
]


def test_default_padding():
    assert [default_padding(k) for k in (2, 3, 4, 5)] == [2, 2, 3, 3]


def test_nonlinear_term_of_cosine():
    f = from_function(np.cos, G)
    n = nonlinear_term(f, 2)
    # d/dx cos^2 x = -sin 2x: coefficient i at m = 2 ... -sin(2x) = (i/2) e^{2ix} + c.c.
    expect = np.zeros_like(n.coeffs)
    expect[2] = 0.5j
    np.testing.assert_allclose(n.coeffs, expect, atol=1e-15)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_nonlinear_term_is_alias_free(k):
    """Against u^k formed on a grid fine enough to hold every product mode exactly."""
    g = Grid(32)
    u = random_hs_field(g, 0.0, 1.0, seed=k)
    fine = 32 * k
    samples = to_physical(u, fine)
    power = np.fft.rfft(samples**k) / fine
    expect = 1j * g.xi * power[: g.nyquist + 1]
    expect[-1] = 0.0
    got = nonlinear_term(u, k)
    np.testing.assert_allclose(got.coeffs, expect, atol=1e-13)
    assert got.coeffs[0] == 0.0


def test_advisory_dt_formula():
    umax = float(np.max(np.abs(to_physical(U0))))
    assert advisory_dt(G, U0, 2) == pytest.approx(0.5 / (G.xi_max * (1 + 2 * umax)))
    assert advisory_dt(G, U0, 3, safety=0.25) == pytest.approx(0.25 / (G.xi_max * (1 + 3 * umax**2)))
    # never looser than safety / (xi_max (1 + max|u|)) for k = 2
    assert advisory_dt(G, U0, 2) <= 0.5 / (G.xi_max * (1 + umax))


def test_solver_config_validation():
    spec = EquationSpec.bo()
    for kw in ({"dt": 0.0}, {"dt": -1.0}, {"T": -1.0}, {"snapshot_stride": 0}, {"dealias": 0}, {"truncation": 32}):
        args = {"spec": spec, "grid": G, "dt": 0.01, "T": 0.1, **kw}
        with pytest.raises(ValueError):
            SolverConfig(**args)
    assert SolverConfig(spec, G, 0.03, 0.1).n_steps == 4
    assert SolverConfig(spec, G, 0.05, 0.1).n_steps == 2
    assert SolverConfig(spec, G, 0.05, 0.0).n_steps == 0


@pytest.mark.parametrize("spec", SPECS[:4])
def test_linear_flow_is_exact(spec):
    cfg = SolverConfig(spec, G, 0.013, 0.2, linear_only=True)
    traj = evolve(U0, cfg)
    table = build_symbol_table(spec, G)
    expect = U0.without_nyquist().coeffs * linear_propagator(table, 0.2)
    np.testing.assert_allclose(traj.final.coeffs, expect, atol=1e-13)
    assert traj.times[-1] == 0.2


@pytest.mark.parametrize("spec", SPECS)
def test_mean_and_l2_are_conserved(spec):
    traj = evolve(U0, SolverConfig(spec, G, fine_dt(spec.k), 0.2, snapshot_stride=5))
    assert not traj.blowup
    mean = traj.diagnostics["mean"]
    assert max(abs(m - mean[0]) for m in mean) < 1e-14
    l2 = np.array(traj.diagnostics["l2"])
    assert np.max(np.abs(l2 / l2[0] - 1)) < 1e-9


@pytest.mark.parametrize("spec", SPECS)
def test_forward_backward_returns(spec):
    cfg = SolverConfig(spec, G, fine_dt(spec.k), 0.2)
    back = integrate(integrate(U0, cfg), cfg, backward=True)
    assert sobolev_norm(back - U0.without_nyquist(), 1.0) < 1e-7


def test_time_zero_gives_one_snapshot():
    traj = evolve(U0, SolverConfig(EquationSpec.bo(), G, 0.01, 0.0))
    assert traj.times == [0.0] and len(traj.fields) == 1
    assert set(traj.diagnostics) == {"mean", "l2", "hs"}


def test_snapshot_schedule_lands_on_final_time():
    traj = evolve(U0, SolverConfig(EquationSpec.kdv(), G, 0.003, 0.1, snapshot_stride=10))
    assert traj.times[0] == 0.0 and traj.times[-1] == 0.1
    assert np.all(np.diff(traj.times) > 0)
    assert traj.at(traj.times[1]) is traj.fields[1]
    with pytest.raises(KeyError):
        traj.at(0.0123)


def test_self_convergence_order():
    spec = EquationSpec.ilw(4.0)
    dt = 2 * advisory_dt(G, U0, 2)
    finals = [integrate(U0, SolverConfig(spec, G, dt / 2**j, 0.2)) for j in range(3)]
    e1 = sobolev_norm(finals[0] - finals[1], 1.0)
    e2 = sobolev_norm(finals[1] - finals[2], 1.0)
    assert math.log2(e1 / e2) == pytest.approx(4.0, abs=0.3)


def test_blowup_is_flagged():
    big = from_function(lambda x: 40 * np.cos(x), G)
    traj = evolve(big, SolverConfig(EquationSpec.kdv(3), G, 0.05, 1.0))
    assert traj.blowup and traj.failure_time is not None
    assert np.all(np.isfinite(traj.final.coeffs))
    with pytest.raises(BlowUpError):
        integrate(big, SolverConfig(EquationSpec.kdv(3), G, 0.05, 1.0))


def test_invariant_i2_of_cosine():
    """u = cos x, delta = 1: every term reduces to a one-mode integral."""
    K = 1 / math.tanh(1.0) - 1.0
    base = 3 * math.pi / 16 + math.pi / 8 + 3 / 8 * K * K * math.pi
    f = from_function(np.cos, Grid(32))
    assert K == pytest.approx(k_delta(1.0, 1.0), rel=1e-15)
    assert invariant_i2(f, 1.0) == pytest.approx(base + 3 / 8 * K * math.pi, rel=1e-13)
    assert invariant_i2(f, 1.0, "corrected") == pytest.approx(base - 3 / 8 * K * math.pi, rel=1e-13)
    with pytest.raises(ValueError):
        invariant_i2(f, 0.0)


def test_corrected_i2_is_conserved_and_printed_is_not():
    spec = EquationSpec.ilw(4.0)
    dt = advisory_dt(G, U0, 2)
    traj = evolve(U0, SolverConfig(spec, G, dt, 0.2))
    c = traj.diagnostics["i2_corrected"]
    p = traj.diagnostics["i2"]
    assert max(abs(v - c[0]) for v in c) / abs(c[0]) < 1e-7
    assert max(abs(v - p[0]) for v in p) / abs(p[0]) > 1e-3


def test_real_space_round_trip_of_solution():
    traj = evolve(U0, SolverConfig(EquationSpec.bo(), G, 0.01, 0.05))
    u = to_physical(traj.final)
    np.testing.assert_allclose(to_spectral(u, G).coeffs, traj.final.coeffs, atol=1e-15)
