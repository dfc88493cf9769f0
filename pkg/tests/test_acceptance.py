"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records a one-line verdict (printed in the terminal summary by
conftest.py) before asserting, so a failing criterion still reports what it
measured.
"""

import json
import math

import pytest

from conftest import ACCEPTANCE_LINES
from ilw_limits import checks
from ilw_limits.cli import EXIT_OK, main
from ilw_limits.resonance import ComparisonConstants, check_res1


def record(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_1_symbol_bounds():
    v = checks.symbol_bounds().values
    ok = (
        v["sandwich_max_violation"] <= 0.0
        and v["q_range_max_violation"] <= 0.0
        and v["taylor_residual_rel"] < 1e-10
        and v["h_series_vs_closed_rel"] < 1e-9
    )
    detail = (
        f"sandwich violation {v['sandwich_max_violation']:.1e}, q-range violation {v['q_range_max_violation']:.1e}, "
        f"Taylor residual {v['taylor_residual_rel']:.1e} (< 1e-10), h series/closed {v['h_series_vs_closed_rel']:.1e} (< 1e-9)"
    )
    assert record(1, ok, detail)
    assert v["upper_strict"] and v["lower_strict_where_resolved"]


def test_criterion_2_shallow_symbol_limits():
    v = checks.shallow_symbol_limits().values
    lo, hi = v["h_over_delta_slope_min"], v["h_over_delta_slope_max"]
    ok = v["L_strictly_increasing"] and v["L_below_xi_squared"] and abs(lo - 2) <= 0.1 and abs(hi - 2) <= 0.1
    detail = f"L strictly increasing below xi^2: {v['L_strictly_increasing'] and v['L_below_xi_squared']}; h/delta slopes in [{lo:.3f}, {hi:.3f}] (target 2 +- 0.1)"
    assert record(2, ok, detail)


def test_criterion_3_resonance_floors():
    res = checks.resonance_floors(cap=64)
    v = res.values
    positive = all(
        m is not None and m > 0 for run in v["runs"].values() for m in run["per_delta_min"]
    )
    deep_unif = {k: r["uniformity"] for k, r in v["runs"].items() if k.endswith("deep")}
    uniform = all(u is not None and u < 4.0 for u in deep_unif.values())
    # how the verdict depends on the size hypothesis |n_1| >= n0 * |p'(n0)| scale
    sensitivity = {}
    for n0 in (0.0, 1.0, 2.0, 4.0, 16.0):
        rep = check_res1("deep", checks.DEEP_RES_DELTAS, 1, 64, ComparisonConstants(n0=n0), keep_worst=0)
        sensitivity[n0] = rep.to_dict()["passed"]
    worst = max(deep_unif.values())
    detail = (
        f"all minima positive: {positive}; worst deep-grid max/min {worst:.3f} (< 4); "
        f"n0 sensitivity (res1, k=1, deep) {sensitivity}"
    )
    assert record(3, positive and uniform, detail)
    assert sensitivity[16.0] == "indeterminate"


def test_criterion_4_integrator_validity():
    v = checks.integrator_validity(modes=256, T=0.3).values
    fams = [k for k in v if k != "thresholds"]
    ok = all(
        v[f]["mean_drift"] < 1e-14
        and v[f]["l2_relative_drift"] < 1e-9
        and v[f]["forward_backward_h1"] < 1e-6
        and abs(v[f]["self_convergence_order"] - 4.0) <= 0.3
        for f in fams
    )
    detail = "; ".join(
        f"{f}: mean {v[f]['mean_drift']:.1e}, L2 {v[f]['l2_relative_drift']:.1e}, "
        f"fwd-bwd {v[f]['forward_backward_h1']:.1e}, order {v[f]['self_convergence_order']:.2f}"
        for f in fams
    )
    assert record(4, ok, detail)


def test_criterion_5_i2_drift():
    res = checks.i2_drift(delta=4.0)
    v = res.values
    corrected = v["orders"]["corrected"]
    ok = len(corrected) == 3 and all(o >= 3.5 for o in corrected)
    plateau = v["drift"]["printed"][-1]
    detail = (
        f"corrected-sign drift orders {[round(o, 2) for o in corrected]} (>= 3.5); "
        f"printed-sign drift plateaus at {plateau:.3e} relative (not conserved: {res.note != ''})"
    )
    assert record(5, ok, detail)


def test_criterion_6_deep_water_limit():
    v = checks.deep_limit(deltas=(2.0, 4.0, 8.0, 16.0, 32.0), modes=256, T=0.3).values
    e = v["errors_hsm1"]
    decreasing = all(b < a for a, b in zip(e, e[1:]))
    bound = all(x <= b for x, b in zip(v["linear_errors"], v["linear_bound"]))
    ok = decreasing and v["slope"] <= -0.8 and bound
    detail = f"errors {[f'{x:.2e}' for x in e]}, slope {v['slope']:.3f} (<= -0.8), linear bound holds: {bound}"
    assert record(6, ok, detail)


def test_criterion_7_shallow_water_limit():
    v = checks.shallow_limit(deltas=(0.2, 0.1, 0.05, 0.025), K=16, modes=256, T=0.3).values
    t, f = v["truncated"], v["untruncated"]
    t_dec = all(b < a for a, b in zip(t["errors_hsm1"], t["errors_hsm1"][1:]))
    f_dec = all(b < a for a, b in zip(f["errors_hsm1"], f["errors_hsm1"][1:]))
    ok = t_dec and abs(t["slope"] - 2.0) <= 0.3 and f_dec
    detail = (
        f"truncated K=16 slope {t['slope']:.3f} (2 +- 0.3), decreasing {t_dec}; "
        f"untruncated decreasing {f_dec} (slope {f['slope']:.3f}, no rate asserted)"
    )
    assert record(7, ok, detail)


def test_criterion_8_scaling_identity():
    v = checks.scaling_identity(modes=256, T=0.3).values
    gap = v["relative_h1_gap_delta_0.5"]
    ok = v["identity_at_delta_3"] and gap < 1e-6
    detail = f"delta=3 transform is the identity: {v['identity_at_delta_3']}; delta=0.5 relative H1 gap {gap:.1e} (< 1e-6)"
    assert record(8, ok, detail)


def test_criterion_9_varying_data():
    v = checks.varying_data(modes=256, T=0.3).values
    inv, const = v["inverse"], v["constant_control"]
    e = inv["errors_hsm1"]
    decreasing = all(b < a for a, b in zip(e, e[1:]))
    ok = decreasing and inv["slope"] <= -0.8 and not const["converging"]
    detail = (
        f"inverse-delta perturbation slope {inv['slope']:.3f} (<= -0.8), decreasing {decreasing}; "
        f"constant control flagged non-convergent: {not const['converging']} (slope {const['slope']:.3f})"
    )
    assert record(9, ok, detail)


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "check.json"
    cfg.write_text(json.dumps({"schema_version": 1, "command": "check"}))
    codes, outputs = [], []
    for name in ("first", "second"):
        out = tmp_path / name
        codes.append(main(["check", "--config", str(cfg), "--out", str(out) + "/"]))
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    same = outputs[0] == outputs[1] and len(outputs[0]) > 0
    detail = f"exit codes {codes}; {len(outputs[0])} output files byte-identical: {same}"
    assert record(10, same and codes == [EXIT_OK, EXIT_OK], detail)
