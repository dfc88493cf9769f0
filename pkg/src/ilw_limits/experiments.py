"""Depth sweeps comparing ILW-family flows with their deep- and shallow-water limits.

Every sweep shares one grid, one time step and one snapshot schedule across
its members, so the reported errors compare flows rather than
discretizations.  The error of a member is the largest norm of the
difference with the limit flow over the snapshots, the discrete stand-in
for a C([0, T]; H^s) distance.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .evolution import SolverConfig, Trajectory, advisory_dt, evolve
from .grid import Grid, SpectralField, from_function, project_leq, random_hs_field, sobolev_norm
from .symbols import EquationSpec

REGIMES = ("deep", "shallow", "shallow-truncated", "deep-varying-data")
MIN_SNAPSHOTS = 50


# --- initial data ----------------------------------------------------------------


@dataclass(frozen=True)
class DataProfile:
    """cos(x) + 0.5 cos(2x + 1), optionally plus a random H^s tail.

    ``band_limit`` removes every mode above it after the tail is added.
    """

    tail_amplitude: float = 0.0
    tail_s: float = 1.0
    seed: int = 1
    band_limit: int | None = None

    def build(self, grid: Grid) -> SpectralField:
        xi0 = grid.base_wavenumber
        u = from_function(lambda x: np.cos(xi0 * x) + 0.5 * np.cos(2 * xi0 * x + 1.0), grid)
        if self.tail_amplitude:
            u = u + random_hs_field(grid, self.tail_s, self.tail_amplitude, self.seed)
        if self.band_limit is not None:
            u = project_leq(u, self.band_limit)
        return u.without_nyquist()


@dataclass(frozen=True)
class Perturbation:
    """Data family u_{delta,0} = u_{inf,0} + scale(delta) * amplitude * sin(mode x + phase).

    ``decay`` is "inverse" (scale 1/delta), "constant" (scale 1) or "none".
    """

    amplitude: float = 0.5
    mode: int = 3
    phase: float = 0.0
    decay: str = "inverse"

    def __post_init__(self):
        if self.decay not in ("inverse", "constant", "none"):
            raise ValueError(f"unknown perturbation decay {self.decay!r}")

    def scale(self, delta: float) -> float:
        if self.decay == "none" or self.amplitude == 0:
            return 0.0
        return 1.0 / delta if self.decay == "inverse" else 1.0

    def field(self, grid: Grid) -> SpectralField:
        xi = grid.base_wavenumber * self.mode
        return from_function(lambda x: self.amplitude * np.sin(xi * x + self.phase), grid)


# --- configuration / report --------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    regime: str
    deltas: tuple[float, ...]
    k: int = 2
    modes: int = 256
    period: float = 2 * math.pi
    T: float = 0.3
    s: float = 1.0
    dt: float | None = None
    linear_only: bool = False
    truncation: int | None = None
    data: DataProfile = field(default_factory=DataProfile)
    perturbation: Perturbation = field(default_factory=Perturbation)
    threads: int = 1

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown sweep regime {self.regime!r}")
        deltas = tuple(float(d) for d in self.deltas)
        object.__setattr__(self, "deltas", deltas)
        if len(deltas) < 4:
            raise ValueError(f"rate fitting needs at least 4 depths, got {len(deltas)}")
        if len(set(deltas)) != len(deltas):
            raise ValueError("depths must be distinct")
        if self.regime.startswith("deep"):
            if any(not 2 <= d < math.inf for d in deltas):
                raise ValueError("deep sweeps need 2 <= delta < inf")
        elif any(not 0 < d < 1 for d in deltas):
            raise ValueError("shallow sweeps need 0 < delta < 1")
        if self.regime == "shallow-truncated":
            if self.truncation is None:
                raise ValueError("shallow-truncated sweeps need a truncation K")
            if self.truncation * 3 > self.modes or self.truncation < 1:
                raise ValueError(
                    f"truncation K={self.truncation} exceeds M/3={self.modes // 3}: not alias-free"
                )
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def grid(self) -> Grid:
        return Grid(self.modes, self.period)

    @property
    def ordered_deltas(self) -> tuple[float, ...]:
        """Depths ordered toward the limit (increasing for deep, decreasing for shallow)."""
        return tuple(sorted(self.deltas, reverse=not self.regime.startswith("deep")))


@dataclass
class ConvergenceReport:
    regime: str
    deltas: list[float]
    errors_hsm1: list[float]
    errors_hs: list[float]
    s: float
    slope: float | None
    intercept: float | None
    residual: float | None
    slope_hs: float | None
    strictly_decreasing: bool
    constant: float
    extras: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    runtime: float = 0.0

    def to_dict(self, include_runtime: bool = False) -> dict:
        d = asdict(self)
        if not include_runtime:
            d.pop("runtime")
        return d

    def csv(self) -> str:
        lines = ["delta,error_hsm1,error_hs"]
        for d, a, b in zip(self.deltas, self.errors_hsm1, self.errors_hs):
            lines.append(f"{d!r},{a!r},{b!r}")
        return "\n".join(lines) + "\n"


def fit_rate(deltas, errors) -> tuple[float, float, float]:
    """Least-squares fit log E = slope log delta + intercept; residual is the max |log misfit|."""
    d = np.asarray(deltas, dtype=float)
    e = np.asarray(errors, dtype=float)
    if d.shape != e.shape or len(d) < 4:
        raise ValueError("rate fitting needs at least 4 (delta, error) pairs")
    if np.any(e <= 0):
        raise ValueError("zero error in a sweep: the comparison is degenerate (machine-zero difference)")
    x, y = np.log(d), np.log(e)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.max(np.abs(A @ np.array([slope, intercept]) - y)))
    return float(slope), float(intercept), residual


def fit_report_rate(report: ConvergenceReport) -> tuple[float, float, float]:
    return fit_rate(report.deltas, report.errors_hsm1)


# --- scaling transform ---------------------------------------------------------------


def scaling_amplitude(delta: float, k: int) -> float:
    """Amplitude a with a^{k-1} = 3/delta (equals 3 delta^{1/(1-k)} when k = 2)."""
    return (3.0 / delta) ** (1.0 / (k - 1))


def apply_scaling_transform(
    traj: Trajectory, delta: float, k: int, times=None, rtol: float = 1e-9
) -> Trajectory:
    """v(t) = a u(3t/delta) for a trajectory u of the unscaled equation at depth delta.

    With ``times`` given, each pulled-back time 3t/delta must be a snapshot of
    ``traj``; otherwise every snapshot is mapped.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    a = scaling_amplitude(delta, k)
    dilation = 3.0 / delta
    if times is None:
        return traj.scaled(a, dilation)
    fields = []
    for t in times:
        try:
            fields.append(traj.at(dilation * t, rtol) * a)
        except KeyError:
            raise KeyError(f"missing pulled-back snapshot at t={dilation * t} for v-time {t}") from None
    return Trajectory(list(map(float, times)), fields, {})


def scaling_consistency(
    v0: SpectralField,
    delta: float,
    k: int,
    T: float,
    dt: float,
    stride: int = 1,
) -> float:
    """Relative H^1 gap between a direct scaled-gILW run and the transformed unscaled run.

    The unscaled run uses step 3 dt / delta so both routes sample the same
    instants.
    """
    grid = v0.grid
    a = scaling_amplitude(delta, k)
    dil = 3.0 / delta
    direct = evolve(
        v0, SolverConfig(EquationSpec.scaled_ilw(delta, k), grid, dt, T, snapshot_stride=stride)
    )
    unscaled = evolve(
        v0 * (1.0 / a),
        SolverConfig(EquationSpec.unscaled_ilw(delta, k), grid, dil * dt, dil * T, snapshot_stride=stride),
    )
    mapped = apply_scaling_transform(unscaled, delta, k, times=direct.times, rtol=1e-9)
    gap = max(sobolev_norm(x - y, 1.0) for x, y in zip(direct.fields, mapped.fields))
    scale = max(sobolev_norm(x, 1.0) for x in direct.fields)
    return gap / scale


# --- sweeps --------------------------------------------------------------------------


class SweepAborted(RuntimeError):
    def __init__(self, delta, failure_time):
        super().__init__(f"blow-up at delta={delta}, t={failure_time}")
        self.delta = delta
        self.failure_time = failure_time


def _solver(spec: EquationSpec, cfg: SweepConfig, dt: float) -> SolverConfig:
    n_steps = max(1, math.ceil(cfg.T / dt - 1e-9))
    stride = max(1, n_steps // MIN_SNAPSHOTS)
    return SolverConfig(
        spec=spec,
        grid=cfg.grid,
        dt=dt,
        T=cfg.T,
        snapshot_stride=stride,
        linear_only=cfg.linear_only,
        hs_order=cfg.s,
        truncation=cfg.truncation,
    )


def _run(spec, u0, cfg, dt, label) -> Trajectory:
    traj = evolve(u0, _solver(spec, cfg, dt))
    if traj.blowup:
        raise SweepAborted(label, traj.failure_time)
    return traj


def _distance(a: Trajectory, b: Trajectory, s: float) -> float:
    if len(a.times) != len(b.times):
        raise ValueError("trajectories sampled on different schedules")
    return max(sobolev_norm(x - y, s) for x, y in zip(a.fields, b.fields))


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _member_spec(regime: str, delta: float, k: int) -> EquationSpec:
    if regime.startswith("deep"):
        return EquationSpec.ilw(delta, k)
    return EquationSpec.scaled_ilw(delta, k)


def _limit_spec(regime: str, k: int) -> EquationSpec:
    return EquationSpec.bo(k) if regime.startswith("deep") else EquationSpec.kdv(k)


def _finish(cfg, deltas, e_lo, e_hs, extras, started) -> ConvergenceReport:
    try:
        slope, intercept, residual = fit_rate(deltas, e_lo)
    except ValueError as exc:
        slope = intercept = residual = None
        extras = {**extras, "fit_error": str(exc)}
    try:
        slope_hs = fit_rate(deltas, e_hs)[0]
    except ValueError:
        slope_hs = None
    decreasing = all(b < a for a, b in zip(e_lo, e_lo[1:]))
    if cfg.regime.startswith("deep"):
        constant = max(e * d for d, e in zip(deltas, e_lo))
    else:
        constant = max(e / d**2 for d, e in zip(deltas, e_lo))
    return ConvergenceReport(
        regime=cfg.regime,
        deltas=list(deltas),
        errors_hsm1=list(e_lo),
        errors_hs=list(e_hs),
        s=cfg.s,
        slope=slope,
        intercept=intercept,
        residual=residual,
        slope_hs=slope_hs,
        strictly_decreasing=decreasing,
        constant=constant,
        extras=extras,
        config=config_echo(cfg),
        runtime=time.perf_counter() - started,
    )


def config_echo(cfg: SweepConfig) -> dict:
    d = asdict(cfg)
    d["deltas"] = list(cfg.deltas)
    return d


def _fixed_data_sweep(cfg: SweepConfig) -> ConvergenceReport:
    started = time.perf_counter()
    grid = cfg.grid
    u0 = cfg.data.build(grid)
    if cfg.truncation is not None:
        u0 = project_leq(u0, cfg.truncation)
    dt = cfg.dt or advisory_dt(grid, u0, cfg.k)
    deltas = cfg.ordered_deltas
    limit = _run(_limit_spec(cfg.regime, cfg.k), u0, cfg, dt, "limit")
    runs = _map(lambda d: _run(_member_spec(cfg.regime, d, cfg.k), u0, cfg, dt, d), deltas, cfg.threads)
    e_lo = [_distance(r, limit, cfg.s - 1) for r in runs]
    e_hs = [_distance(r, limit, cfg.s) for r in runs]
    extras: dict = {"dt": dt, "snapshots": len(limit.times)}
    if cfg.regime == "deep" and cfg.linear_only:
        l2 = sobolev_norm(u0, 0.0)
        bound = [cfg.T * grid.xi_max * (2.0 / d) * l2 for d in deltas]
        extras["symbol_gap_bound"] = bound
        extras["symbol_gap_bound_holds"] = all(e <= b for e, b in zip(e_lo, bound))
    if cfg.regime == "shallow":
        d_max = max(deltas)
        extras["scaling_consistency"] = {
            "delta": d_max,
            "relative_h1_gap": scaling_consistency(u0, d_max, cfg.k, cfg.T, dt, _solver(
                _member_spec(cfg.regime, d_max, cfg.k), cfg, dt).snapshot_stride),
        }
    if cfg.regime == "shallow-truncated":
        d_max = max(deltas)
        full_u0 = cfg.data.build(grid)
        full = _run(
            _member_spec(cfg.regime, d_max, cfg.k), full_u0, replace(cfg, regime="shallow", truncation=None), dt, d_max
        )
        trunc = runs[deltas.index(d_max)]
        extras["truncation_gap"] = {
            "delta": d_max,
            "K": cfg.truncation,
            "hs": _distance(full, trunc, cfg.s),
        }
    return _finish(cfg, deltas, e_lo, e_hs, extras, started)


def deep_water_sweep(cfg: SweepConfig) -> ConvergenceReport:
    """gILW at each delta against gBO from the same data."""
    if cfg.regime != "deep":
        cfg = replace(cfg, regime="deep")
    return _fixed_data_sweep(cfg)


def shallow_water_sweep(cfg: SweepConfig) -> ConvergenceReport:
    """Scaled gILW at each delta against gKdV from the same data."""
    if cfg.regime != "shallow":
        cfg = replace(cfg, regime="shallow", truncation=None)
    return _fixed_data_sweep(cfg)


def truncated_shallow_sweep(cfg: SweepConfig) -> ConvergenceReport:
    """Scaled gILW against gKdV with both data and nonlinearity cut to |m| <= K."""
    if cfg.regime != "shallow-truncated":
        cfg = replace(cfg, regime="shallow-truncated")
    return _fixed_data_sweep(cfg)


def varying_data_sweep(cfg: SweepConfig, slope_floor: float = 0.5) -> ConvergenceReport:
    """gILW from u_{delta,0} against gBO from u_{inf,0}.

    ``converging`` in the report extras requires strictly decreasing errors
    and a fitted slope at or below -slope_floor.
    """
    started = time.perf_counter()
    if cfg.regime != "deep-varying-data":
        cfg = replace(cfg, regime="deep-varying-data")
    grid = cfg.grid
    base = cfg.data.build(grid)
    pert = cfg.perturbation.field(grid)
    deltas = cfg.ordered_deltas
    data = {d: (base + pert * cfg.perturbation.scale(d)).without_nyquist() for d in deltas}
    dt = cfg.dt or min(advisory_dt(grid, u, cfg.k) for u in [base, *data.values()])
    limit = _run(EquationSpec.bo(cfg.k), base, cfg, dt, "limit")
    runs = _map(lambda d: _run(EquationSpec.ilw(d, cfg.k), data[d], cfg, dt, d), deltas, cfg.threads)
    e_lo = [_distance(r, limit, cfg.s - 1) for r in runs]
    e_hs = [_distance(r, limit, cfg.s) for r in runs]
    data_gap = [sobolev_norm(data[d] - base, cfg.s) for d in deltas]
    report = _finish(cfg, deltas, e_lo, e_hs, {"dt": dt, "data_gap_hs": data_gap}, started)
    report.extras["converging"] = bool(
        report.strictly_decreasing and report.slope is not None and report.slope <= -slope_floor
    )
    return report


def run_sweep(cfg: SweepConfig) -> ConvergenceReport:
    return {
        "deep": deep_water_sweep,
        "shallow": shallow_water_sweep,
        "shallow-truncated": truncated_shallow_sweep,
        "deep-varying-data": varying_data_sweep,
    }[cfg.regime](cfg)
