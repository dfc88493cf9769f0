"""Integrating-factor RK4 time stepping for the ILW family.

The state is the half spectrum u_hat(m).  Writing E(t) = exp(i t p(xi_m)),
the variable w = E(-t) u_hat obeys dw/dt = E(-t) N(E(t) w) with

    N(u)_hat(m) = i xi_m (u^k)_hat(m),

and classical RK4 is applied to w.  The linear part is exact and unitary.
Norm diagnostics use the mean-square normalization of :mod:`ilw_limits.grid`
(sum over modes of |u_hat(m)|^2, no period factor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Grid, SpectralField, l2_norm_sq, sobolev_norm, to_physical
from .symbols import EquationSpec, SymbolTable, build_symbol_table, k_delta

CFL_SAFETY = 0.5
BLOWUP_GROWTH = 1e6


class BlowUpError(RuntimeError):
    """Raised by helpers that need a healthy trajectory."""


def default_padding(k: int) -> int:
    return math.ceil((k + 1) / 2)


def advisory_dt(grid: Grid, u0: SpectralField, k: int = 2, safety: float = CFL_SAFETY) -> float:
    """safety / (xi_max (1 + k max|u0|^{k-1})).

    k u^{k-1} is the advection speed carried by d/dx(u^k).  For k = 2 this is
    below safety / (xi_max (1 + max|u0|)).
    """
    umax = float(np.max(np.abs(to_physical(u0))))
    return safety / (grid.xi_max * (1.0 + k * umax ** (k - 1)))


@dataclass(frozen=True)
class SolverConfig:
    spec: EquationSpec
    grid: Grid
    dt: float
    T: float
    dealias: int | None = None
    snapshot_stride: int = 1
    linear_only: bool = False
    hs_order: float = 1.0
    truncation: float | None = None

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.T >= 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be non-negative, got {self.T}")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.dealias is not None and self.dealias < 1:
            raise ValueError("dealias padding factor must be >= 1")
        if self.truncation is not None and not 0 <= self.truncation < self.grid.nyquist:
            raise ValueError(f"truncation must lie in [0, M/2), got {self.truncation}")

    @property
    def padding(self) -> int:
        return self.dealias if self.dealias is not None else default_padding(self.spec.k)

    @property
    def n_steps(self) -> int:
        if self.T == 0:
            return 0
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @classmethod
    def with_advisory_dt(cls, spec, grid, u0, T, safety=CFL_SAFETY, **kw) -> SolverConfig:
        return cls(spec=spec, grid=grid, dt=advisory_dt(grid, u0, spec.k, safety), T=T, **kw)


def linear_propagator(table: SymbolTable, t: float) -> np.ndarray:
    """Per-mode phases exp(i t p(xi_m)) on the half spectrum."""
    return np.exp(1j * t * table.p)


class _Rhs:
    """Dealiased nonlinearity i xi (u^k)_hat on raw half-spectrum arrays."""

    def __init__(self, grid: Grid, k: int, padding: int, truncation: float | None = None):
        self.M = grid.modes
        self.half = grid.nyquist
        self.n = padding * grid.modes
        self.k = k
        self.ixi = 1j * grid.xi
        self.ixi[-1] = 0.0
        if truncation is not None:
            self.ixi[grid.index > truncation] = 0.0

    def __call__(self, c: np.ndarray) -> np.ndarray:
        n = self.n
        padded = np.zeros(n // 2 + 1, dtype=np.complex128)
        padded[: self.half] = c[: self.half]
        u = np.fft.irfft(padded, n=n) * n
        power = np.fft.rfft(u**self.k) / n
        return self.ixi * power[: self.half + 1]


def nonlinear_term(field: SpectralField, k: int, padding: int | None = None) -> SpectralField:
    """i xi_m (u^k)_hat(m), with u^k formed on a grid padded by ``padding``.

    The Nyquist mode of the input is ignored and that of the output is zero.
    """
    padding = default_padding(k) if padding is None else padding
    return field.replace(_Rhs(field.grid, k, padding)(field.coeffs))


def _ifrk4(c: np.ndarray, h: float, p: np.ndarray, rhs) -> np.ndarray:
    e_half = np.exp(0.5j * h * p)
    e_full = e_half * e_half
    if rhs is None:
        return e_full * c
    a = rhs(c)
    b = rhs(e_half * (c + 0.5 * h * a))
    cc = rhs(e_half * c + 0.5 * h * b)
    d = rhs(e_full * c + h * e_half * cc)
    return e_full * c + (h / 6.0) * (e_full * a + 2.0 * e_half * (b + cc) + d)


def step_ifrk4(
    state: SpectralField,
    t: float,
    dt: float,
    table: SymbolTable,
    spec: EquationSpec | None = None,
    padding: int | None = None,
    linear_only: bool = False,
    truncation: float | None = None,
) -> SpectralField:
    """One IF-RK4 step of size dt (negative dt integrates backward).

    The equation is autonomous, so ``t`` only labels the step.
    """
    spec = spec or table.spec
    rhs = None
    if not linear_only:
        rhs = _Rhs(state.grid, spec.k, padding or default_padding(spec.k), truncation)
    out = _ifrk4(state.coeffs, dt, table.p, rhs)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"non-finite coefficients after step at t={t + dt}")
    return state.replace(out)


@dataclass
class Trajectory:
    times: list[float]
    fields: list[SpectralField]
    diagnostics: dict[str, list[float]] = field(default_factory=dict)
    blowup: bool = False
    failure_time: float | None = None

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> SpectralField:
        return self.fields[-1]

    def at(self, t: float, rtol: float = 1e-9) -> SpectralField:
        """Snapshot at time ``t`` (matched to relative tolerance)."""
        times = np.asarray(self.times)
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > rtol * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.fields[i]

    def scaled(self, amplitude: float, time_factor: float) -> Trajectory:
        """Trajectory of amplitude * u(t * time_factor) expressed on rescaled times."""
        return Trajectory(
            times=[t / time_factor for t in self.times],
            fields=[f * amplitude for f in self.fields],
            diagnostics={},
            blowup=self.blowup,
            failure_time=None if self.failure_time is None else self.failure_time / time_factor,
        )


def _diagnostics(c: np.ndarray, grid: Grid, config: SolverConfig) -> dict[str, float]:
    f = SpectralField(grid, c)
    out = {
        "mean": float(c[0].real),
        "l2": math.sqrt(l2_norm_sq(f)),
        "hs": sobolev_norm(f, config.hs_order),
    }
    if config.spec.family in ("gILW-deep", "gILW") and config.spec.k == 2:
        out["i2"] = invariant_i2(f, config.spec.delta)
        out["i2_corrected"] = invariant_i2(f, config.spec.delta, "corrected")
    return out


def _prepare(u0: SpectralField, config: SolverConfig) -> np.ndarray:
    if u0.grid != config.grid:
        raise ValueError("initial data grid differs from the solver grid")
    c = u0.coeffs.copy()
    # the Nyquist mode has no real partner for odd multipliers
    c[-1] = 0.0
    if config.truncation is not None:
        c[config.grid.index > config.truncation] = 0.0
    return c


def evolve(
    u0: SpectralField,
    config: SolverConfig,
    table: SymbolTable | None = None,
) -> Trajectory:
    """Fixed-step IF-RK4 march from 0 to T with snapshots every ``snapshot_stride`` steps.

    The last step is shortened to land exactly on T.  On blow-up (non-finite
    coefficients, or L2 growth by more than 1e6) the trajectory keeps the
    last healthy snapshot and records the failure time.
    """
    grid = config.grid
    table = table or build_symbol_table(config.spec, grid)
    rhs = None
    if not config.linear_only:
        rhs = _Rhs(grid, config.spec.k, config.padding, config.truncation)
    c = _prepare(u0, config)
    l2_0 = l2_norm_sq(SpectralField(grid, c))
    traj = Trajectory([0.0], [SpectralField(grid, c)], {})
    for key, v in _diagnostics(c, grid, config).items():
        traj.diagnostics[key] = [v]
    n = config.n_steps
    t = 0.0
    for j in range(1, n + 1):
        h = config.dt if j < n else config.T - (n - 1) * config.dt
        new = _ifrk4(c, h, table.p, rhs)
        t_new = config.T if j == n else j * config.dt
        with np.errstate(over="ignore", invalid="ignore"):
            # overflow here is a blow-up, reported below
            l2 = float(np.sum(grid.weights * np.abs(new) ** 2)) if np.all(np.isfinite(new)) else math.inf
        if not math.isfinite(l2) or l2 > BLOWUP_GROWTH**2 * max(l2_0, 1e-300):
            traj.blowup = True
            traj.failure_time = t_new
            if traj.times[-1] != t:
                traj.times.append(t)
                traj.fields.append(SpectralField(grid, c))
                for key, v in _diagnostics(c, grid, config).items():
                    traj.diagnostics[key].append(v)
            break
        c, t = new, t_new
        if j % config.snapshot_stride == 0 or j == n:
            traj.times.append(t)
            traj.fields.append(SpectralField(grid, c))
            for key, v in _diagnostics(c, grid, config).items():
                traj.diagnostics[key].append(v)
    return traj


def integrate(
    u0: SpectralField,
    config: SolverConfig,
    backward: bool = False,
    table: SymbolTable | None = None,
) -> SpectralField:
    """Final state after time T (forward, or backward with negated steps)."""
    traj = evolve(u0, replace(config, snapshot_stride=max(1, config.n_steps)), table) if not backward else None
    if traj is not None:
        if traj.blowup:
            raise BlowUpError(f"blow-up at t={traj.failure_time}")
        return traj.final
    table = table or build_symbol_table(config.spec, config.grid)
    rhs = None
    if not config.linear_only:
        rhs = _Rhs(config.grid, config.spec.k, config.padding, config.truncation)
    c = _prepare(u0, config)
    n = config.n_steps
    for j in range(1, n + 1):
        h = config.dt if j < n else config.T - (n - 1) * config.dt
        c = _ifrk4(c, -h, table.p, rhs)
        if not np.all(np.isfinite(c)):
            raise BlowUpError("non-finite coefficients in backward integration")
    return SpectralField(config.grid, c)


def invariant_i2(field: SpectralField, delta: float, variant: str = "printed") -> float:
    """H^1-level ILW quantity

        int (u^4/4 + 3/4 u^2 Gu_x + u_x^2/8 + 3/8 (Gu_x)^2 + sigma 3/(8 delta) u Gu_x) dx

    where G d/dx has the real symbol K_delta(xi).  ``variant="printed"`` uses
    sigma = +1; ``variant="corrected"`` uses sigma = -1, which is the sign that
    is conserved by d_t u - G u_xx = (u^2)_x.  Quadratic terms use Parseval;
    the cubic and quartic terms are averaged on a 3x padded grid, which is
    exact for band-limited data.
    """
    if not delta > 0:
        raise ValueError(f"I2 needs a positive depth, got {delta}")
    sigma = {"printed": 1.0, "corrected": -1.0}[variant]
    grid = field.grid
    c = field.coeffs.copy()
    c[-1] = 0.0
    L = grid.period
    w = grid.weights
    kk = np.asarray(k_delta(delta, grid.xi))
    a2 = np.abs(c) ** 2
    ux2 = L * float(np.sum(w * grid.xi**2 * a2))
    g2 = L * float(np.sum(w * kk**2 * a2))
    ug = L * float(np.sum(w * kk * a2))
    n = 3 * grid.modes
    u = to_physical(SpectralField(grid, c), n)
    g = to_physical(SpectralField(grid, kk * c), n)
    quart = L * float(np.mean(u**4))
    cubic = L * float(np.mean(u * u * g))
    tail = 0.0 if math.isinf(delta) else sigma * 3.0 / (8.0 * delta) * ug
    return 0.25 * quart + 0.75 * cubic + 0.125 * ux2 + 0.375 * g2 + tail
