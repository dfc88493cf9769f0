"""Periodic grids, spectral fields, dyadic projectors and Sobolev-type norms.

Spectral coefficients use the normalization

    u_hat(m) = (1/M) * sum_j u(x_j) exp(-i xi_m x_j),

so they approximate Fourier coefficients independently of the grid size.
Fields are stored as the non-negative half spectrum (``numpy.fft.rfft``
layout, modes 0..M/2); the negative modes are implied by Hermitian symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``modes`` sample points on a period ``period``."""

    modes: int
    period: float = 2 * math.pi

    def __post_init__(self):
        m = self.modes
        if not isinstance(m, (int, np.integer)) or isinstance(m, bool):
            raise TypeError(f"modes must be an integer, got {m!r}")
        if m < 8 or (m & (m - 1)) != 0:
            raise ValueError(f"modes must be a power of two >= 8, got {m}")
        if not (self.period > 0 and math.isfinite(self.period)):
            raise ValueError(f"period must be positive, got {self.period}")
        object.__setattr__(self, "modes", int(m))
        object.__setattr__(self, "period", float(self.period))

    @property
    def nyquist(self) -> int:
        return self.modes // 2

    @property
    def index(self) -> np.ndarray:
        """Non-negative mode indices 0..M/2 (half-spectrum layout)."""
        return np.arange(self.nyquist + 1)

    @property
    def mode_indices(self) -> np.ndarray:
        """All represented mode indices -M/2+1..M/2."""
        return np.arange(-self.nyquist + 1, self.nyquist + 1)

    @property
    def base_wavenumber(self) -> float:
        return 2 * math.pi / self.period

    @property
    def xi(self) -> np.ndarray:
        """Physical wavenumbers of the half spectrum."""
        return self.base_wavenumber * self.index

    @property
    def xi_max(self) -> float:
        return self.base_wavenumber * self.nyquist

    def wavenumber(self, m):
        return self.base_wavenumber * np.asarray(m)

    @property
    def x(self) -> np.ndarray:
        return self.period * np.arange(self.modes) / self.modes

    @property
    def weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum entry in full-spectrum sums."""
        w = np.full(self.nyquist + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w


def make_grid(modes: int, period: float = 2 * math.pi) -> Grid:
    return Grid(modes, period)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real periodic function on ``grid``."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.nyquist + 1,):
            raise ValueError(
                f"expected {self.grid.nyquist + 1} half-spectrum coefficients, got shape {c.shape}"
            )
        # mean and Nyquist modes of a real field are real
        c[0] = c[0].real
        c[-1] = c[-1].real
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid) -> SpectralField:
        return cls(grid, np.zeros(grid.nyquist + 1, dtype=np.complex128))

    def coeff(self, m: int) -> complex:
        """Coefficient of mode ``m`` for any represented (possibly negative) index."""
        n = self.grid.nyquist
        if not -n < m <= n:
            raise IndexError(f"mode {m} not represented on a grid with M={self.grid.modes}")
        c = self.coeffs[abs(m)]
        return complex(c) if m >= 0 else complex(np.conj(c))

    def full_spectrum(self) -> np.ndarray:
        """Coefficients ordered by ``grid.mode_indices``."""
        c = self.coeffs
        return np.concatenate([np.conj(c[1:-1][::-1]), c])

    def replace(self, coeffs: np.ndarray) -> SpectralField:
        return SpectralField(self.grid, coeffs)

    def __add__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self, other)
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self, other)
        return self.replace(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        return self.replace(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def without_nyquist(self) -> SpectralField:
        c = self.coeffs.copy()
        c[-1] = 0.0
        return self.replace(c)


def _check_same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def to_spectral(samples, grid: Grid) -> SpectralField:
    x = np.asarray(samples, dtype=np.float64)
    if x.shape != (grid.modes,):
        raise ValueError(f"expected {grid.modes} samples, got shape {x.shape}")
    return SpectralField(grid, np.fft.rfft(x) / grid.modes)


def to_physical(field: SpectralField, n: int | None = None) -> np.ndarray:
    """Real samples of ``field`` on its grid, or on ``n >= M`` points (zero-padded)."""
    grid = field.grid
    n = grid.modes if n is None else n
    if n == grid.modes:
        return np.fft.irfft(field.coeffs, n=n) * n
    if n < grid.modes:
        raise ValueError("cannot sample on a coarser grid")
    # on the finer grid the base Nyquist entry c stands for c cos(M/2 x): a +-M/2
    # pair of weight c/2 each, and irfft counts the stored entry twice
    padded = np.zeros(n // 2 + 1, dtype=np.complex128)
    padded[: grid.nyquist] = field.coeffs[:-1]
    padded[grid.nyquist] = 0.5 * field.coeffs[-1].real
    return np.fft.irfft(padded, n=n) * n


def from_function(fn, grid: Grid) -> SpectralField:
    return to_spectral(fn(grid.x), grid)


# --- Littlewood-Paley blocks -------------------------------------------------


def _smootherstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6 * t - 15) + 10)


def eta(x) -> np.ndarray:
    """C^2 cutoff: 1 on [-1, 1], 0 outside [-2, 2]."""
    return 1.0 - _smootherstep(np.abs(np.asarray(x, dtype=float)) - 1.0)


def dyadic_blocks(grid: Grid) -> list[int]:
    """Dyadic block sizes 1, 2, 4, ..., M/2."""
    return [2**j for j in range(int(math.log2(grid.nyquist)) + 1)]


def bump(N: int, m) -> np.ndarray:
    """Smooth block weight phi_N at mode indices ``m`` (phi_1 = eta)."""
    m = np.asarray(m, dtype=float)
    if N == 1:
        return eta(m)
    return eta(m / N) - eta(2 * m / N)


def sharp_block_mask(N: int, m) -> np.ndarray:
    m = np.abs(np.asarray(m))
    if N == 1:
        return m <= 1
    return (m > N // 2) & (m <= N)


def _block_weights(grid: Grid, N: int, sharp: bool) -> np.ndarray:
    blocks = dyadic_blocks(grid)
    if N not in blocks:
        return np.zeros(grid.nyquist + 1)
    m = grid.index
    if sharp:
        return sharp_block_mask(N, m).astype(float)
    # sum over blocks telescopes to eta(m / (M/2)) = 1 on every represented mode
    return bump(N, m)


def project_dyadic(field: SpectralField, N: int, sharp: bool = False) -> SpectralField:
    """Littlewood-Paley piece P_N u; zero for blocks not represented on the grid."""
    return field.replace(field.coeffs * _block_weights(field.grid, N, sharp))


def project_leq(field: SpectralField, K: float) -> SpectralField:
    """Sharp low-pass cutoff keeping modes with |m| <= K."""
    if K < 0:
        raise ValueError(f"cutoff must be non-negative, got {K}")
    return field.replace(np.where(field.grid.index <= K, field.coeffs, 0.0))


# --- norms --------------------------------------------------------------------


def japanese_bracket(xi) -> np.ndarray:
    return np.sqrt(1.0 + np.asarray(xi, dtype=float) ** 2)


def l2_norm_sq(field: SpectralField) -> float:
    """sum_m |u_hat(m)|^2, i.e. the mean of u^2 over the period."""
    return float(np.sum(field.grid.weights * np.abs(field.coeffs) ** 2))


def sobolev_norm(field: SpectralField, s: float) -> float:
    g = field.grid
    w = g.weights * japanese_bracket(g.xi) ** (2 * s)
    return math.sqrt(float(np.sum(w * np.abs(field.coeffs) ** 2)))


@dataclass(frozen=True)
class FrequencyEnvelope:
    """Dyadic weights omega_N for N = 1, 2, 4, ... with growth constant kappa."""

    weights: tuple[float, ...]
    kappa: float

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise ValueError("envelope needs at least one weight")
        if self.kappa < 1:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")
        if any(v <= 0 for v in w):
            raise ValueError("envelope weights must be positive")
        tol = 1e-12
        for a, b in zip(w, w[1:]):
            if not (a <= b * (1 + tol) and b <= self.kappa * a * (1 + tol)):
                raise ValueError(f"envelope not {self.kappa}-tempered: {a} -> {b}")

    @property
    def blocks(self) -> list[int]:
        return [2**j for j in range(len(self.weights))]

    @classmethod
    def constant(cls, grid: Grid, value: float = 1.0) -> FrequencyEnvelope:
        return cls(tuple(value for _ in dyadic_blocks(grid)), 1.0)

    @classmethod
    def from_function(cls, grid: Grid, fn, kappa: float) -> FrequencyEnvelope:
        return cls(tuple(fn(N) for N in dyadic_blocks(grid)), kappa)


def envelope_norm(
    field: SpectralField, s: float, env: FrequencyEnvelope, sharp: bool = False
) -> float:
    """(sum_N omega_N^2 (1 v N)^{2s} ||P_N u||^2)^{1/2}.

    ``sharp=True`` replaces the smooth blocks with indicator blocks, which
    makes the omega = 1 case a block-constant version of the H^s norm.
    """
    blocks = dyadic_blocks(field.grid)
    if len(env.weights) < len(blocks):
        raise ValueError("envelope does not cover every dyadic block of the grid")
    total = 0.0
    for N, w in zip(blocks, env.weights):
        piece = project_dyadic(field, N, sharp=sharp)
        total += w * w * max(1, N) ** (2 * s) * l2_norm_sq(piece)
    return math.sqrt(total)


def regularize_envelope(env: FrequencyEnvelope, kappa_new: float) -> FrequencyEnvelope:
    """Slower-growing envelope omega~ <= omega with ratio bound ``kappa_new``.

    omega~_N = min_{N'} omega_{N'} * kappa_new^{|log2(N / N')|}.
    """
    if not 1 < kappa_new <= env.kappa:
        raise ValueError(f"kappa' must lie in (1, {env.kappa}], got {kappa_new}")
    w = np.asarray(env.weights)
    j = np.arange(len(w))
    dist = np.abs(j[:, None] - j[None, :])
    new = np.min(w[None, :] * kappa_new ** dist.astype(float), axis=1)
    return FrequencyEnvelope(tuple(new), kappa_new)


# --- random data ---------------------------------------------------------------


class BoxMullerStream:
    """Standard normal draws from the PCG64 64-bit stream via Box-Muller.

    Uniforms are built from the top 53 bits of each raw 64-bit word, so the
    sequence is reproducible from the documented PCG64 output alone.
    """

    def __init__(self, seed: int):
        self._bits = np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF)

    def uniforms(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(n)
        # (0, 1]: avoids log(0) in Box-Muller
        return ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log(u[:, 0]))
        theta = 2 * math.pi * u[:, 1]
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()[:n]


def random_hs_field(grid: Grid, s: float, amplitude: float, seed: int) -> SpectralField:
    """Random field with coefficients amplitude * <xi_m>^{-s-1} * g_m.

    g_m = (a_m + i b_m)/sqrt(2) with (a_m, b_m) drawn in mode order m = 1, 2, ...
    so a coarse grid sees exactly the low modes of a fine grid with the same seed.
    Mean and Nyquist modes are zero.
    """
    n = grid.nyquist - 1
    z = BoxMullerStream(seed).normals(2 * n).reshape(n, 2)
    g = (z[:, 0] + 1j * z[:, 1]) / math.sqrt(2)
    c = np.zeros(grid.nyquist + 1, dtype=np.complex128)
    c[1:-1] = amplitude * japanese_bracket(grid.xi[1:-1]) ** (-s - 1) * g
    return SpectralField(grid, c)
