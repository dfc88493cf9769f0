"""Dispersion and perturbation symbols of the ILW family.

Conventions (all symbols are functions of a real wavenumber xi):

    K_delta(xi) = xi coth(delta xi) - 1/delta        (K_delta(0) = 0)
    L_delta(xi) = (3/delta) K_delta(xi)
    q_delta(xi) = |xi| - K_delta(xi)
    p(xi)       = xi K_delta(xi)        deep-form gILW
                = xi |xi|               gBO
                = xi L_delta(xi)        scaled gILW
                = xi^3                  gKdV

Each equation reads d/dt u_hat(m) = i p(xi_m) u_hat(m) + i xi_m (u^k)^(m).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Grid

COTH_SERIES_BELOW = 1e-4
COTH_SATURATE_ABOVE = 20.0
# |x| below which x coth x - 1 - x^2/3 is summed from its Taylor series
_H_SERIES_BELOW = 1.0


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def coth_stable(x):
    """coth(x) with a Laurent branch near 0 and exact saturation for |x| > 20."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise ValueError("coth is undefined at 0")
    ax = np.abs(x)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        mid = 1.0 / np.tanh(x)
        small = 1.0 / x + x / 3.0 - x**3 / 45.0
    out = np.where(ax < COTH_SERIES_BELOW, small, mid)
    out = np.where(ax > COTH_SATURATE_ABOVE, np.sign(x), out)
    return _out(out)


def _check_delta(delta: float) -> None:
    if not delta > 0:
        raise ValueError(f"depth parameter must be positive, got {delta}")


def _k_abs(delta: float, a: np.ndarray) -> np.ndarray:
    """K_delta on |xi| = a >= 0.

    K = (x coth x - 1) / delta with x = delta a.  For x < 1 this is
    (x^2/3 - R(x)) / delta with R = 1 + x^2/3 - x coth x from its Taylor
    series, which avoids cancelling xi coth(delta xi) against 1/delta.
    """
    x = delta * a
    out = np.zeros_like(a)
    small = (x > 0) & (x < _H_SERIES_BELOW)
    big = x >= _H_SERIES_BELOW
    xs = x[small]
    out[small] = (xs * xs / 3.0 - _xcothx_remainder(xs)) / delta
    out[big] = a[big] * np.asarray(coth_stable(x[big])) - 1.0 / delta
    return out


def k_delta(delta: float, xi):
    """K_delta(xi) = xi coth(delta xi) - 1/delta, even in xi, zero at xi = 0."""
    _check_delta(delta)
    a = np.abs(np.asarray(xi, dtype=float))
    if math.isinf(delta):
        return _out(a)
    return _out(_k_abs(delta, np.atleast_1d(a)).reshape(a.shape))


def l_delta(delta: float, xi):
    """L_delta(xi) = (3/delta) K_delta(xi); tends to xi^2 as delta -> 0."""
    _check_delta(delta)
    return _out(3.0 / delta * np.asarray(k_delta(delta, xi)))


def q_delta(delta: float, xi):
    """Deep-water perturbation symbol |xi| - K_delta(xi), valued in [0, 2/delta]."""
    if not delta >= 2:
        raise ValueError(f"q_delta is only defined in the deep regime delta >= 2, got {delta}")
    a = np.abs(np.asarray(xi, dtype=float))
    if math.isinf(delta):
        return _out(np.zeros_like(a))
    return _out(a - np.asarray(k_delta(delta, a)))


# 2 zeta(3) / (2 pi)^3: Euler-Maclaurin remainder constant after the f' term
_EM3 = 2 * 1.2020569031595942 / (2 * math.pi) ** 3


def _h_term(num: float, b2: float, k):
    k2pi2 = math.pi**2 * k * k
    return num / (k2pi2 * (k2pi2 + b2))


def _h_term_derivative(num: float, b2: float, k: float) -> float:
    d = math.pi**2 * k * k + b2
    return -(num / math.pi**2) * (2.0 / (k**3 * d) + 2.0 * math.pi**2 / (k * d * d))


def _h_tail_integral(num: float, b: float, a: float) -> float:
    """Integral of num / (pi^2 x^2 (pi^2 x^2 + b^2)) over [a, inf)."""
    z = b / (math.pi * a)
    if z < 1e-2:
        # 1 - atan(z)/z = z^2/3 - z^4/5 + z^6/7 - ...; leading term num/(3 pi^4 a^3)
        z2 = z * z
        return num / (3.0 * math.pi**4 * a**3) * (1 - z2 * (3 / 5 - z2 * (3 / 7 - z2 / 3)))
    return num / (math.pi**2 * a * b * b) * (1.0 - math.atan(z) / z)


def _h_plan(delta: float, xi: float, tol: float | None):
    """(k0, use_euler_maclaurin, tol) for a positive xi."""
    num = 6.0 * delta**3 * xi * xi
    b2 = (delta * xi) ** 2
    if tol is None:
        tol = 1e-14 * _h_term(num, b2, 1.0)
    if not tol > 0:
        raise ValueError("tol must be positive")
    # plain truncation: tail <= (num / pi^4) / (3 k0^3)
    k_plain = max(1, math.ceil((num / (3.0 * math.pi**4 * tol)) ** (1.0 / 3.0)))
    # Euler-Maclaurin from a = k0 + 1:
    # |R| <= EM3 * (num / b^2) * (6 / (pi^2 a^4) + 18 pi^2 / (pi^2 a^2 + b^2)^2)
    #     <= EM3 * (num / b^2) * (24 / pi^2) / a^4
    k_em = max(1, math.ceil((_EM3 * num / b2 * 24.0 / math.pi**2 / tol) ** 0.25))
    if k_em < k_plain:
        return k_em, True, tol
    return k_plain, False, tol


def h_series(delta: float, xi: float, tol: float | None = None) -> float:
    """Remainder h(xi, delta) from the Mittag-Leffler expansion of coth.

    z coth z = 1 + sum_k 2 z^2 / (z^2 + k^2 pi^2) gives, with z = delta xi,

        h(xi, delta) = sum_k 6 delta^3 xi^2 / (k^2 pi^2 (k^2 pi^2 + delta^2 xi^2)),

    normalized so that xi coth(delta xi) = 1/delta + delta xi^2/3 - xi^2 h / 3.

    The first k0 terms are summed explicitly.  The tail is either dropped,
    with the bound (6 delta^3 xi^2 / pi^4) / (3 k0^3), or replaced by its
    Euler-Maclaurin estimate (integral + f/2 - f'/12 at k0 + 1) whose
    remainder is bounded by 2 zeta(3) / (2 pi)^3 times the integral of |f'''|.
    Whichever route needs fewer terms to push its bound below ``tol`` is
    used.  The default tolerance is 1e-14 times the first term, which is a
    lower bound for h.
    """
    _check_delta(delta)
    xi = abs(float(xi))
    if xi == 0.0:
        return 0.0
    num = 6.0 * delta**3 * xi * xi
    b2 = (delta * xi) ** 2
    k0, em, tol = _h_plan(delta, xi, tol)
    terms = _h_term(num, b2, np.arange(1, k0 + 1, dtype=float))
    total = math.fsum(terms[::-1].tolist())
    if em:
        a = k0 + 1.0
        total += (
            _h_tail_integral(num, math.sqrt(b2), a)
            + 0.5 * _h_term(num, b2, a)
            - _h_term_derivative(num, b2, a) / 12.0
        )
    return total


def h_series_terms(delta: float, xi: float, tol: float | None = None) -> int:
    """Number of explicitly summed terms h_series uses for the given tolerance."""
    if float(xi) == 0.0:
        return 0
    return _h_plan(delta, abs(float(xi)), tol)[0]


def _xcothx_remainder(x: np.ndarray) -> np.ndarray:
    """1 + x^2/3 - x coth x, via the Bernoulli series for |x| < 1."""
    out = np.empty_like(x)
    small = np.abs(x) < _H_SERIES_BELOW
    xs = x[small]
    # x coth x = sum_n 2^{2n} B_{2n} x^{2n} / (2n)!; subtract the first two terms
    acc = np.zeros_like(xs)
    x2 = xs * xs
    power = x2 * x2
    for coef in _XCOTH_TAYLOR[2:]:
        acc -= coef * power
        power = power * x2
    out[small] = acc
    xb = x[~small]
    out[~small] = 1.0 + xb * xb / 3.0 - xb * np.asarray(coth_stable(xb))
    return out


def _xcoth_taylor_coefficients(n_terms: int) -> list[float]:
    from fractions import Fraction

    # Bernoulli numbers B_0..B_{2n} by the Akiyama-Tanigawa recurrence
    def bernoulli(n):
        a = [Fraction(0)] * (n + 1)
        out = []
        for m in range(n + 1):
            a[m] = Fraction(1, m + 1)
            for j in range(m, 0, -1):
                a[j - 1] = j * (a[j - 1] - a[j])
            out.append(a[0])
        return out

    b = bernoulli(2 * n_terms)
    coefs = []
    for n in range(n_terms):
        coefs.append(float(Fraction(4**n) * b[2 * n] / math.factorial(2 * n)))
    return coefs


# x coth x Taylor coefficients: 1, 1/3, -1/45, 2/945, ...; 24 terms reach 1e-20 at |x| = 1
_XCOTH_TAYLOR = _xcoth_taylor_coefficients(24)


def h_closed(delta: float, xi):
    """h(xi, delta) from the coth identity n coth(delta n) = 1/delta + delta n^2/3 - n^2 h/3.

    h = (3 delta / x^2)(1 + x^2/3 - x coth x) with x = delta xi; the bracket is
    taken from its Taylor series when |x| < 1 to avoid cancellation.
    """
    _check_delta(delta)
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    x = delta * xi_arr
    out = np.zeros_like(x)
    nz = x != 0
    out[nz] = 3.0 * delta * _xcothx_remainder(x[nz]) / x[nz] ** 2
    return _out(out.reshape(np.shape(xi)))


def dk_delta(delta: float, xi):
    """d/dxi K_delta = coth(x) - x csch^2(x), x = delta xi (odd in xi).

    For x < 1 the derivative of the x coth x Taylor series is summed instead.
    """
    xi = np.asarray(xi, dtype=float)
    if math.isinf(delta):
        return _out(np.sign(xi))
    x = np.atleast_1d(delta * np.abs(xi))
    out = np.empty_like(x)
    small = x < _H_SERIES_BELOW
    xs = x[small]
    acc = np.zeros_like(xs)
    power = xs.copy()
    for n, coef in enumerate(_XCOTH_TAYLOR[1:], start=1):
        acc += 2 * n * coef * power
        power = power * xs * xs
    out[small] = acc
    xb = x[~small]
    csch2 = np.zeros_like(xb)
    finite = xb < 350
    csch2[finite] = 1.0 / np.sinh(xb[finite]) ** 2
    out[~small] = np.asarray(coth_stable(xb)) - xb * csch2
    return _out(out.reshape(xi.shape) * np.sign(xi))


# --- depth / equation descriptors ------------------------------------------------

DEPTH_KINDS = ("deep", "infinite", "shallow", "kdv", "finite")
FAMILIES = ("gILW-deep", "gBO", "scaled-gILW", "gKdV", "gILW")
_FAMILY_DEPTH = {
    "gILW-deep": "deep",
    "gBO": "infinite",
    "scaled-gILW": "shallow",
    "gKdV": "kdv",
    "gILW": "finite",
}


@dataclass(frozen=True)
class DepthParam:
    """Depth regime: deep (delta >= 2), infinite, shallow (0 < delta < 1), KdV limit.

    ``finite`` is any delta > 0 for the unscaled equation, used when pulling a
    shallow run back through the scaling transform.
    """

    kind: str
    delta: float = math.inf

    def __post_init__(self):
        if self.kind not in DEPTH_KINDS:
            raise ValueError(f"unknown depth kind {self.kind!r}")
        d = float(self.delta)
        if self.kind == "deep" and not (2 <= d < math.inf):
            raise ValueError(f"deep regime requires 2 <= delta < inf, got {d}")
        if self.kind == "shallow" and not (0 < d < 1):
            raise ValueError(f"shallow regime requires 0 < delta < 1, got {d}")
        if self.kind == "finite" and not (0 < d < math.inf):
            raise ValueError(f"finite depth requires 0 < delta < inf, got {d}")
        if self.kind == "infinite":
            d = math.inf
        if self.kind == "kdv":
            d = 0.0
        object.__setattr__(self, "delta", d)

    @classmethod
    def deep(cls, delta: float) -> DepthParam:
        return cls("deep", delta)

    @classmethod
    def infinite(cls) -> DepthParam:
        return cls("infinite")

    @classmethod
    def shallow(cls, delta: float) -> DepthParam:
        return cls("shallow", delta)

    @classmethod
    def kdv_limit(cls) -> DepthParam:
        return cls("kdv", 0.0)

    @classmethod
    def finite(cls, delta: float) -> DepthParam:
        return cls("finite", delta)


@dataclass(frozen=True)
class EquationSpec:
    family: str
    k: int = 2
    depth: DepthParam | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not isinstance(self.k, (int, np.integer)) or self.k < 2:
            raise ValueError(f"nonlinearity power k must be an integer >= 2, got {self.k!r}")
        want = _FAMILY_DEPTH[self.family]
        depth = self.depth
        if depth is None and want in ("infinite", "kdv"):
            depth = DepthParam(want)
        if depth is None or depth.kind != want:
            raise ValueError(
                f"family {self.family} requires a {want!r} depth, got {depth.kind if depth else None!r}"
            )
        object.__setattr__(self, "depth", depth)

    @property
    def delta(self) -> float:
        return self.depth.delta

    @classmethod
    def ilw(cls, delta: float, k: int = 2) -> EquationSpec:
        return cls("gILW-deep", k, DepthParam.deep(delta))

    @classmethod
    def bo(cls, k: int = 2) -> EquationSpec:
        return cls("gBO", k)

    @classmethod
    def scaled_ilw(cls, delta: float, k: int = 2) -> EquationSpec:
        return cls("scaled-gILW", k, DepthParam.shallow(delta))

    @classmethod
    def kdv(cls, k: int = 2) -> EquationSpec:
        return cls("gKdV", k)

    @classmethod
    def unscaled_ilw(cls, delta: float, k: int = 2) -> EquationSpec:
        return cls("gILW", k, DepthParam.finite(delta))


def dispersion_function(spec: EquationSpec) -> Callable[[np.ndarray], np.ndarray]:
    """p(xi) for the family, odd by construction: sign(xi) * p(|xi|)."""
    d = spec.delta
    fam = spec.family
    if fam in ("gILW-deep", "gILW"):
        core = lambda a: a * np.asarray(k_delta(d, a))
    elif fam == "gBO":
        core = lambda a: a * a
    elif fam == "scaled-gILW":
        core = lambda a: a * np.asarray(l_delta(d, a))
    else:
        core = lambda a: a**3

    def p(xi):
        xi = np.asarray(xi, dtype=float)
        return np.sign(xi) * core(np.abs(xi))

    return p


def dispersion(spec: EquationSpec, xi):
    return _out(dispersion_function(spec)(xi))


def dispersion_derivative(spec: EquationSpec, xi):
    """d p / d xi (even in xi)."""
    a = np.abs(np.asarray(xi, dtype=float))
    d = spec.delta
    fam = spec.family
    if fam in ("gILW-deep", "gILW"):
        out = np.asarray(k_delta(d, a)) + a * np.abs(dk_delta(d, a))
    elif fam == "gBO":
        out = 2 * a
    elif fam == "scaled-gILW":
        out = 3.0 / d * (np.asarray(k_delta(d, a)) + a * np.abs(dk_delta(d, a)))
    else:
        out = 3 * a * a
    return _out(out)


@dataclass(frozen=True, eq=False)
class SymbolTable:
    """Per-mode dispersion values on the half spectrum of ``grid``."""

    grid: Grid
    spec: EquationSpec
    p: np.ndarray = field(repr=False)
    aux: dict = field(repr=False, default_factory=dict)

    def full(self, name: str = "p") -> np.ndarray:
        """Values ordered by ``grid.mode_indices`` (p odd, aux symbols even)."""
        v = self.p if name == "p" else self.aux[name]
        sign = -1.0 if name == "p" else 1.0
        return np.concatenate([sign * v[1:-1][::-1], v])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mode", "xi", "p", "K", "L", "q", "h"])
        m = self.grid.mode_indices
        xi = self.grid.wavenumber(m)
        cols = [self.full("p")]
        for name in ("K", "L", "q", "h"):
            cols.append(self.full(name) if name in self.aux else None)
        for i in range(len(m)):
            row = [str(int(m[i])), repr(float(xi[i]))]
            row += ["" if c is None else repr(float(c[i])) for c in cols]
            w.writerow(row)
        return buf.getvalue()


def build_symbol_table(spec: EquationSpec, grid: Grid) -> SymbolTable:
    xi = grid.xi
    p_fn = dispersion_function(spec)
    p = p_fn(xi)
    if p[0] != 0 or np.any(p_fn(-xi) != -p):
        raise AssertionError("dispersion symbol is not odd")
    d = spec.delta
    aux: dict[str, np.ndarray] = {}
    fam = spec.family
    if fam in ("gILW-deep", "gILW"):
        aux["K"] = np.asarray(k_delta(d, xi))
        if d >= 2:
            aux["q"] = np.asarray(q_delta(d, xi))
    elif fam == "gBO":
        aux["K"] = np.abs(xi)
        aux["q"] = np.zeros_like(xi)
    elif fam == "scaled-gILW":
        aux["K"] = np.asarray(k_delta(d, xi))
        aux["L"] = np.asarray(l_delta(d, xi))
        aux["h"] = np.asarray(h_closed(d, xi))
    else:
        aux["L"] = xi * xi
    for v in (p, *aux.values()):
        v.setflags(write=False)
    return SymbolTable(grid, spec, p, aux)


# --- lemma-level measurements ----------------------------------------------------


def shallow_lower_constant(xis, deltas) -> float:
    """inf over sampled (delta, xi != 0) of L_delta(xi) / |xi|."""
    best = math.inf
    for d in deltas:
        a = np.abs(np.asarray(xis, dtype=float))
        a = a[a > 0]
        best = min(best, float(np.min(np.asarray(l_delta(d, a)) / a)))
    return best


def deep_asymptotic_constants(deltas, xis) -> dict[str, tuple[float, float]]:
    """Measured (min, max) of |p|/xi^2 for |xi| >= 2/delta and |p|/(delta|xi|^3) for |xi| <= 1/(2 delta)."""
    hi: list[float] = []
    lo: list[float] = []
    xis = np.abs(np.asarray(xis, dtype=float))
    xis = xis[xis > 0]
    for d in deltas:
        p = xis * np.asarray(k_delta(d, xis))
        big = xis >= 2.0 / d
        small = xis <= 1.0 / (2 * d)
        if np.any(big):
            hi.extend((p[big] / xis[big] ** 2).tolist())
        if np.any(small):
            lo.extend((p[small] / (d * xis[small] ** 3)).tolist())
    out = {}
    if hi:
        out["high_frequency"] = (min(hi), max(hi))
    if lo:
        out["low_frequency"] = (min(lo), max(lo))
    return out
