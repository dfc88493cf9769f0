"""Resonance functions and exhaustive checks of the uniform lower bounds.

For a zero-sum tuple (n_1, ..., n_{j+1}) the resonance function is the sum of
the dispersion symbol over its entries.  ``check_res1`` and ``check_res2``
enumerate every tuple inside a magnitude cap that satisfies the ordering
hypotheses of the two lower-bound lemmas and record the smallest ratio

    |Omega| / (|n_3| |n_1|)         (res1)
    |Omega| / (|n_3 + n_4| |n_1|)   (res2)

over the tuples and a grid of depths.  The implicit constants behind "~",
">>", ">~" and n_0 are explicit fields of :class:`ComparisonConstants`.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .symbols import EquationSpec, dispersion, dispersion_derivative


@dataclass(frozen=True)
class ComparisonConstants:
    """a ~ b iff 1/sim <= a/b <= sim; a >> b iff a >= gg*b; a >~ b iff a >= gtrsim*b.

    The size hypothesis reads |n_1| >= size_factor * max_{0<=n<=n0} |p'(n)|.
    """

    sim: float = 2.0
    gg: float = 8.0
    gtrsim: float = 1.0
    n0: float = 16.0
    size_factor: float = 8.0

    def __post_init__(self):
        if self.sim < 1 or self.gg <= 0 or self.gtrsim <= 0 or self.n0 < 0 or self.size_factor < 0:
            raise ValueError(f"invalid comparison constants {self}")


DEFAULT_FLOOR = 0.1


def equation_for(regime: str, delta: float, k: int = 2) -> EquationSpec:
    """Equation whose symbol enters Omega: delta = inf is gBO, delta = 0 is gKdV."""
    if regime == "deep":
        return EquationSpec.bo(k) if math.isinf(delta) else EquationSpec.ilw(delta, k)
    if regime == "shallow":
        return EquationSpec.kdv(k) if delta == 0 else EquationSpec.scaled_ilw(delta, k)
    raise ValueError(f"regime must be 'deep' or 'shallow', got {regime!r}")


def omega(regime: str, delta: float, tup) -> float:
    """Resonance function: sum of p over the entries of a zero-sum integer tuple."""
    n = [int(v) for v in tup]
    if sum(n) != 0:
        raise ValueError(f"frequency tuple {tuple(n)} does not sum to zero")
    spec = equation_for(regime, delta)
    return math.fsum(np.atleast_1d(dispersion(spec, np.array(n, dtype=float))).tolist())


def size_threshold(regime: str, delta: float, consts: ComparisonConstants) -> float:
    """size_factor * max over 0 <= n <= n0 of |p'(n)| (p' is monotone on n >= 0)."""
    if consts.size_factor == 0:
        return 0.0
    spec = equation_for(regime, delta)
    grid = np.linspace(0.0, consts.n0, 2049)
    return consts.size_factor * float(np.max(np.abs(dispersion_derivative(spec, grid))))


@dataclass
class DeltaResult:
    delta: float
    tuples: int
    min_ratio: float | None
    argmin: tuple[int, ...] | None
    size_threshold: float


@dataclass
class BoundReport:
    regime: str
    lemma: str
    k: int
    cap: int
    constants: ComparisonConstants
    floor: float
    per_delta: list[DeltaResult]
    worst: list[tuple[float, float, tuple[int, ...]]] = field(default_factory=list)

    @property
    def tuple_count(self) -> int:
        return sum(r.tuples for r in self.per_delta)

    @property
    def min_ratio(self) -> float | None:
        vals = [r.min_ratio for r in self.per_delta if r.min_ratio is not None]
        return min(vals) if vals else None

    @property
    def argmin(self) -> tuple[float, tuple[int, ...]] | None:
        best = None
        for r in self.per_delta:
            if r.min_ratio is not None and (best is None or r.min_ratio < best[0]):
                best = (r.min_ratio, r.delta, r.argmin)
        return None if best is None else (best[1], best[2])

    @property
    def passed(self) -> bool | None:
        """None when some depth has no qualifying tuple (indeterminate)."""
        if any(r.tuples == 0 for r in self.per_delta):
            return None
        return all(r.min_ratio >= self.floor for r in self.per_delta)

    @property
    def uniformity(self) -> float | None:
        """max/min of the per-depth minimum ratios."""
        vals = [r.min_ratio for r in self.per_delta if r.min_ratio]
        if len(vals) != len(self.per_delta) or not vals:
            return None
        return max(vals) / min(vals)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "lemma": self.lemma,
            "k": self.k,
            "cap": self.cap,
            "constants": asdict(self.constants),
            "floor": self.floor,
            "deltas": [_delta_str(r.delta) for r in self.per_delta],
            "tuple_count": self.tuple_count,
            "min_ratio": self.min_ratio,
            "argmin": None
            if self.argmin is None
            else {"delta": _delta_str(self.argmin[0]), "tuple": list(self.argmin[1])},
            "passed": {True: "pass", False: "fail", None: "indeterminate"}[self.passed],
            "uniformity": self.uniformity,
            "per_delta": [
                {
                    "delta": _delta_str(r.delta),
                    "tuples": r.tuples,
                    "min_ratio": r.min_ratio,
                    "argmin": None if r.argmin is None else list(r.argmin),
                    "size_threshold": r.size_threshold,
                }
                for r in self.per_delta
            ],
        }

    def worst_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        width = self.k + 2
        w.writerow(["delta", "ratio", "omega"] + [f"n{i + 1}" for i in range(width)])
        for ratio, om, tup in self.worst:
            delta, entries = tup[0], tup[1:]
            w.writerow([_delta_str(delta), repr(ratio), repr(om)] + [str(v) for v in entries])
        return buf.getvalue()


def _delta_str(d: float):
    if math.isinf(d):
        return "inf"
    return d


def _enumerate(lemma: str, k: int, cap: int, consts: ComparisonConstants):
    """Yield blocks (tuples[:, k+2], reference) of tuples meeting the ordering hypotheses.

    The size hypothesis depends on delta and is applied by the caller.
    """
    width = k + 2
    r = np.arange(-cap, cap + 1)
    if lemma == "res1":
        n_tail = k - 1  # n_4 .. n_{k+2}
        tail_bound = int(cap // (consts.gg * k)) if n_tail else 0
        heads = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)  # n2, n3
    else:
        n_tail = k - 2  # n_5 .. n_{k+2}
        n3max = int(cap // consts.gg)
        r3 = np.arange(-n3max, n3max + 1)
        tail_bound = int(2 * n3max // (consts.gg * k)) if n_tail else 0
        heads = np.stack(np.meshgrid(r, r3, r3, indexing="ij"), axis=-1).reshape(-1, 3)
    tails = itertools.product(range(-tail_bound, tail_bound + 1), repeat=n_tail)
    for tail in tails:
        tail = np.array(tail, dtype=np.int64)
        tmax = int(np.max(np.abs(tail))) if n_tail else 0
        n1 = -(heads.sum(axis=1) + tail.sum())
        a1 = np.abs(n1)
        a2 = np.abs(heads[:, 0])
        a3 = np.abs(heads[:, 1])
        ok = (a1 <= cap) & (a1 <= consts.sim * a2) & (a2 <= consts.sim * a1)
        if lemma == "res1":
            ok &= (a2 >= consts.gtrsim * a3) & (a3 > 0)
            if n_tail:
                ok &= a3 >= consts.gg * k * tmax
            ref = a3 * a1
        else:
            a4 = np.abs(heads[:, 2])
            s34 = np.abs(heads[:, 1] + heads[:, 2])
            ok &= (a2 >= consts.gg * a3) & (a3 >= consts.gtrsim * a4) & (s34 > 0)
            if n_tail:
                ok &= s34 >= consts.gg * k * tmax
            ref = s34 * a1
        if not np.any(ok):
            continue
        block = np.empty((int(ok.sum()), width), dtype=np.int64)
        block[:, 0] = n1[ok]
        block[:, 1 : heads.shape[1] + 1] = heads[ok]
        if n_tail:
            block[:, heads.shape[1] + 1 :] = tail
        yield block, ref[ok].astype(float)


def _check(
    lemma: str,
    regime: str,
    deltas,
    k: int,
    cap: int,
    consts: ComparisonConstants | None,
    floor: float,
    keep_worst: int,
) -> BoundReport:
    consts = consts or ComparisonConstants()
    min_k = 1 if lemma == "res1" else 2
    if k < min_k:
        raise ValueError(f"{lemma} needs k >= {min_k}, got {k}")
    if not 1 <= cap <= 128:
        raise ValueError(f"magnitude cap must lie in [1, 128], got {cap}")
    deltas = [float(d) for d in deltas]
    blocks = list(_enumerate(lemma, k, cap, consts))
    idx = np.arange(-cap, cap + 1, dtype=float)
    per_delta = []
    worst: list[tuple[float, float, tuple]] = []
    for d in deltas:
        spec = equation_for(regime, d)
        table = np.asarray(dispersion(spec, idx))
        thresh = size_threshold(regime, d, consts)
        count = 0
        best = (math.inf, None)
        for block, ref in blocks:
            keep = np.abs(block[:, 0]) >= thresh
            if not np.any(keep):
                continue
            tb = block[keep]
            om = table[tb + cap].sum(axis=1)
            ratio = np.abs(om) / ref[keep]
            count += len(tb)
            i = int(np.argmin(ratio))
            if ratio[i] < best[0]:
                best = (float(ratio[i]), tuple(int(v) for v in tb[i]))
            if keep_worst:
                j = np.argsort(ratio, kind="stable")[:keep_worst]
                worst.extend(
                    (float(ratio[t]), float(om[t]), (d, *map(int, tb[t]))) for t in j
                )
                worst.sort(key=lambda e: (e[0], e[2][1:], e[2][0]))
                del worst[keep_worst:]
        per_delta.append(
            DeltaResult(
                delta=d,
                tuples=count,
                min_ratio=best[0] if count else None,
                argmin=best[1],
                size_threshold=thresh,
            )
        )
    return BoundReport(regime, lemma, k, cap, consts, floor, per_delta, worst)


def check_res1(
    regime: str,
    deltas,
    k: int,
    cap: int,
    consts: ComparisonConstants | None = None,
    floor: float = DEFAULT_FLOOR,
    keep_worst: int = 100,
) -> BoundReport:
    """Exhaustive check of |Omega_{k+2}| >~ |n_3||n_1|.

    Hypotheses: |n_1| ~ |n_2| >~ |n_3| > 0, and for k >= 2
    |n_3| >> k max_{j>=4} |n_j|; plus the size hypothesis on |n_1|.
    """
    return _check("res1", regime, deltas, k, cap, consts, floor, keep_worst)


def check_res2(
    regime: str,
    deltas,
    k: int,
    cap: int,
    consts: ComparisonConstants | None = None,
    floor: float = DEFAULT_FLOOR,
    keep_worst: int = 100,
) -> BoundReport:
    """Exhaustive check of |Omega_{k+2}| >~ |n_3 + n_4||n_1|.

    Hypotheses: |n_1| ~ |n_2| >> |n_3| >~ |n_4|, n_3 + n_4 != 0, and for
    k >= 3 |n_3 + n_4| >> k max_{j>=5} |n_j|; plus the size hypothesis.
    """
    return _check("res2", regime, deltas, k, cap, consts, floor, keep_worst)
