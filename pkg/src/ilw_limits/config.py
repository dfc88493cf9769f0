"""Strict JSON run configuration with path-qualified errors and a canonical echo.

A configuration is a JSON object

    {"schema_version": 1, "command": "<cmd>", "output": "...", "seed": 1,
     "threads": 1, "<cmd>": {...command payload...}}

Every key is checked: unknown keys, wrong types and out-of-range values raise
:class:`ConfigError` naming the offending path (``converge.deltas[2]``,
``evolve.equation.depth.delta``).  After validation every default is filled
in; :meth:`RunConfig.echo_text` serializes the result canonically, and
parsing that echo reproduces it byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .evolution import CFL_SAFETY
from .experiments import DataProfile, Perturbation, SweepConfig
from .grid import Grid
from .resonance import ComparisonConstants
from .symbols import FAMILIES, DepthParam, EquationSpec

SCHEMA_VERSION = 1
COMMANDS = ("symbols", "resonance", "evolve", "converge", "check")
CONVERGE_REGIMES = {
    "deep": "deep",
    "shallow": "shallow",
    "shallow-truncated": "shallow-truncated",
    "varying-data": "deep-varying-data",
}
DEFAULT_SWEEP_DELTAS = {
    "deep": [2.0, 4.0, 8.0, 16.0, 32.0],
    "varying-data": [2.0, 4.0, 8.0, 16.0, 32.0],
    "shallow": [0.4, 0.2, 0.1, 0.05],
    "shallow-truncated": [0.2, 0.1, 0.05, 0.025],
}
DEFAULT_RESONANCE_DELTAS = {"deep": [2.0, 4.0, 8.0, 16.0, math.inf], "shallow": [0.5, 0.1, 0.02]}
_REQUIRED = object()


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message

    def to_dict(self) -> dict:
        return {"path": self.path, "message": self.message}


def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _type_name(v) -> str:
    return "null" if v is None else type(v).__name__


class _Section:
    """Reads keys out of one JSON object; ``done`` rejects whatever is left."""

    def __init__(self, data, path: str):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(path, f"expected an object, got {_type_name(data)}")
        self.data = dict(data)
        self.path = path

    def _take(self, key, default):
        if key in self.data:
            return self.data.pop(key), True
        if default is _REQUIRED:
            raise ConfigError(_join(self.path, key), "missing required key")
        return default, False

    def int(self, key, default=_REQUIRED, minimum=None, optional=False):
        v, given = self._take(key, default)
        p = _join(self.path, key)
        if v is None and optional:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            if isinstance(v, float) and v.is_integer() and given:
                v = int(v)
            else:
                raise ConfigError(p, f"expected an integer, got {_type_name(v)}")
        if minimum is not None and v < minimum:
            raise ConfigError(p, f"must be >= {minimum}, got {v}")
        return v

    def float(self, key, default=_REQUIRED, optional=False, allow_inf=False):
        v, _ = self._take(key, default)
        return _as_float(v, _join(self.path, key), optional, allow_inf)

    def bool(self, key, default=_REQUIRED):
        v, _ = self._take(key, default)
        if not isinstance(v, bool):
            raise ConfigError(_join(self.path, key), f"expected true/false, got {_type_name(v)}")
        return v

    def str(self, key, default=_REQUIRED, choices=None):
        v, _ = self._take(key, default)
        p = _join(self.path, key)
        if not isinstance(v, str):
            raise ConfigError(p, f"expected a string, got {_type_name(v)}")
        if choices is not None and v not in choices:
            raise ConfigError(p, f"must be one of {list(choices)}, got {v!r}")
        return v

    def section(self, key) -> _Section:
        v, _ = self._take(key, None)
        return _Section(v, _join(self.path, key))

    def list(self, key, default=_REQUIRED):
        v, _ = self._take(key, default)
        if not isinstance(v, list):
            raise ConfigError(_join(self.path, key), f"expected a list, got {_type_name(v)}")
        return v

    def done(self):
        if self.data:
            key = sorted(self.data)[0]
            raise ConfigError(_join(self.path, key), "unknown key")


def _as_float(v, path, optional=False, allow_inf=False):
    if v is None and optional:
        return None
    if allow_inf and (v == "inf" or (isinstance(v, float) and v == math.inf)):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        extra = ' or "inf"' if allow_inf else ""
        raise ConfigError(path, f"expected a number{extra}, got {_type_name(v)}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    return v


def _jsonable(v):
    """Canonical JSON value: inf as "inf", tuples as lists, numpy scalars as Python."""
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
    return v


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats, LF, trailing newline."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


# --- payload readers ---------------------------------------------------------------


def _grid(sec: _Section, default_modes: int) -> dict:
    modes = sec.int("modes", default_modes)
    period = sec.float("period", 2 * math.pi)
    if modes < 8 or modes & (modes - 1):
        raise ConfigError(_join(sec.path, "modes"), f"must be a power of two >= 8, got {modes}")
    if not period > 0:
        raise ConfigError(_join(sec.path, "period"), f"must be positive, got {period}")
    sec.done()
    return {"modes": modes, "period": period}


_DEPTH_RULES = {
    "gILW-deep": ("deep", lambda d: 2 <= d < math.inf, "2 <= delta < inf (deep regime)"),
    "scaled-gILW": ("shallow", lambda d: 0 < d < 1, "0 < delta < 1 (shallow regime)"),
    "gILW": ("finite", lambda d: 0 < d < math.inf, "0 < delta < inf"),
    "gBO": ("infinite", lambda d: math.isinf(d), 'delta = "inf" (infinite depth)'),
    "gKdV": ("kdv", lambda d: d == 0, "delta = 0 (KdV limit)"),
}


def _equation(sec: _Section) -> dict:
    family = sec.str("family", "gILW-deep", choices=FAMILIES)
    k = sec.int("k", 2, minimum=2)
    kind, ok, rule = _DEPTH_RULES[family]
    depth = sec.section("depth")
    fixed = {"gBO": math.inf, "gKdV": 0.0}.get(family)
    default_delta = fixed if fixed is not None else {"deep": 2.0, "shallow": 0.5, "finite": 1.0}[kind]
    delta = depth.float("delta", default_delta, allow_inf=True)
    if not ok(delta):
        raise ConfigError(_join(depth.path, "delta"), f"family {family} requires {rule}, got {delta}")
    depth.done()
    sec.done()
    return {"family": family, "k": k, "depth": {"delta": delta}}


def equation_from(d: dict) -> EquationSpec:
    kind = _DEPTH_RULES[d["family"]][0]
    return EquationSpec(d["family"], d["k"], DepthParam(kind, d["depth"]["delta"]))


def _data(sec: _Section) -> dict:
    out = {
        "tail_amplitude": sec.float("tail_amplitude", 0.0),
        "tail_s": sec.float("tail_s", 1.0),
        "band_limit": sec.int("band_limit", None, minimum=0, optional=True),
    }
    if out["tail_amplitude"] < 0:
        raise ConfigError(_join(sec.path, "tail_amplitude"), "must be non-negative")
    sec.done()
    return out


def _data_profile(d: dict, seed: int) -> DataProfile:
    return DataProfile(d["tail_amplitude"], d["tail_s"], seed, d["band_limit"])


def _constants(sec: _Section, n0_default: float) -> dict:
    base = ComparisonConstants()
    out = {
        "sim": sec.float("sim", base.sim),
        "gg": sec.float("gg", base.gg),
        "gtrsim": sec.float("gtrsim", base.gtrsim),
        "n0": sec.float("n0", n0_default),
        "size_factor": sec.float("size_factor", base.size_factor),
    }
    try:
        ComparisonConstants(**out)
    except ValueError as exc:
        raise ConfigError(sec.path, str(exc)) from None
    sec.done()
    return out


def _deltas(sec: _Section, key, default, check, rule, allow_inf=False) -> list:
    raw = sec.list(key, default)
    p = _join(sec.path, key)
    out = []
    for i, v in enumerate(raw):
        d = _as_float(v, _join(p, i), allow_inf=allow_inf)
        if not check(d):
            raise ConfigError(_join(p, i), f"must satisfy {rule}, got {d}")
        out.append(d)
    return out


def _symbols(sec: _Section) -> dict:
    grid = _grid(sec.section("grid"), 64)
    raw = sec.list("equations", [{"family": "gILW-deep", "depth": {"delta": 2.0}}])
    if not raw:
        raise ConfigError(_join(sec.path, "equations"), "must list at least one equation")
    eqs = [_equation(_Section(e, _join(_join(sec.path, "equations"), i))) for i, e in enumerate(raw)]
    sec.done()
    return {"grid": grid, "equations": eqs}


def _resonance(sec: _Section) -> dict:
    regime = sec.str("regime", "deep", choices=("deep", "shallow"))
    lemma = sec.str("lemma", "res1", choices=("res1", "res2"))
    k = sec.int("k", 1 if lemma == "res1" else 2, minimum=1 if lemma == "res1" else 2)
    cap = sec.int("cap", 64, minimum=1)
    if cap > 128:
        raise ConfigError(_join(sec.path, "cap"), f"must be <= 128, got {cap}")
    if regime == "deep":
        deltas = _deltas(sec, "deltas", DEFAULT_RESONANCE_DELTAS["deep"], lambda d: d >= 2, "delta >= 2 or \"inf\"", True)
    else:
        deltas = _deltas(sec, "deltas", DEFAULT_RESONANCE_DELTAS["shallow"], lambda d: 0 <= d < 1, "0 <= delta < 1")
    if not deltas:
        raise ConfigError(_join(sec.path, "deltas"), "must not be empty")
    constants = _constants(sec.section("constants"), 1.0)
    floor = sec.float("floor", 0.1)
    if not floor > 0:
        raise ConfigError(_join(sec.path, "floor"), "must be positive")
    worst = sec.int("worst", 100, minimum=0)
    sec.done()
    return {
        "regime": regime,
        "lemma": lemma,
        "k": k,
        "cap": cap,
        "deltas": deltas,
        "constants": constants,
        "floor": floor,
        "worst": worst,
    }


def _evolve(sec: _Section) -> dict:
    equation = _equation(sec.section("equation"))
    grid = _grid(sec.section("grid"), 256)
    s = sec.section("solver")
    solver = {
        "dt": s.float("dt", None, optional=True),
        "cfl_safety": s.float("cfl_safety", CFL_SAFETY),
        "T": s.float("T", 0.3),
        "dealias": s.int("dealias", None, minimum=1, optional=True),
        "snapshot_stride": s.int("snapshot_stride", 1, minimum=1),
        "linear_only": s.bool("linear_only", False),
        "hs_order": s.float("hs_order", 1.0),
        "truncation": s.int("truncation", None, minimum=0, optional=True),
    }
    if solver["dt"] is not None and not solver["dt"] > 0:
        raise ConfigError(_join(s.path, "dt"), "must be positive")
    if not solver["cfl_safety"] > 0:
        raise ConfigError(_join(s.path, "cfl_safety"), "must be positive")
    if not solver["T"] >= 0:
        raise ConfigError(_join(s.path, "T"), "must be non-negative")
    if solver["truncation"] is not None and solver["truncation"] >= grid["modes"] // 2:
        raise ConfigError(_join(s.path, "truncation"), f"must be < M/2 = {grid['modes'] // 2}")
    s.done()
    data = _data(sec.section("data"))
    snapshots = sec.bool("snapshots", False)
    sec.done()
    return {"equation": equation, "grid": grid, "solver": solver, "data": data, "snapshots": snapshots}


def _converge(sec: _Section, regime_hint: str | None) -> dict:
    regime = sec.str("regime", regime_hint or _REQUIRED, choices=tuple(CONVERGE_REGIMES))
    if regime_hint is not None and regime != regime_hint:
        raise ConfigError(_join(sec.path, "regime"), f"config says {regime!r} but the command asks for {regime_hint!r}")
    deep = regime in ("deep", "varying-data")
    if deep:
        deltas = _deltas(sec, "deltas", DEFAULT_SWEEP_DELTAS[regime], lambda d: d >= 2, "2 <= delta < inf")
    else:
        deltas = _deltas(sec, "deltas", DEFAULT_SWEEP_DELTAS[regime], lambda d: 0 < d < 1, "0 < delta < 1")
    p = _join(sec.path, "deltas")
    if len(deltas) < 4:
        raise ConfigError(p, f"rate fitting needs at least 4 depths, got {len(deltas)}")
    if len(set(deltas)) != len(deltas):
        raise ConfigError(p, "depths must be distinct")
    k = sec.int("k", 2, minimum=2)
    grid = _grid(sec.section("grid"), 256)
    T = sec.float("T", 0.3)
    if not T > 0:
        raise ConfigError(_join(sec.path, "T"), "must be positive")
    s = sec.float("s", 1.0)
    dt = sec.float("dt", None, optional=True)
    if dt is not None and not dt > 0:
        raise ConfigError(_join(sec.path, "dt"), "must be positive")
    linear_only = sec.bool("linear_only", False)
    truncation = sec.int("truncation", 16 if regime == "shallow-truncated" else None, minimum=1, optional=True)
    tp = _join(sec.path, "truncation")
    if regime == "shallow-truncated":
        if truncation is None:
            raise ConfigError(tp, "shallow-truncated sweeps need a truncation K")
        if 3 * truncation > grid["modes"]:
            raise ConfigError(tp, f"K={truncation} exceeds M/3 = {grid['modes'] // 3}: not alias-free")
    elif truncation is not None:
        raise ConfigError(tp, "only shallow-truncated sweeps take a truncation")
    data = _data(sec.section("data"))
    ps = sec.section("perturbation")
    pert = {
        "amplitude": ps.float("amplitude", 0.5),
        "mode": ps.int("mode", 3, minimum=1),
        "phase": ps.float("phase", 0.0),
        "decay": ps.str("decay", "inverse", choices=("inverse", "constant", "none")),
    }
    if pert["mode"] >= grid["modes"] // 2:
        raise ConfigError(_join(ps.path, "mode"), "must lie below the Nyquist mode")
    ps.done()
    sec.done()
    return {
        "regime": regime,
        "deltas": deltas,
        "k": k,
        "grid": grid,
        "T": T,
        "s": s,
        "dt": dt,
        "linear_only": linear_only,
        "truncation": truncation,
        "data": data,
        "perturbation": pert,
    }


def _check(sec: _Section) -> dict:
    from .checks import CHECKS

    names = sec.list("checks", list(CHECKS))
    p = _join(sec.path, "checks")
    for i, n in enumerate(names):
        if n not in CHECKS:
            raise ConfigError(_join(p, i), f"unknown check {n!r}; expected one of {list(CHECKS)}")
    if len(set(names)) != len(names):
        raise ConfigError(p, "checks must be distinct")
    constants = _constants(sec.section("resonance_constants"), 1.0)
    sec.done()
    return {"checks": [n for n in CHECKS if n in names], "resonance_constants": constants}


# --- run configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    schema_version: int
    command: str
    output: str
    seed: int
    threads: int
    payload: dict = field(repr=False)

    def echo(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "output": self.output,
            "seed": self.seed,
            "threads": self.threads,
            self.command: self.payload,
        }

    def echo_text(self) -> str:
        return dumps(self.echo())

    # domain objects ------------------------------------------------------------

    def grid(self) -> Grid:
        g = self.payload["grid"]
        return Grid(g["modes"], g["period"])

    def equations(self) -> list[EquationSpec]:
        if self.command == "symbols":
            return [equation_from(e) for e in self.payload["equations"]]
        return [equation_from(self.payload["equation"])]

    def data_profile(self) -> DataProfile:
        return _data_profile(self.payload["data"], self.seed)

    def comparison_constants(self) -> ComparisonConstants:
        key = "constants" if self.command == "resonance" else "resonance_constants"
        return ComparisonConstants(**self.payload[key])

    def sweep_config(self) -> SweepConfig:
        p = self.payload
        return SweepConfig(
            regime=CONVERGE_REGIMES[p["regime"]],
            deltas=tuple(p["deltas"]),
            k=p["k"],
            modes=p["grid"]["modes"],
            period=p["grid"]["period"],
            T=p["T"],
            s=p["s"],
            dt=p["dt"],
            linear_only=p["linear_only"],
            truncation=p["truncation"],
            data=_data_profile(p["data"], self.seed),
            perturbation=Perturbation(**p["perturbation"]),
            threads=self.threads,
        )


def parse_config(text: str, command: str | None = None, regime: str | None = None) -> RunConfig:
    """Validate a JSON configuration and fill every default.

    ``command`` (and ``regime`` for converge) come from the command line; a
    config that names a different one is rejected.
    """
    try:
        doc = json.loads(text, parse_constant=lambda c: c)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}") from None
    top = _Section(doc, "")
    version = top.int("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported schema version {version}; this tool reads {SCHEMA_VERSION}")
    cmd = top.str("command", command or _REQUIRED, choices=COMMANDS)
    if command is not None and cmd != command:
        raise ConfigError("command", f"config is for {cmd!r} but {command!r} was requested")
    output = top.str("output", "ilw_out/")
    seed = top.int("seed", 1, minimum=0)
    threads = top.int("threads", 1, minimum=1)
    sec = top.section(cmd)
    if cmd == "symbols":
        payload = _symbols(sec)
    elif cmd == "resonance":
        payload = _resonance(sec)
    elif cmd == "evolve":
        payload = _evolve(sec)
    elif cmd == "converge":
        payload = _converge(sec, regime)
    else:
        payload = _check(sec)
    top.done()
    cfg = RunConfig(version, cmd, output, seed, threads, payload)
    if cmd == "converge":
        try:
            cfg.sweep_config()
        except ValueError as exc:
            raise ConfigError(cmd, str(exc)) from None
    return cfg
