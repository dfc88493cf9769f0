"""Command-line driver: ``ilw-limits <command> --config <path> [--out <prefix>] [--threads <n>]``.

Every command writes a JSON manifest ``<prefix><command>.json`` carrying the
canonical config echo, the tool version and the command's results, plus the
command's CSV artifacts.  Exit status: 0 success, 1 hard invariant failure
(``check``), 2 invalid configuration or arguments, 3 numerical blow-up.
Errors are printed to stderr as a JSON failure list.
"""

from __future__ import annotations

import argparse
import struct
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_suite
from .config import CONVERGE_REGIMES, COMMANDS, ConfigError, RunConfig, dumps, equation_from, parse_config
from .evolution import SolverConfig, advisory_dt, evolve
from .experiments import SweepAborted, run_sweep
from .grid import Grid
from .resonance import check_res1, check_res2
from .symbols import build_symbol_table

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
SNAPSHOT_MAGIC = b"ILWSNAP1"
_HEADER = struct.Struct("<8sI4x")


# --- snapshot dumps ----------------------------------------------------------------


def write_snapshots(path, grid: Grid, fields) -> None:
    """16-byte header (magic, u32 M, 4 reserved bytes) then float64 LE re/im pairs.

    The data is mode-major: for each mode in -M/2+1..M/2 the coefficients at
    every snapshot follow in time order, each as (re, im).
    """
    data = np.stack([f.full_spectrum() for f in fields], axis=1)  # (M, snapshots)
    pairs = np.empty(data.shape + (2,), dtype="<f8")
    pairs[..., 0] = data.real
    pairs[..., 1] = data.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, grid.modes))
        fh.write(pairs.tobytes())


def read_snapshots(path) -> tuple[int, np.ndarray]:
    """(M, coefficients[mode, snapshot]) from a file written by :func:`write_snapshots`."""
    raw = Path(path).read_bytes()
    magic, modes = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"not a snapshot dump (magic {magic!r})")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size % (2 * modes):
        raise ValueError("truncated snapshot dump")
    pairs = body.reshape(modes, -1, 2)
    return modes, pairs[..., 0] + 1j * pairs[..., 1]


# --- commands ------------------------------------------------------------------------


class _Writer:
    """Collects artifact paths; every file is written once, in a fixed order."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self.files: list[str] = []
        parent = Path(prefix + "x").parent
        parent.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> str:
        # recorded relative to the prefix so the manifest does not depend on --out
        self.files.append(name)
        return self.prefix + name

    def text(self, name: str, content: str) -> str:
        p = self.path(name)
        with open(p, "w", newline="\n") as fh:
            fh.write(content)
        return p

    def manifest(self, cfg: RunConfig, result: dict, status: str) -> str:
        doc = {
            "tool": "ilw-limits",
            "version": __version__,
            "status": status,
            "config": cfg.echo(),
            "files": list(self.files),
            "result": result,
        }
        return self.text(f"{cfg.command}.json", dumps(doc))


def _cmd_symbols(cfg: RunConfig, out: _Writer) -> int:
    grid = cfg.grid()
    tables = []
    for i, eq in enumerate(cfg.payload["equations"]):
        spec = equation_from(eq)
        table = build_symbol_table(spec, grid)
        name = f"symbols_{i}_{spec.family}_k{spec.k}.csv"
        out.text(name, table.to_csv())
        tables.append({"file": name, "equation": eq, "rows": len(grid.mode_indices)})
    out.manifest(cfg, {"tables": tables}, "ok")
    return EXIT_OK


def _cmd_resonance(cfg: RunConfig, out: _Writer) -> int:
    p = cfg.payload
    fn = check_res1 if p["lemma"] == "res1" else check_res2
    report = fn(p["regime"], p["deltas"], p["k"], p["cap"], cfg.comparison_constants(), p["floor"], p["worst"])
    out.text("resonance_worst.csv", report.worst_csv())
    result = report.to_dict()
    if report.passed is False:
        result["warning"] = "minimum ratio below the configured pass floor"
    elif report.passed is None:
        result["warning"] = "no qualifying tuple for some depth: raise the cap or relax the constants"
    out.manifest(cfg, result, "ok")
    return EXIT_OK


def _cmd_evolve(cfg: RunConfig, out: _Writer) -> int:
    p = cfg.payload
    grid = cfg.grid()
    spec = cfg.equations()[0]
    u0 = cfg.data_profile().build(grid)
    s = p["solver"]
    dt = s["dt"] if s["dt"] is not None else advisory_dt(grid, u0, spec.k, s["cfl_safety"])
    solver = SolverConfig(
        spec=spec,
        grid=grid,
        dt=dt,
        T=s["T"],
        dealias=s["dealias"],
        snapshot_stride=s["snapshot_stride"],
        linear_only=s["linear_only"],
        hs_order=s["hs_order"],
        truncation=s["truncation"],
    )
    traj = evolve(u0, solver)
    diag = traj.diagnostics
    lines = ["t,mean,l2,hs,i2"]
    for j, t in enumerate(traj.times):
        i2 = repr(diag["i2"][j]) if "i2" in diag else ""
        lines.append(f"{t!r},{diag['mean'][j]!r},{diag['l2'][j]!r},{diag['hs'][j]!r},{i2}")
    out.text("evolve.csv", "\n".join(lines) + "\n")
    if p["snapshots"]:
        write_snapshots(out.path("evolve_snapshots.bin"), grid, traj.fields)
    result = {
        "dt": dt,
        "steps": solver.n_steps,
        "snapshots": len(traj.times),
        "blowup": traj.blowup,
        "failure_time": traj.failure_time,
        "mean_drift": max(abs(m - diag["mean"][0]) for m in diag["mean"]),
        "l2_relative_drift": max(abs(v / diag["l2"][0] - 1.0) for v in diag["l2"]) if diag["l2"][0] else 0.0,
    }
    for key in ("i2", "i2_corrected"):
        if key in diag:
            result[f"{key}_relative_drift"] = max(abs(v - diag[key][0]) for v in diag[key]) / abs(diag[key][0])
    status = "blowup" if traj.blowup else "ok"
    out.manifest(cfg, result, status)
    if traj.blowup:
        _fail([{"path": "", "message": f"numerical blow-up at t={traj.failure_time!r}"}])
        return EXIT_BLOWUP
    return EXIT_OK


def _cmd_converge(cfg: RunConfig, out: _Writer) -> int:
    sweep = cfg.sweep_config()
    regime = cfg.payload["regime"]
    try:
        report = run_sweep(sweep)
    except SweepAborted as exc:
        result = {"aborted": True, "delta": exc.delta, "failure_time": exc.failure_time}
        out.manifest(cfg, result, "blowup")
        _fail([{"path": "", "message": str(exc)}])
        return EXIT_BLOWUP
    out.text(f"converge_{regime}.csv", report.csv())
    out.manifest(cfg, report.to_dict(include_runtime=False), "ok")
    return EXIT_OK


def _cmd_check(cfg: RunConfig, out: _Writer) -> int:
    results = run_suite(cfg.payload["checks"], cfg.comparison_constants(), cfg.threads)
    failures = [r.name for r in results if r.status == "fail"]
    summary = {
        "checks": [r.to_dict() for r in results],
        "hard_failures": failures,
        "warnings": [r.name for r in results if r.status == "warn"],
    }
    out.manifest(cfg, summary, "fail" if failures else "ok")
    if failures:
        _fail([{"path": name, "message": "invariant check failed"} for name in failures])
        return EXIT_FAILED
    return EXIT_OK


_COMMANDS = {
    "symbols": _cmd_symbols,
    "resonance": _cmd_resonance,
    "evolve": _cmd_evolve,
    "converge": _cmd_converge,
    "check": _cmd_check,
}


def run(command: str, cfg: RunConfig, out: str | None = None) -> int:
    """Execute a validated configuration and return the exit status."""
    if command != cfg.command:
        raise ValueError(f"config is for {cfg.command!r}, not {command!r}")
    return _COMMANDS[command](cfg, _Writer(out if out is not None else cfg.output))


# --- entry point ---------------------------------------------------------------------


def _fail(failures: list[dict]) -> None:
    sys.stderr.write(dumps({"status": "error", "failures": failures}))


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ilw-limits", description="ILW-family simulation and verification suite")
    ap.add_argument("--version", action="version", version=f"ilw-limits {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "converge":
            sp.add_argument("regime", choices=list(CONVERGE_REGIMES))
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", default=None, help="output path prefix (overrides the config)")
        sp.add_argument("--threads", type=int, default=None, help="worker threads for sweep members")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        _fail([{"path": "--config", "message": str(exc)}])
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, args.command, getattr(args, "regime", None))
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads", "must be >= 1")
            cfg = replace(cfg, threads=args.threads)
    except ConfigError as exc:
        _fail([exc.to_dict()])
        return EXIT_CONFIG
    return run(args.command, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
