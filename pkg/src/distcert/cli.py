"""Command line experiment runner.

Usage::

    distcert certify --d 8 --nq 1 --eps 0.5 --delta 0.2 --runs 50 --seed 7
    distcert chi2lab --d 2 --ell 3 --m 2 --eps 0.2 --seed 1

Exit codes: 0 success, 1 a numerical check failed, 2 configuration error.
Set ``DISTCERT_WORKERS`` to spread grid points over worker processes; rows
are always merged in grid order.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .experiments import KERNELS
from .randomness import SeededStream

SUBCOMMANDS = tuple(KERNELS)
FORMATS = ("json", "csv")
DEFAULT_FORMAT = {
    "certify": "json",
    "bell": "json",
    "calibrate": "json",
    "compress": "csv",
    "chi2lab": "csv",
    "normcheck": "csv",
}

# key -> (type, validator, description)
_KEYS = {
    "d": (int, lambda v: v >= 2, "an integer >= 2"),
    "nq": (int, lambda v: 0 <= v <= 8, "an integer in [0, 8]"),
    "eps": (float, lambda v: 0 < v <= 1, "a number in (0, 1]"),
    "delta": (float, lambda v: 0 < v <= 1, "a number in (0, 1]"),
    "runs": (int, lambda v: v >= 1, "an integer >= 1"),
    "trials": (int, lambda v: v >= 1, "an integer >= 1"),
    "ell": (int, lambda v: v >= 1, "an integer >= 1"),
    "m": (int, lambda v: v >= 1, "an integer >= 1"),
    "c": (float, lambda v: v > 0, "a positive number"),
    "c2": (float, lambda v: v >= 1, "a number >= 1"),
    "pairs": (int, lambda v: v >= 1, "an integer >= 1"),
    "copies": (int, lambda v: v >= 1, "an integer >= 1"),
}

DEFAULT_GRID = {
    "certify": {"d": [8], "nq": [1], "eps": [0.5], "delta": [0.2], "runs": [50], "c2": [2.0]},
    "compress": {"d": [8], "nq": [1], "trials": [100_000], "pairs": [3]},
    "chi2lab": {"d": [2], "nq": [1], "ell": [3], "m": [1], "eps": [0.2], "c": [0.1]},
    "normcheck": {"d": [4], "nq": [1], "trials": [100]},
    "bell": {"nq": [1], "trials": [64], "runs": [100]},
    "calibrate": {"d": [8], "nq": [1], "trials": [10_000], "pairs": [10]},
}
OPTIONAL_KEYS = {
    "certify": {"m"},
    "compress": set(),
    "chi2lab": {"copies"},
    "normcheck": {"ell", "m"},
    "bell": set(),
    "calibrate": set(),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``where`` names the offending field or line."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


@dataclass
class ExperimentConfig:
    subcommand: str
    grid: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "results"
    format: str = ""
    record_timing: bool = False

    FIELDS = ("subcommand", "grid", "seed", "out", "format", "record_timing")

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError("subcommand", f"must be one of {', '.join(SUBCOMMANDS)}; got {self.subcommand!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an integer in [0, 2^64)")
        if not self.format:
            self.format = DEFAULT_FORMAT[self.subcommand]
        if self.format not in FORMATS:
            raise ConfigError("format", f"must be json or csv; got {self.format!r}")
        if not isinstance(self.out, str) or not self.out:
            raise ConfigError("out", "must be a non-empty path")
        if not isinstance(self.grid, dict):
            raise ConfigError("grid", "must be a mapping of parameter names to value lists")
        allowed = set(DEFAULT_GRID[self.subcommand]) | OPTIONAL_KEYS[self.subcommand]
        grid = {}
        for key, values in self.grid.items():
            if key not in allowed:
                raise ConfigError(f"grid.{key}", f"unknown key for {self.subcommand}; allowed: {sorted(allowed)}")
            if not isinstance(values, list):
                values = [values]
            if not values:
                raise ConfigError(f"grid.{key}", "needs at least one value")
            typ, ok, desc = _KEYS[key]
            clean = []
            for i, v in enumerate(values):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"grid.{key}[{i}]", f"must be {desc}; got {v!r}")
                if typ is int and float(v) != int(v):
                    raise ConfigError(f"grid.{key}[{i}]", f"must be {desc}; got {v!r}")
                v = typ(v)
                if not ok(v):
                    raise ConfigError(f"grid.{key}[{i}]", f"must be {desc}; got {v!r}")
                clean.append(v)
            grid[key] = clean
        self.grid = {**DEFAULT_GRID[self.subcommand], **grid}
        for point in self.points():
            _check_point(self.subcommand, point)

    def points(self) -> list[dict]:
        keys = sorted(self.grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.grid[k] for k in keys))]

    def to_dict(self) -> dict:
        return {k: (dict(sorted(v.items())) if k == "grid" else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, obj) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config", "top level must be an object")
        unknown = set(obj) - set(cls.FIELDS)
        if unknown:
            raise ConfigError(sorted(unknown)[0], f"unknown key; allowed: {list(cls.FIELDS)}")
        if "subcommand" not in obj:
            raise ConfigError("subcommand", "missing")
        return cls(**obj)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
        return cls.from_dict(obj)


def _check_point(sub: str, p: dict):
    """Cross-parameter preconditions of each experiment."""
    where = "grid " + json.dumps(p, sort_keys=True)
    d, nq = p.get("d"), p["nq"]
    if sub == "bell":
        if not 1 <= nq <= 3:
            raise ConfigError(where, "bell needs 1 <= nq <= 3 qubits")
        return
    d_q = 2**nq
    if sub == "certify":
        if nq < 1 or d_q > d:
            raise ConfigError(where, "certify needs 1 <= nq and 2^nq <= d")
        return
    if d % d_q:
        raise ConfigError(where, f"2^nq = {d_q} must divide d = {d}")
    if sub == "chi2lab":
        if not p["ell"] <= d * d - 1:
            raise ConfigError(where, f"ell must be <= d^2 - 1 = {d * d - 1}")
        if p["ell"] > 12:
            raise ConfigError(where, "ell > 12 cannot be enumerated")
        if p["eps"] > 0.3:
            raise ConfigError(where, "eps must be <= 0.3 for the hard instance")
        if p.get("copies") and d ** p["copies"] > 4096:
            raise ConfigError(where, "d^copies must be <= 4096")
        if not p.get("copies") and d_q ** p["m"] > 4096:
            raise ConfigError(where, "d_q^m must be <= 4096")
    if sub == "normcheck" and p.get("ell") and p["ell"] > d * d - 1:
        raise ConfigError(where, f"ell must be <= d^2 - 1 = {d * d - 1}")
    if sub in ("compress", "calibrate") and d_q < 2:
        raise ConfigError(where, f"{sub} needs nq >= 1")


def build_id() -> str:
    """``git describe`` of the source tree, or the package version outside a checkout."""
    try:
        res = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
        if res.returncode == 0 and res.stdout.strip():
            return res.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"artifact-{__version__}"


def _point_stream(cfg: ExperimentConfig, point: dict) -> SeededStream:
    return SeededStream(cfg.seed, (cfg.subcommand, json.dumps(point, sort_keys=True)))


def _run_point(args):
    cfg_dict, point = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    t0 = time.perf_counter()
    res = KERNELS[cfg.subcommand](dict(point), _point_stream(cfg, point))
    rows, files = res if isinstance(res, tuple) else (res, {})
    if cfg.record_timing:
        for r in rows:
            r["wall_time_s"] = time.perf_counter() - t0
    return rows, files


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_clean(x) for x in v]
    return v


def render(cfg: ExperimentConfig, rows: list[dict], build: str) -> str:
    rows = [{**_clean(r), "seed": cfg.seed, "build": build} for r in rows]
    if cfg.format == "json":
        record = {"config": cfg.to_dict(), "build": build, "rows": rows}
        return json.dumps(record, indent=2, sort_keys=True, default=_json_default) + "\n"
    header = []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(
            {
                k: json.dumps(v, sort_keys=True, default=_json_default) if isinstance(v, (dict, list)) else v
                for k, v in r.items()
            }
        )
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, stdout=None, stderr=None) -> int:
    """Run every grid point, write the artifacts under ``cfg.out`` and return the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    points = cfg.points()
    jobs = [(cfg.to_dict(), p) for p in points]
    workers = int(os.environ.get("DISTCERT_WORKERS", "1") or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]
    rows, files = [], {}
    for r, f in results:
        rows.extend(r)
        files.update(f)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    build = build_id()
    main = out / f"{cfg.subcommand}.{cfg.format}"
    main.write_text(render(cfg, rows, build))
    (out / f"{cfg.subcommand}.config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    for name, text in sorted(files.items()):
        (out / name).write_text(text)

    failed = [r for r in rows if not r.get("pass", True)]
    print(f"{cfg.subcommand}: {len(rows)} rows, {len(failed)} failed -> {main}", file=stdout)
    for r in failed:
        brief = {k: v for k, v in r.items() if not isinstance(v, (list, dict))}
        print("FAILED " + json.dumps(_clean(brief), sort_keys=True, default=_json_default), file=stderr)
    return 1 if failed else 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distcert", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        for key in sorted(set(DEFAULT_GRID[name]) | OPTIONAL_KEYS[name]):
            typ = _KEYS[key][0]
            p.add_argument(f"--{key}", type=typ, nargs="+", default=None, help=f"grid values ({_KEYS[key][2]})")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory (default: results)")
        p.add_argument("--format", choices=FORMATS, default=None)
        p.add_argument("--config", default=None, help="JSON experiment config; flags override it")
        p.add_argument("--record-timing", action="store_true", help="add wall time (not reproducible)")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        base = {"subcommand": args.subcommand}
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError("config", str(exc)) from None
            base = ExperimentConfig.from_json(text).to_dict()
            if base["subcommand"] != args.subcommand:
                raise ConfigError("subcommand", f"config is for {base['subcommand']!r}, not {args.subcommand!r}")
        grid = dict(base.get("grid", {}))
        for key in _KEYS:
            val = getattr(args, key, None)
            if val is not None:
                grid[key] = val
        base["grid"] = grid
        for key in ("seed", "out", "format"):
            val = getattr(args, key)
            if val is not None:
                base[key] = val
        if args.record_timing:
            base["record_timing"] = True
        cfg = ExperimentConfig.from_dict(base)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
