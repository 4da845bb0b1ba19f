"""Command-line entry point: ``duval <command> --type T ...``.

Exit codes: 0 pass, 2 quantitative fail, 3 inconclusive, 1 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import FAIL, INCONCLUSIVE, PASS, RUNNERS, ExperimentConfig, run
from .variety import DuValType

EXIT = {PASS: 0, FAIL: 2, INCONCLUSIVE: 3}
USAGE = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="duval", description="Koppelman-formula experiments on du Val singularities.")
    p.add_argument("command", choices=sorted(RUNNERS))
    p.add_argument("--type", default=None, help="A1..An, D4..Dn, E6, E7, E8 (default A1)")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output stem; writes STEM.csv and STEM.json")
    p.add_argument("--q-grid", type=float, nargs="+", default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--alpha", type=float, nargs="+", default=None)
    p.add_argument("--config", default=None, help="JSON file whose keys override the flags")
    p.add_argument("--version", action="version", version=f"duval {__version__}")
    return p


_FIELDS = {f.name for f in fields(ExperimentConfig)}


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    d = {"command": args.command}
    for name in ("type", "samples", "seed", "out", "q_grid", "k_max", "alpha"):
        v = getattr(args, name)
        if v is not None:
            d[name] = v
    if args.config:
        try:
            over = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from e
        if not isinstance(over, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(over) - _FIELDS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        if "command" in over and over["command"] != args.command:
            raise UsageError("config command does not match the command line")
        d.update(over)
    cfg = ExperimentConfig(**d)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    try:
        DuValType.parse(cfg.type)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if cfg.samples is not None and (not isinstance(cfg.samples, int) or cfg.samples < 1):
        raise UsageError("samples must be a positive integer")
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise UsageError("seed must be a nonnegative integer")
    if not isinstance(cfg.k_max, int) or not 1 <= cfg.k_max <= 4:
        raise UsageError("k-max must be between 1 and 4")
    if cfg.alpha is not None and any(not 0 <= a < 4 for a in cfg.alpha):
        raise UsageError("alpha values must lie in [0, 4)")
    if not isinstance(cfg.params, dict):
        raise UsageError("params must be a JSON object")


def _plain(x):
    if isinstance(x, (np.generic,)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return str(x)


def write_outputs(stem: Path, cfg: ExperimentConfig, outcome, wall: float) -> tuple[Path, Path]:
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    keys: list[str] = []
    for r in outcome.rows:
        keys += [k for k in r if k not in keys]
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in outcome.rows:
            w.writerow({k: _plain(v) if isinstance(v, (np.generic, complex)) else v for k, v in r.items()})
    record = {
        "command": cfg.command, "type": cfg.type, "version": __version__,
        "config": asdict(cfg), "config_hash": cfg.hash(), "status": outcome.status,
        "values": outcome.values, "expected": outcome.expected, "wall_time": wall,
    }
    json_path.write_text(json.dumps(record, indent=2, default=_plain))
    return csv_path, json_path


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
    except (UsageError, TypeError) as e:
        print(f"duval: error: {e}", file=sys.stderr)
        return USAGE
    outcome, wall = run(cfg)
    stem = Path(cfg.out) if cfg.out else Path("results") / f"{cfg.command}_{cfg.type}"
    if stem.suffix in (".csv", ".json"):
        stem = stem.with_suffix("")
    csv_path, json_path = write_outputs(stem, cfg, outcome, wall)
    print(f"{cfg.command} {cfg.type}: {outcome.status} ({wall:.1f} s) -> {json_path}")
    return EXIT[outcome.status]


if __name__ == "__main__":
    sys.exit(main())
