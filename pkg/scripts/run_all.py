"""Run every experiment command over a set of families and collect a summary.

    python3 scripts/run_all.py --samples 200000 --out results/
"""
import argparse
import csv
from pathlib import Path

from duval.cli import write_outputs
from duval.experiments import RUNNERS, ExperimentConfig, run

FAMILIES = ["A1", "A2", "A3", "D4", "D5", "E6", "E7", "E8"]
# commands whose acceptance runs use a fixed family set
ONLY = {"koppelman-residual": ["A1", "D4"], "star-eval": ["A1", "A2", "D4"],
        "holder-probe": ["A1", "D4"]}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=None, help="override the per-command default")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    ap.add_argument("--commands", nargs="*", default=list(RUNNERS))
    ap.add_argument("--types", nargs="*", default=FAMILIES)
    args = ap.parse_args()

    out = Path(args.out)
    summary = []
    for cmd in args.commands:
        for t in [t for t in args.types if t in ONLY.get(cmd, args.types)]:
            cfg = ExperimentConfig(command=cmd, type=t, samples=args.samples, seed=args.seed)
            outcome, wall = run(cfg)
            write_outputs(out / f"{cmd}_{t}", cfg, outcome, wall)
            summary.append({"command": cmd, "type": t, "status": outcome.status, "wall_s": f"{wall:.1f}"})
            print(f"{cmd:20s} {t:4s} {outcome.status:12s} {wall:7.1f} s", flush=True)

    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(summary[0]))
        w.writeheader()
        w.writerows(summary)


if __name__ == "__main__":
    main()
