"""Cost/quality comparison of the pipeline against the baselines over several seeds."""
import argparse
import csv
import logging
from pathlib import Path

from topoforge.benchmark import BENCH_HEADER, METHODS, run_benchmark, summarize
from topoforge.pipeline import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--methods", default=",".join(METHODS))
    ap.add_argument("--budget-fine-eq", type=float, default=700.0)
    ap.add_argument("--out", default="runs/benchmark.csv")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    rows = run_benchmark(RunConfig(), args.methods.split(","), range(args.seeds), args.budget_fine_eq)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_HEADER)
        w.writeheader()
        w.writerows(rows)
    print(f"{'method':8s}{'median U':>12s}{'median fine-eq':>16s}{'runs':>6s}")
    for m, s in summarize(rows).items():
        print(f"{m:8s}{s['median_U']:12.4g}{s['median_fine_eq']:16.1f}{s['runs']:6d}")
    print(f"rows written to {out}")


if __name__ == "__main__":
    main()
