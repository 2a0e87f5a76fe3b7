"""Two specifications served from one candidate database.

The first band is designed from scratch; the second is then started from the
stored candidates. Prints a small table and writes curves/geometry under --out.
"""
import argparse
import dataclasses
import logging
from pathlib import Path

from topoforge.pipeline import RunConfig, export, run_full, table_row


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/case_study")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--bands", default="5,6;6,7", help="semicolon-separated f_L,f_H pairs")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    root = Path(args.out)
    base = RunConfig(seed=args.seed, output=str(root), db=str(root / "candidates.jsonl"),
                     scaling=str(root / "scaling.json"))
    print("band_GHz\tstart\tclassify_sims\tin_band_dB\tBW_GHz\tBW_%\tA1_mm\tfine_eq")
    for pair in args.bands.split(";"):
        f_L, f_H = (float(v) for v in pair.split(","))
        cfg = dataclasses.replace(base, f_L=f_L, f_H=f_H, output=str(root / f"band_{f_L:g}_{f_H:g}"))
        rep = run_full(cfg)
        rep.save(Path(cfg.output) / "report.json")
        for what in ("curves", "geometry", "table"):
            export(rep, what, cfg.output)
        row = table_row(rep)
        cls = sum(rep.stage_counts.get("classification", [0, 0]))
        print(f"{f_L:g}-{f_H:g}\t{rep.start_source}\t{cls}\t{rep.in_band_max_dB:.2f}\t{rep.bw_GHz:.3f}\t"
              f"{rep.bw_percent:.1f}\t{row[1]:.2f}\t{rep.fine_equivalent:.1f}")


if __name__ == "__main__":
    main()
