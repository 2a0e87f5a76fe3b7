"""Command-line entry point: ``topoforge <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .classifier import CandidateDatabase, classify, generate_until_accepted
from .errors import TopoForgeError
from .geometry import DesignVector, make_bounds
from .pipeline import RunConfig, RunReport, achieved_band, bandwidth, export, obtain_scaling_model, run_full
from .scaling import ScalingModel
from .simbackend import make_backend
from .troptim import bi_stage_optimize
from .yieldmc import PerturbationSpec, estimate_yield_direct, estimate_yield_surrogate

log = logging.getLogger("topoforge")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v progress, -vv every simulation")
    p.add_argument("--config", help="JSON run configuration; flags override its keys")
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "delta":
            p.add_argument(flag, type=lambda s: [float(v) for v in s.split(",")], default=None,
                           help="comma-separated scale offsets")
        elif f.name in ("f_L", "f_H"):
            continue  # set through --band
        else:
            typ = type(f.default) if f.default is not dataclasses.MISSING else str
            p.add_argument(flag, type=typ, default=None)
    p.add_argument("--band", help="f_L,f_H in GHz")


def config_from_args(args) -> RunConfig:
    base = RunConfig.load(args.config).to_dict() if getattr(args, "config", None) else RunConfig().to_dict()
    for name in base:
        v = getattr(args, name, None)
        if v is not None:
            base[name] = v
    if getattr(args, "band", None):
        base["f_L"], base["f_H"] = (float(v) for v in args.band.split(","))
    return RunConfig.from_dict(base)


def _read_design(path) -> DesignVector:
    return DesignVector.from_text(Path(path).read_text())


def _model(cfg: RunConfig, backend) -> ScalingModel:
    return obtain_scaling_model(cfg, backend, np.random.default_rng(cfg.seed))


def cmd_fit_scaling(args) -> int:
    cfg = config_from_args(args)
    if not cfg.scaling:
        cfg.scaling = str(Path(cfg.output) / "scaling.json")
    Path(cfg.scaling).unlink(missing_ok=True)
    backend = make_backend(cfg.backend)
    model = _model(cfg, backend)
    print(json.dumps({"beta": model.beta.tolist(), "residual": model.training_meta.get("residual"),
                      "n_coarse": backend.counter.n_coarse, "path": cfg.scaling}))
    return 0


def cmd_generate(args) -> int:
    cfg = config_from_args(args)
    backend = make_backend(cfg.backend)
    model = _model(cfg, backend)
    db = CandidateDatabase(cfg.db_path())
    rng = np.random.default_rng(cfg.seed)
    x0, recs = generate_until_accepted(rng, backend, model, cfg.classifier_spec, cfg.generation_budget, db,
                                       cfg.grid, cfg.L, seed=cfg.seed, fixed=backend.fixed)
    print(f"accepted {recs[-1].id} after {len(recs)} candidates; c*={x0.c:.4f}")
    if args.out:
        Path(args.out).write_text(x0.to_text() + "\n")
    return 0


def cmd_classify(args) -> int:
    cfg = config_from_args(args)
    backend = make_backend(cfg.backend)
    model = _model(cfg, backend)
    db = CandidateDatabase(cfg.db_path())
    spec = cfg.classifier_spec
    n_acc = 0
    for rec in db:
        v = classify(rec, model, spec, fixed=backend.fixed)
        n_acc += v.accepted
        print(f"{rec.id}\t{'accept' if v.accepted else 'reject'}\tc*={v.c_star:.4f}\tU_q={v.U_q:.4f}")
        db.append(rec)
    print(f"{n_acc}/{len(db)} accepted for {spec.key}")
    return 0


def cmd_optimize(args) -> int:
    cfg = config_from_args(args)
    backend = make_backend(cfg.backend)
    x0 = _read_design(args.design)
    bounds = make_bounds(x0)
    x0, _ = bounds.clip(x0)
    res = bi_stage_optimize(backend, x0, bounds, cfg.objective, cfg.grid, cfg.sigma0, cfg.coarse_budget,
                            cfg.fine_budget, workers=cfg.workers)
    curve = res.stage2.curve_star
    m = curve.band_max(cfg.f_L, cfg.f_H)
    bw, pct = bandwidth(achieved_band(curve, cfg.f_L, cfg.f_H, cfg.R_goal))
    print(f"in-band max {m:.3f} dB  BW {bw:.3f} GHz ({pct:.1f}%)  coarse={res.n_coarse} fine={res.n_fine} "
          f"fine-eq={res.fine_equivalent:.1f}")
    if args.out:
        Path(args.out).write_text(res.x_f_star.to_text() + "\n")
    return 0 if m <= cfg.R_goal else 1


def cmd_yield(args) -> int:
    cfg = config_from_args(args)
    backend = make_backend(cfg.backend)
    x = _read_design(args.design)
    spec = PerturbationSpec.parse(args.dist, n_samples=args.n, seed=cfg.seed)
    band = (cfg.f_L, cfg.f_H)
    ys = estimate_yield_surrogate(backend, x, spec, band, cfg.R_goal, cfg.sigma0, cfg.grid, workers=cfg.workers)
    out = {"Y": ys.Y, "n_samples": ys.n_samples, "n_satisfied": ys.n_satisfied, "n_sims": ys.n_sims}
    if args.validate:
        small = dataclasses.replace(spec, n_samples=args.validate)
        yd = estimate_yield_direct(backend, x, small, band, cfg.R_goal, cfg.grid)
        out.update(Y_direct=yd.Y, n_direct=yd.n_samples, delta=ys.Y - yd.Y)
    print(json.dumps(out))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample", "u1_dB"])
            w.writerows((i, repr(float(u))) for i, u in enumerate(ys.u1))
    return 0


def cmd_benchmark(args) -> int:
    from .benchmark import BENCH_HEADER, run_benchmark

    cfg = config_from_args(args)
    methods = [m.strip() for m in args.methods.split(",")]
    rows = run_benchmark(cfg, methods, range(cfg.seed, cfg.seed + args.seeds), args.budget_fine_eq)
    out = Path(args.out) if args.out else Path(cfg.output) / "benchmark.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_HEADER)
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print("\t".join(str(r[k]) for k in BENCH_HEADER))
    print(f"wrote {out}")
    return 0


def cmd_run(args) -> int:
    cfg = config_from_args(args)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")
    report = run_full(cfg)
    report.save(out / "report.json")
    for what in ("curves", "geometry", "table"):
        export(report, what, out)
    print(f"in-band max {report.in_band_max_dB:.3f} dB  BW {report.bw_GHz:.3f} GHz ({report.bw_percent:.1f}%)  "
          f"coarse={report.n_coarse} fine={report.n_fine} fine-eq={report.fine_equivalent:.1f}  "
          f"start={report.start_source}")
    return 0 if report.meets_goal else 1


def cmd_export(args) -> int:
    report = RunReport.load(args.report)
    for p in export(report, args.what, args.out):
        print(p)
    return 0


def cmd_db(args) -> int:
    cfg = config_from_args(args)
    db = CandidateDatabase(cfg.db_path())
    if args.action == "list":
        for rec in db:
            verdicts = ",".join(f"{k}:{'A' if v.accepted else 'R'}" for k, v in rec.verdicts.items())
            print(f"{rec.id}\tc={rec.design.c:.3f}\t{verdicts}")
    elif args.action == "show":
        print(db.get(args.id).to_json())
    elif args.action == "prune":
        dropped = db.compact(lambda r: any(v.accepted for v in r.verdicts.values()) if args.rejected else None)
        print(f"dropped {dropped} records; {len(db)} kept")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topoforge", description="Antenna topology generation and optimization")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        _add_config_flags(sp)
        sp.set_defaults(func=fn)
        return sp

    add("fit-scaling", cmd_fit_scaling, "fit the size-to-frequency scaling model")
    sp = add("generate", cmd_generate, "draw candidates until one is accepted")
    sp.add_argument("--out", help="write the accepted, rescaled design here")
    add("classify", cmd_classify, "re-classify every stored candidate (no simulations)")
    sp = add("optimize", cmd_optimize, "bi-stage trust-region optimization of a design file")
    sp.add_argument("--design", required=True)
    sp.add_argument("--out")
    sp = add("yield", cmd_yield, "Monte Carlo yield of a design")
    sp.add_argument("--design", required=True)
    sp.add_argument("--dist", default="gaussian:0.03", help="uniform:<max mm> or gaussian:<stdev mm>")
    sp.add_argument("--n", type=int, default=10000)
    sp.add_argument("--validate", type=int, default=0, help="also run this many direct samples")
    sp.add_argument("--csv", help="dump per-sample u1")
    sp = add("benchmark", cmd_benchmark, "compare the pipeline with the baseline methods")
    sp.add_argument("--methods", default="i,ii,iii,full")
    sp.add_argument("--seeds", type=int, default=10)
    sp.add_argument("--budget-fine-eq", type=float, default=700.0)
    sp.add_argument("--out")
    add("run", cmd_run, "full pipeline; exit status 0 iff the goal level is met")
    sp = sub.add_parser("export", help="write curves, geometry or table from a saved report")
    sp.add_argument("--report", required=True)
    sp.add_argument("--what", choices=("curves", "geometry", "table"), required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("-v", "--verbose", action="count", default=0)
    sp.set_defaults(func=cmd_export)
    sp = add("db", cmd_db, "inspect the candidate database")
    sp.add_argument("action", choices=("list", "show", "prune"))
    sp.add_argument("id", nargs="?")
    sp.add_argument("--rejected", action="store_true", help="prune: drop records never accepted")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except TopoForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
