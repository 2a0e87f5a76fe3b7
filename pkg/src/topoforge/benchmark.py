"""Benchmark harness comparing the full pipeline with the baseline methods.

Methods: ``i`` trust-region optimization from the best stored candidate at the
reference size, ``ii`` EA whose initial members are rescaled by the classifier,
``iii`` EA without rescaling, ``full`` the complete pipeline. Every method gets
its own simulation counter; the shared setup (scaling fit and the stored
candidate pool) is charged to none of them.
"""
from __future__ import annotations

import dataclasses
import logging
import time

import numpy as np

from .baselines import EAConfig, ea_optimize, tr_noscale
from .classifier import CandidateDatabase, CandidateRecord, classify
from .geometry import random_design
from .pipeline import RunConfig, obtain_scaling_model, run_full
from .simbackend import Fidelity, evaluate, make_backend

log = logging.getLogger("topoforge.bench")

BENCH_HEADER = ["method", "seed", "n_coarse", "n_fine", "fine_equivalent", "final_U", "method_reported_sims",
                "reason", "wall_s"]
METHODS = ("i", "ii", "iii", "full")


def candidate_pool(cfg: RunConfig, backend, rng: np.random.Generator, n: int) -> CandidateDatabase:
    db = CandidateDatabase()
    for k in range(n):
        x = random_design(rng, cfg.L, c0=cfg.c0, fixed=backend.fixed)
        db.append(CandidateRecord(f"b{cfg.seed}-{k:04d}", x, evaluate(backend, x, cfg.grid, Fidelity.COARSE),
                                  seed=cfg.seed))
    return db


def run_benchmark(cfg: RunConfig, methods=METHODS, seeds=range(10), budget_fine_eq: float = 700.0,
                  ea_config: EAConfig | None = None) -> list[dict]:
    rows = []
    for seed in seeds:
        scfg = dataclasses.replace(cfg, seed=int(seed), scaling="", db="")
        rng = np.random.default_rng(scfg.seed)
        setup = make_backend(scfg.backend)
        model = obtain_scaling_model(scfg, setup, rng)
        D = 2 * scfg.L + 3
        pool = candidate_pool(scfg, setup, rng, 2 * D)
        spec = scfg.classifier_spec
        ranked = sorted(pool, key=lambda r: classify(r, model, spec, fixed=setup.fixed).U_q)
        best = ranked[0]
        obj = scfg.objective
        per_coarse = setup.counter.cost_coarse_s / setup.counter.cost_fine_s
        ea_budget = int(budget_fine_eq / per_coarse)
        base_ea = ea_config if ea_config is not None else EAConfig()
        ea_cfg = dataclasses.replace(base_ea, max_sims=ea_budget)

        for method in methods:
            backend = make_backend(scfg.backend)
            t0 = time.time()
            if method == "full":
                db = CandidateDatabase()
                for rec in pool:
                    db.append(rec)
                rep = run_full(scfg, backend, db, model)
                final_u, reported, reason = rep.U_fine, rep.n_coarse + rep.n_fine, "goal" if rep.meets_goal else "miss"
            elif method == "i":
                res = tr_noscale(backend, best.design, obj, scfg.c0, scfg.grid, scfg.coarse_budget,
                                 scfg.fine_budget, scfg.workers)
                final_u, reported, reason = res.stage2.U_star, res.n_coarse + res.n_fine, res.stage2.reason
            elif method in ("ii", "iii"):
                _, res = ea_optimize(backend, ranked, obj, ea_cfg, scaling=(method == "ii"), model=model,
                                     grid=scfg.grid, rng=np.random.default_rng([scfg.seed, len(method)]),
                                     workers=scfg.workers)
                final_u, reported, reason = res.U_best, res.n_evaluations, res.reason
            else:
                raise ValueError(f"unknown method {method!r}")
            c = backend.counter
            rows.append({
                "method": method, "seed": scfg.seed, "n_coarse": c.n_coarse, "n_fine": c.n_fine,
                "fine_equivalent": c.equivalent_fine, "final_U": final_u,
                "method_reported_sims": reported, "reason": reason, "wall_s": round(time.time() - t0, 3),
            })
            log.info("benchmark seed %d method %s: U=%.4g coarse=%d fine=%d", scfg.seed, method, final_u,
                     c.n_coarse, c.n_fine)
    return rows


def summarize(rows: list[dict]) -> dict[str, dict]:
    out = {}
    for m in dict.fromkeys(r["method"] for r in rows):
        sel = [r for r in rows if r["method"] == m]
        out[m] = {
            "median_U": float(np.median([r["final_U"] for r in sel])),
            "median_fine_eq": float(np.median([r["fine_equivalent"] for r in sel])),
            "runs": len(sel),
        }
    return out
