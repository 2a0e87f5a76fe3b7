"""End-to-end orchestration: scaling model, candidate screening, bi-stage optimization, reporting."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import (
    CandidateDatabase,
    CandidateRecord,
    ClassifierSpec,
    accepted_design,
    generate_until_accepted,
    warm_start_scan,
)
from .errors import EmptyDatabase, TopoForgeError
from .geometry import DesignVector, build_layout, layout_svg, make_bounds, write_vertex_csv
from .scaling import ScalingModel, fit_beta, training_designs
from .simbackend import Backend, Fidelity, FrequencyGrid, ResponseCurve, evaluate, make_backend, save_curve
from .troptim import BandObjective, bi_stage_optimize, objective_u

log = logging.getLogger("topoforge.run")

DB_ENV = "TOPOFORGE_DB"


@dataclass
class RunConfig:
    f_L: float = 5.0
    f_H: float = 6.0
    E_t: float = -5.0
    R_max: float = -11.0
    R_goal: float = -10.0
    c0: float = 30.0
    delta: list = field(default_factory=lambda: [0.0, -5.0, 15.0])
    L: int = 25
    f_min: float = 1.0
    f_max: float = 10.0
    n_points: int = 451
    backend: str = "mock"
    n_training: int = 3
    sigma0: float = 0.02
    generation_budget: int = 300  # coarse simulations for drawing candidates
    coarse_budget: int = 1400  # coarse simulations for the coarse optimization stage(s)
    fine_budget: int = 130  # fine simulations for the final stage
    seed: int = 0
    output: str = "runs/out"
    db: str = ""  # empty -> <output>/candidates.jsonl
    scaling: str = ""  # path of a saved scaling model; fitted when empty or missing
    workers: int = 1

    def __post_init__(self):
        if not self.f_L < self.f_H:
            raise ValueError("f_L must be below f_H")
        if self.R_max > self.R_goal:
            raise ValueError("R_max must not exceed R_goal")

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.f_min, self.f_max, self.n_points)

    @property
    def objective(self) -> BandObjective:
        return BandObjective(self.f_L, self.f_H, self.R_max, self.R_goal)

    @property
    def classifier_spec(self) -> ClassifierSpec:
        return ClassifierSpec(self.f_L, self.f_H, self.E_t)

    def db_path(self) -> Path:
        env = os.environ.get(DB_ENV)
        if env:
            return Path(env)
        return Path(self.db) if self.db else Path(self.output) / "candidates.jsonl"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


# -- band metrics -----------------------------------------------------------------


def achieved_band(curve: ResponseCurve, f_L: float, f_H: float, R_goal: float) -> tuple[float, float] | None:
    """Widest contiguous interval around the band centre where the response stays at or below R_goal.

    Edges are linearly interpolated between grid samples. None when the centre itself fails.
    """
    f, r = curve.freqs, curve.values
    fc = 0.5 * (f_L + f_H)
    if np.interp(fc, f, r) > R_goal:
        return None
    ok = r <= R_goal

    def cross(a, b):
        t = (R_goal - r[a]) / (r[b] - r[a])
        return float(f[a] + t * (f[b] - f[a]))

    iL = int(np.searchsorted(f, fc, side="right")) - 1  # f[iL] <= fc
    iR = iL if f[iL] == fc else iL + 1
    i0, j0 = iL, iR
    if ok[iL]:
        while iL > 0 and ok[iL - 1]:
            iL -= 1
        lo = float(f[0]) if iL == 0 else cross(iL - 1, iL)
    else:
        lo = cross(i0, j0)
    if ok[iR]:
        while iR < f.size - 1 and ok[iR + 1]:
            iR += 1
        hi = float(f[-1]) if iR == f.size - 1 else cross(iR, iR + 1)
    else:
        hi = cross(i0, j0)
    return lo, hi


def bandwidth(edges: tuple[float, float] | None) -> tuple[float, float]:
    """Absolute bandwidth (GHz) and its percentage of the achieved centre frequency."""
    if edges is None:
        return 0.0, 0.0
    lo, hi = edges
    bw = hi - lo
    return bw, 100.0 * bw / (0.5 * (lo + hi))


# -- report -----------------------------------------------------------------------


@dataclass
class RunReport:
    config: dict
    scaling_beta: list
    start_source: str  # "warm" or "generated"
    candidate_id: str
    c_star: float
    x0: list
    x_c_star: list
    x_f_star: list
    in_band_max_dB: float
    meets_goal: bool
    band_edges: list | None
    bw_GHz: float
    bw_percent: float
    U_coarse: float
    U_fine: float
    n_coarse: int
    n_fine: int
    fine_equivalent: float
    coarse_equivalent: float
    stage_counts: dict
    sigma_halved: bool
    history: list
    curves: dict  # stage -> values on the run grid
    grid: dict
    wall_s: float = 0.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "RunReport":
        return cls(**json.loads(Path(path).read_text()))

    def digest(self) -> str:
        """Hash of everything except wall time and output locations."""
        d = self.to_dict()
        d.pop("wall_s")
        d["config"] = {k: v for k, v in d["config"].items() if k not in ("output", "db", "scaling", "workers")}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def curve(self, stage: str) -> ResponseCurve:
        return ResponseCurve(FrequencyGrid(**self.grid), np.array(self.curves[stage]))


class StageError(TopoForgeError):
    """Failure inside one pipeline stage; ``stage`` names it."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage
        self.cause = exc


def _history_rows(stage: str, res) -> list[dict]:
    rows = []
    for h in res.history:
        rows.append({
            "stage": stage, "iteration": h.iteration, "U": h.U, "U_pred": h.U_pred, "rho": h.rho, "lam": h.lam,
            "accepted": h.accepted, "step": h.step_norm, "n_coarse": h.n_coarse, "n_fine": h.n_fine,
        })
    return rows


def obtain_scaling_model(cfg: RunConfig, backend: Backend, rng: np.random.Generator) -> ScalingModel:
    if cfg.scaling and Path(cfg.scaling).exists():
        return ScalingModel.load(cfg.scaling)
    designs = training_designs(rng, cfg.n_training, cfg.L, cfg.c0, tuple(cfg.delta), backend.fixed)
    model = fit_beta(designs, backend, cfg.grid, cfg.c0, tuple(cfg.delta))
    if cfg.scaling:
        Path(cfg.scaling).parent.mkdir(parents=True, exist_ok=True)
        model.save(cfg.scaling)
    return model


def select_start(cfg: RunConfig, backend: Backend, model: ScalingModel, db: CandidateDatabase,
                 rng: np.random.Generator) -> tuple[DesignVector, ResponseCurve, CandidateRecord, float, str]:
    """Warm start from the database when a stored candidate passes, otherwise draw new ones."""
    spec = cfg.classifier_spec
    try:
        scan = warm_start_scan(db, model, spec)
    except EmptyDatabase:
        scan = []
    if scan and scan[0].accepted:
        best = scan[0]
        db.append(best.record)  # persist the new verdict
        x0 = accepted_design(best.record, best.record.verdicts[spec.key])
        log.info("warm start from %s: c*=%.4f U_q=%.4f", best.record.id, best.c_star, best.U_q)
        return x0, evaluate(backend, x0, cfg.grid, Fidelity.COARSE), best.record, best.c_star, "warm"
    x0, recs = generate_until_accepted(rng, backend, model, spec, cfg.generation_budget, db, cfg.grid, cfg.L,
                                       seed=cfg.seed, fixed=backend.fixed)
    rec = recs[-1]
    return x0, evaluate(backend, x0, cfg.grid, Fidelity.COARSE), rec, rec.verdicts[spec.key].c_star, "generated"


def run_full(cfg: RunConfig, backend: Backend | None = None, db: CandidateDatabase | None = None,
             model: ScalingModel | None = None) -> RunReport:
    t0 = time.time()
    backend = backend if backend is not None else make_backend(cfg.backend)
    db = db if db is not None else CandidateDatabase(cfg.db_path())
    rng = np.random.default_rng(cfg.seed)
    counter = backend.counter
    snap0 = counter.snapshot()
    counts: dict[str, list[int]] = {}

    def stage(name, fn):
        s = counter.snapshot()
        try:
            out = fn()
        except Exception as exc:
            raise StageError(name, exc) from exc
        counts[name] = list(counter.since(s))
        return out

    if model is None:
        model = stage("scaling", lambda: obtain_scaling_model(cfg, backend, rng))
    x0, x0_curve, rec, c_star, source = stage("classification", lambda: select_start(cfg, backend, model, db, rng))
    bounds = make_bounds(x0)
    x0c, n_clip = bounds.clip(x0)
    if n_clip:
        x0_curve = stage("clip", lambda: evaluate(backend, x0c, cfg.grid, Fidelity.COARSE))
    obj = cfg.objective
    bi = stage("optimization", lambda: bi_stage_optimize(
        backend, x0c, bounds, obj, cfg.grid, cfg.sigma0, cfg.coarse_budget, cfg.fine_budget,
        x0_coarse_curve=x0_curve, workers=cfg.workers))

    fine_curve = bi.stage2.curve_star
    coarse_curve = bi.restart.curve_star if bi.restart is not None else bi.stage1.curve_star
    edges = achieved_band(fine_curve, cfg.f_L, cfg.f_H, cfg.R_goal)
    bw, bw_pct = bandwidth(edges)
    in_max = fine_curve.band_max(cfg.f_L, cfg.f_H)
    n_c, n_f = counter.since(snap0)
    history = _history_rows("coarse", bi.stage1)
    if bi.restart is not None:
        history += _history_rows("coarse-restart", bi.restart)
    history += _history_rows("fine", bi.stage2)
    report = RunReport(
        config=cfg.to_dict(),
        scaling_beta=model.beta.tolist(),
        start_source=source,
        candidate_id=rec.id,
        c_star=float(c_star),
        x0=x0c.to_array().tolist(),
        x_c_star=bi.x_c_star.to_array().tolist(),
        x_f_star=bi.x_f_star.to_array().tolist(),
        in_band_max_dB=float(in_max),
        meets_goal=bool(in_max <= cfg.R_goal),
        band_edges=list(edges) if edges is not None else None,
        bw_GHz=bw,
        bw_percent=bw_pct,
        U_coarse=objective_u(coarse_curve, obj),
        U_fine=bi.stage2.U_star,
        n_coarse=n_c,
        n_fine=n_f,
        fine_equivalent=counter.fine_equivalent(n_c, n_f),
        coarse_equivalent=n_c + n_f * counter.cost_fine_s / counter.cost_coarse_s,
        stage_counts=counts,
        sigma_halved=bi.sigma_halved,
        history=history,
        curves={"initial": x0_curve.values.tolist(), "coarse_opt": coarse_curve.values.tolist(),
                "fine_opt": fine_curve.values.tolist()},
        grid=cfg.grid.to_dict(),
        wall_s=time.time() - t0,
    )
    log.info("run finished: in-band max %.3f dB, BW %.3f GHz (%.1f%%), cost %.1f fine-equivalents",
             in_max, bw, bw_pct, report.fine_equivalent)
    return report


# -- export ---------------------------------------------------------------------------

TABLE_HEADER = ["design", "A1_mm", "f_L_GHz", "f_H_GHz", "BW_GHz", "BW_percent"]


def table_row(report: RunReport, name: str = "x_f_star") -> list:
    layout = build_layout(DesignVector.from_array(report.x_f_star))
    lo, hi = report.band_edges if report.band_edges is not None else (float("nan"), float("nan"))
    return [name, round(layout.patch_side, 4), round(lo, 4), round(hi, 4), round(report.bw_GHz, 4),
            round(report.bw_percent, 2)]


def export(report: RunReport, what: str, path) -> list[Path]:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if what == "curves":
        for stage in ("initial", "coarse_opt", "fine_opt"):
            p = out / f"curve_{stage}.csv"
            save_curve(p, report.curve(stage))
            written.append(p)
    elif what == "geometry":
        layout = build_layout(DesignVector.from_array(report.x_f_star))
        p = out / "geometry.svg"
        p.write_text(layout_svg(layout))
        q = out / "vertices.csv"
        write_vertex_csv(layout, q)
        written += [p, q]
    elif what == "table":
        p = out / "table.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TABLE_HEADER)
            w.writerow(table_row(report))
        written.append(p)
    else:
        raise ValueError(f"unknown export kind {what!r}")
    return written
