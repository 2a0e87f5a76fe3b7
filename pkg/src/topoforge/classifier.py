"""Scale-optimizing classifier for quasi-random candidates and the candidate database."""
from __future__ import annotations

import json
import logging
import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import BudgetExhausted, EmptyDatabase
from .geometry import (
    DEFAULT_FIXED,
    DesignVector,
    FixedParams,
    GenerationRanges,
    design_clearance,
    random_design,
    scale_design,
)
from .scaling import ScalingModel, alpha, shifted_values
from .simbackend import Backend, Fidelity, FrequencyGrid, ResponseCurve, evaluate

log = logging.getLogger("topoforge.classifier")

GRID_POINTS = 201
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
# relative width (w.r.t. c0) at which golden-section refinement stops
REFINE_WIDTH = 1e-10
N_REFINE = 5


@dataclass(frozen=True)
class ClassifierSpec:
    f_L: float
    f_H: float
    E_t: float = -5.0

    def __post_init__(self):
        if not self.f_L < self.f_H:
            raise ValueError("f_L must be below f_H")
        if not self.E_t < 0:
            raise ValueError("acceptance threshold must be negative (dB)")

    @property
    def key(self) -> str:
        return f"{self.f_L:g}-{self.f_H:g}-{self.E_t:g}"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    c_star: float
    U_q: float

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "c_star": self.c_star, "U_q": self.U_q}


@dataclass(eq=False)
class CandidateRecord:
    id: str
    design: DesignVector
    coarse_curve: ResponseCurve
    verdicts: dict = field(default_factory=dict)
    seed: int | None = None
    timestamp: float = 0.0
    spec_key: str = ""

    @property
    def c_stored(self) -> float:
        return self.design.c

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "seed": self.seed,
                "timestamp": self.timestamp,
                "spec": self.spec_key,
                "design": self.design.to_array().tolist(),
                "grid": self.coarse_curve.grid.to_dict(),
                "curve": self.coarse_curve.values.tolist(),
                "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "CandidateRecord":
        d = json.loads(line)
        grid = FrequencyGrid(**d["grid"])
        return cls(
            id=d["id"],
            design=DesignVector.from_array(d["design"]),
            coarse_curve=ResponseCurve(grid, np.array(d["curve"])),
            verdicts={k: Verdict(**v) for k, v in d.get("verdicts", {}).items()},
            seed=d.get("seed"),
            timestamp=d.get("timestamp", 0.0),
            spec_key=d.get("spec", ""),
        )


class CandidateDatabase:
    """Append-only JSON-lines store; later lines for an id supersede earlier ones."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._records: dict[str, CandidateRecord] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with open(self.path) as fh:
                for line in fh:
                    if line.strip():
                        rec = CandidateRecord.from_json(line)
                        self._records[rec.id] = rec

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[CandidateRecord]:
        return iter(list(self._records.values()))

    def __contains__(self, rid) -> bool:
        return rid in self._records

    def get(self, rid: str) -> CandidateRecord:
        return self._records[rid]

    def append(self, record: CandidateRecord) -> None:
        with self._lock:
            self._records[record.id] = record
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a") as fh:
                    fh.write(record.to_json() + "\n")

    def compact(self, keep=None) -> int:
        """Rewrite the file with one line per record (optionally filtered); returns records dropped."""
        with self._lock:
            before = len(self._records)
            if keep is not None:
                self._records = {k: r for k, r in self._records.items() if keep(r)}
            if self.path is not None:
                tmp = self.path.with_suffix(self.path.suffix + ".tmp")
                with open(tmp, "w") as fh:
                    for rec in self._records.values():
                        fh.write(rec.to_json() + "\n")
                tmp.replace(self.path)
            return before - len(self._records)


# -- objective and 1-D search ---------------------------------------------------------


def _band_freqs(curve: ResponseCurve, spec: ClassifierSpec) -> np.ndarray:
    return curve.freqs[curve.grid.band_mask(spec.f_L, spec.f_H)]


def _objective_vec(curve, model, cs, spec, c_stored, band_f):
    ratio = alpha(model, np.asarray(cs, dtype=float)) / alpha(model, c_stored)
    return -spec.E_t + shifted_values(curve, ratio, band_f).max(axis=-1)


def classifier_objective(curve: ResponseCurve, model: ScalingModel, c: float, spec: ClassifierSpec,
                         c_stored: float | None = None) -> float:
    """``-E_t`` plus the in-band maximum of the surrogate response at scale ``c``."""
    c_stored = model.c0 if c_stored is None else c_stored
    return float(_objective_vec(curve, model, c, spec, c_stored, _band_freqs(curve, spec)))


def default_c_range(model: ScalingModel) -> tuple[float, float]:
    return 0.5 * model.c0, 2.0 * model.c0


def optimize_scale(curve: ResponseCurve, model: ScalingModel, spec: ClassifierSpec,
                   c_range: tuple[float, float] | None = None, c_stored: float | None = None) -> tuple[float, float]:
    """Grid scan then golden-section refinement around the best grid minima. No simulations."""
    lo, hi = c_range if c_range is not None else default_c_range(model)
    c_stored = model.c0 if c_stored is None else c_stored
    band_f = _band_freqs(curve, spec)

    def obj(c):
        return float(_objective_vec(curve, model, c, spec, c_stored, band_f))

    cs = np.linspace(lo, hi, GRID_POINTS)
    u = _objective_vec(curve, model, cs, spec, c_stored, band_f)
    best_i = int(np.argmin(u))  # first index -> smaller c on ties
    best_c, best_u = float(cs[best_i]), float(u[best_i])

    is_min = np.r_[True, u[1:] <= u[:-1]] & np.r_[u[:-1] <= u[1:], True]
    candidates = np.flatnonzero(is_min)
    candidates = candidates[np.argsort(u[candidates], kind="stable")][:N_REFINE]
    tol = REFINE_WIDTH * model.c0
    for i in candidates:
        a, b = float(cs[max(i - 1, 0)]), float(cs[min(i + 1, GRID_POINTS - 1)])
        c, uc = _golden(obj, a, b, tol)
        if uc < best_u or (uc == best_u and c < best_c):
            best_c, best_u = c, uc
    return best_c, best_u


def _golden(fn, a: float, b: float, tol: float) -> tuple[float, float]:
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = fn(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def feasible_c_range(design: DesignVector, c_range: tuple[float, float], fixed: FixedParams = DEFAULT_FIXED,
                     margin: float = 1.001) -> tuple[float, float]:
    """Raise the lower scale limit so the feed keeps clearance >= r2 (clearance grows linearly with c)."""
    lo, hi = c_range
    clearance = design_clearance(design)
    if clearance > 0:
        lo = max(lo, margin * fixed.r2 * design.c / clearance)
    return lo, max(lo, hi)


def classify(record: CandidateRecord, model: ScalingModel, spec: ClassifierSpec,
             c_range: tuple[float, float] | None = None, fixed: FixedParams = DEFAULT_FIXED) -> Verdict:
    c_range = feasible_c_range(record.design, c_range or default_c_range(model), fixed)
    c_star, u_star = optimize_scale(record.coarse_curve, model, spec, c_range, c_stored=record.c_stored)
    verdict = Verdict(bool(u_star <= 0.0), c_star, u_star)
    record.verdicts[spec.key] = verdict
    return verdict


def accepted_design(record: CandidateRecord, verdict: Verdict) -> DesignVector:
    return scale_design(record.design, verdict.c_star)


def generate_until_accepted(
    rng: np.random.Generator,
    backend: Backend,
    model: ScalingModel,
    spec: ClassifierSpec,
    budget: int,
    db: CandidateDatabase | None = None,
    grid: FrequencyGrid = FrequencyGrid(),
    L: int = 25,
    ranges: GenerationRanges = GenerationRanges(),
    seed: int | None = None,
    fixed: FixedParams = DEFAULT_FIXED,
) -> tuple[DesignVector, list[CandidateRecord]]:
    """Draw, simulate (one coarse run each) and classify candidates until one is accepted."""
    db = db if db is not None else CandidateDatabase()
    records: list[CandidateRecord] = []
    for n in range(budget):
        x = random_design(rng, L, ranges, model.c0, fixed)
        curve = evaluate(backend, x, grid, Fidelity.COARSE)
        rec = CandidateRecord(f"s{seed}-{len(db):06d}", x, curve, seed=seed, timestamp=time.time(), spec_key=spec.key)
        verdict = classify(rec, model, spec)
        db.append(rec)
        records.append(rec)
        if verdict.accepted:
            log.info("candidate %s accepted after %d draws: c*=%.3f U_q=%.3f", rec.id, n + 1, verdict.c_star, verdict.U_q)
            return accepted_design(rec, verdict), records
    raise BudgetExhausted(f"no acceptable candidate within {budget} coarse simulations")


@dataclass(frozen=True)
class ScanResult:
    record: CandidateRecord
    c_star: float
    U_q: float

    @property
    def accepted(self) -> bool:
        return self.U_q <= 0.0


def warm_start_scan(db: CandidateDatabase, model: ScalingModel, spec: ClassifierSpec,
                    c_range: tuple[float, float] | None = None) -> list[ScanResult]:
    """Re-classify every stored record for a new specification; costs no simulations."""
    if len(db) == 0:
        raise EmptyDatabase("candidate database is empty")
    out = []
    for rec in db:
        if rec.coarse_curve.grid.f_min > spec.f_L or rec.coarse_curve.grid.f_max < spec.f_H:
            continue
        v = classify(rec, model, spec, c_range)
        out.append(ScanResult(rec, v.c_star, v.U_q))
    out.sort(key=lambda r: r.U_q)
    return out
