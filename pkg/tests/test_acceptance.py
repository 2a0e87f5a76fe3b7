"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are printed
with output capture disabled so they show up in the normal log.
"""
import csv
import time

import numpy as np
import pytest

from helpers import FunctionBackend, array_design, filtered_is_simple, quadratic_backend, scalar_clearance
from topoforge import benchmark as bench_mod
from topoforge.classifier import (
    CandidateDatabase,
    CandidateRecord,
    ClassifierSpec,
    default_c_range,
    feasible_c_range,
    optimize_scale,
    warm_start_scan,
)
from topoforge.cli import main
from topoforge.geometry import Bounds, build_layout, is_simple, make_bounds, random_design
from topoforge.pipeline import RunConfig, run_full
from topoforge.scaling import fit_beta, training_designs
from topoforge.simbackend import Fidelity, FrequencyGrid, MockBackend, evaluate
from topoforge.troptim import BandObjective, fd_jacobian, tr_optimize, update_radius
from topoforge.yieldmc import PerturbationSpec, estimate_yield_direct, estimate_yield_surrogate

pytestmark = pytest.mark.slow

GRID = FrequencyGrid()
SEEDS = range(10)


@pytest.fixture
def verdict(capsys):
    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        assert ok, detail

    return emit


# -- 1: geometry ---------------------------------------------------------------------


def test_c1_geometry(verdict):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    layouts = [build_layout(random_design(rng)) for _ in range(10_000)]
    simple = [is_simple(lay.vertices) for lay in layouts]
    wall = time.perf_counter() - t0

    r2 = layouts[0].fixed.r2
    oracle_simple = sum(filtered_is_simple(lay.vertices) for lay in layouts)
    clear = np.array([scalar_clearance(lay.feed, lay.vertices) for lay in layouts])
    ok = all(simple) and oracle_simple == len(layouts) and bool(np.all(clear >= r2)) and wall < 10.0
    verdict(1, ok, f"10000 designs, oracle simple {oracle_simple}/10000, min clearance {clear.min():.4f} mm "
                   f"(r2 {r2}), generation+check {wall:.2f} s")


# -- 2: scaling law ------------------------------------------------------------------


def test_c2_scaling_recovery(verdict):
    be = MockBackend()
    t0 = time.perf_counter()
    designs = training_designs(np.random.default_rng(7), 3, 25, 30.0, (0.0, -5.0, 15.0))
    model = fit_beta(designs, be, GRID, 30.0, (0.0, -5.0, 15.0))
    wall = time.perf_counter() - t0
    b0, b1, b2 = model.beta
    cs = np.linspace(20.0, 50.0, 301)
    a = b0 * cs**2 + b1 * cs + b2
    quad = float(np.max(np.abs(b0 * cs**2)))
    dev = float(np.max(np.abs(a - cs / 30.0)))
    rel_b1 = abs(b1 * 30.0 - 1.0)
    ok = rel_b1 < 0.05 and quad < 0.05 and abs(b2) < 0.05 and dev < 0.02 and wall < 60 and be.counter.n_coarse == 9
    verdict(2, ok, f"beta1 off by {100 * rel_b1:.2f}%, max|b0 c^2| {quad:.4f}, |b2| {abs(b2):.4f}, "
                   f"max|alpha-c/30| {dev:.4f}, {be.counter.n_coarse} coarse sims, {wall:.2f} s")


# -- 3: classifier argmin ------------------------------------------------------------


def _grid_oracle(rec, model, spec, lo, hi, n=10_001):
    cs = np.linspace(lo, hi, n)
    b0, b1, b2 = model.beta
    ratio = (b0 * cs**2 + b1 * cs + b2) / (b0 * rec.c_stored**2 + b1 * rec.c_stored + b2)
    curve = rec.coarse_curve
    f_band = curve.freqs[curve.grid.band_mask(spec.f_L, spec.f_H)]
    best = np.inf
    for r in ratio:
        best = min(best, -spec.E_t + float(np.interp(r * f_band, curve.freqs, curve.values).max()))
    return best


def test_c3_classifier_argmin(verdict):
    be = MockBackend()
    rng = np.random.default_rng(3)
    model = fit_beta(training_designs(rng), be, GRID)
    spec = ClassifierSpec(5.0, 6.0)
    db = CandidateDatabase()
    worst_excess, worst_abs = -np.inf, 0.0
    for k in range(100):
        x = random_design(rng)
        rec = CandidateRecord(f"a{k}", x, evaluate(be, x, GRID, Fidelity.COARSE))
        db.append(rec)
        lo, hi = feasible_c_range(x, default_c_range(model))
        _, u_ours = optimize_scale(rec.coarse_curve, model, spec, (lo, hi), rec.c_stored)
        u_grid = _grid_oracle(rec, model, spec, lo, hi)
        worst_excess = max(worst_excess, u_ours - u_grid)
        worst_abs = max(worst_abs, abs(u_ours - u_grid))
    snap = be.counter.snapshot()
    warm_start_scan(db, model, ClassifierSpec(6.0, 7.0))
    unchanged = be.counter.snapshot() == snap
    ok = worst_excess <= 1e-6 and unchanged
    verdict(3, ok, f"max(ours - grid) {worst_excess:.2e} dB, max|ours - grid| {worst_abs:.2e} dB over 100 records; "
                   f"warm scan counters unchanged: {unchanged}")


# -- 4: trust-region mechanics -------------------------------------------------------

D11 = 11
UNIT = Bounds(np.zeros(D11), np.ones(D11))
TWO = FrequencyGrid(1.0, 2.0, 2)


def _start(first):
    return array_design(np.r_[first, np.full(D11 - 1, 0.5)])


def _two_sample(offset, slope):
    return FunctionBackend(lambda a, f: np.array([-11.0 + offset + slope * (a[0] - 0.5),
                                                  -11.0 + offset - slope * (a[0] - 0.5)]))


def test_c4_trust_region(verdict):
    checks = {}
    checks["radius rules"] = (update_radius(1.0, 0.76) == 2.0 and update_radius(1.0, 0.24) == pytest.approx(1 / 3)
                              and update_radius(1.0, 0.75) == 1.0 and update_radius(1.0, 0.25) == 1.0)
    obj = BandObjective(1.0, 2.0)

    kinked = FunctionBackend(lambda a, f: np.full(2, -5.0 - 3 * (a[0] - 0.5) + 30 * abs(a[0] - 0.5)))
    r = tr_optimize(kinked, _start(0.5), UNIT, obj, grid=TWO)
    lams = [h.lam for h in r.history]
    checks["radius stop"] = (r.reason == "radius" and np.allclose(lams, [3.0**-k for k in range(1, len(lams) + 1)])
                             and lams[-1] < 1e-2 <= lams[-2])
    checks["cost 2D+1 / +1"] = r.n_sims == 1 + 2 * D11 + r.n_candidates == kinked.counter.n_coarse

    r = tr_optimize(_two_sample(1.0, 10.0), _start(0.505), UNIT, obj, grid=TWO)
    checks["step stop"] = r.reason == "step" and r.history[-1].step_norm < 1e-2
    r = tr_optimize(_two_sample(1.0, 0.1), _start(0.8), UNIT, obj, grid=TWO)
    checks["objective stop"] = r.reason == "objective"
    r = tr_optimize(_two_sample(1.0, 10.0), _start(0.8), UNIT, obj, grid=TWO, lam0=0.05)
    checks["expand x2"] = r.history[0].rho == pytest.approx(1.0) and r.history[0].lam == pytest.approx(0.1)

    worst, worst_it = 0.0, 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x_star = rng.uniform(0.1, 0.9, 10)
        be, g = quadratic_backend(x_star)
        res = tr_optimize(be, array_design(np.r_[rng.uniform(0, 1, 10), 0.5]), UNIT,
                          BandObjective(g.f_min, g.f_max), grid=g, max_iter=50)
        worst = max(worst, float(np.max(np.abs(res.x_star.to_array()[:10] - x_star))))
        worst_it = max(worst_it, res.iterations)
        if res.n_sims != 1 + 2 * D11 * res.n_jacobians + res.n_candidates:
            checks["cost formula (quadratic)"] = False
    checks["10-D quadratic"] = worst < 1e-3 and worst_it <= 50
    failed = [k for k, v in checks.items() if not v]
    verdict(4, not failed, f"{len(checks) - len(failed)}/{len(checks)} mechanics checks; 10-D quadratic worst "
                           f"|x-x*|inf {worst:.2e} in <= {worst_it} iterations" + (f"; failed {failed}" if failed else ""))


# -- 5: finite-difference Jacobian ---------------------------------------------------


def test_c5_fd_jacobian(verdict):
    be = MockBackend()
    ratios, rel = [], []
    for seed in range(5):
        x = random_design(np.random.default_rng(seed))
        b = make_bounds(x)
        x, _ = b.clip(x)
        J = {s: fd_jacobian(be, x, s, Fidelity.FINE, GRID, b).J for s in (0.02, 0.01, 1e-4)}
        ref = J[1e-4]
        norm = np.linalg.norm(ref, axis=0)
        live = norm > 1e-6 * norm.max()
        e02 = np.linalg.norm(J[0.02] - ref, axis=0)[live]
        e01 = np.linalg.norm(J[0.01] - ref, axis=0)[live]
        ratios.append(float(np.median(e02 / e01)))
        rel.append(float(np.median(e02 / norm[live])))
    ok = min(ratios) >= 3.5 and max(rel) < 0.05
    verdict(5, ok, f"median column error ratio sigma .02/.01 >= {min(ratios):.3f} (5 designs); "
                   f"median relative error at .02 <= {max(rel):.2e}")


# -- 6: end to end -------------------------------------------------------------------


@pytest.fixture(scope="module")
def e2e(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    reports = []
    t0 = time.perf_counter()
    for s in SEEDS:
        out = root / f"seed{s}"
        cfg = RunConfig(seed=s, output=str(out), scaling=str(out / "scaling.json"))
        reports.append(run_full(cfg))
    wall = time.perf_counter() - t0
    base = RunConfig(seed=0, output=str(root / "seed0"), scaling=str(root / "seed0" / "scaling.json"))
    cfg67 = RunConfig(**{**base.to_dict(), "f_L": 6.0, "f_H": 7.0, "output": str(root / "band67"),
                         "db": str(base.db_path())})
    warm = run_full(cfg67)
    return reports, warm, wall


def test_c6_end_to_end(verdict, e2e):
    reports, warm, wall = e2e
    met = sum(r.meets_goal for r in reports)
    worst_cost = max(r.coarse_equivalent for r in reports)
    cls = warm.stage_counts.get("classification", [0, 0])
    clip = warm.stage_counts.get("clip", [0, 0])
    warm_sims = sum(cls) + sum(clip)
    ok = met >= 8 and worst_cost <= 2000 and wall < 300 and warm.start_source == "warm" and warm_sims <= 2
    maxes = ", ".join(f"{r.in_band_max_dB:.2f}" for r in reports)
    verdict(6, ok, f"goal met on {met}/10 seeds (in-band max dB: {maxes}); max cost {worst_cost:.1f} coarse-eq; "
                   f"{wall:.1f} s; 6-7 GHz {warm.start_source} start with {warm_sims} classification-stage sims "
                   f"(in-band max {warm.in_band_max_dB:.2f} dB)")


# -- 7: yield ------------------------------------------------------------------------


def test_c7_yield(verdict, e2e):
    reports, _, _ = e2e
    chosen = [r for r in reports if r.meets_goal][:2]
    be = MockBackend()
    band = (5.0, 6.0)
    lines, ok = [], bool(chosen)
    for rep in chosen:
        x = array_design(rep.x_f_star)
        nominal = evaluate(be, x, GRID, Fidelity.FINE).band_max(*band)
        for goal, tag in ((-10.0, "goal -10"), (nominal + 0.05, "marginal")):
            for spec in (PerturbationSpec.uniform(0.05), PerturbationSpec.gaussian(0.03)):
                s = estimate_yield_surrogate(be, x, spec, band, goal)
                d = estimate_yield_direct(be, x, PerturbationSpec(spec.distribution, spec.magnitude, n_samples=2000),
                                          band, goal)
                ok &= abs(s.Y - d.Y) <= 0.03
                lines.append(f"{tag} {spec.distribution}: {s.Y:.4f} vs {d.Y:.4f}")
        ys = [estimate_yield_surrogate(be, x, PerturbationSpec.gaussian(sd), band, nominal + 0.05).Y
              for sd in (0.01, 0.03, 0.05)]
        mono = ys[0] >= ys[1] >= ys[2]
        ok &= mono
        lines.append(f"stdev .01/.03/.05 -> {ys[0]:.4f}/{ys[1]:.4f}/{ys[2]:.4f}")
    verdict(7, ok, f"surrogate(10k) vs direct(2k) on {len(chosen)} optimized designs: " + "; ".join(lines))


# -- 8: benchmark --------------------------------------------------------------------


class TallyMock(MockBackend):
    """Counts simulate() calls on its own, independently of the shared counter."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.tally = {Fidelity.COARSE: 0, Fidelity.FINE: 0}

    def simulate(self, x, grid, fidelity):
        self.tally[fidelity] += 1
        return super().simulate(x, grid, fidelity)


@pytest.fixture(scope="module")
def bench(tmp_path_factory, request):
    made = []

    def factory(spec, counter=None, fixed=None):
        be = TallyMock()
        made.append(be)
        return be

    mp = pytest.MonkeyPatch()
    mp.setattr(bench_mod, "make_backend", factory)
    out = tmp_path_factory.mktemp("bench") / "benchmark.csv"
    try:
        code = main(["benchmark", "--seeds", "10", "--seed", "0", "--out", str(out)])
    finally:
        mp.undo()
    rows = list(csv.DictReader(open(out)))
    return code, rows, made


def test_c8_benchmark(verdict, bench):
    code, rows, made = bench
    # per seed: one setup backend, then one backend per method in order
    per_seed = 1 + len(bench_mod.METHODS)
    mismatches = 0
    for k, row in enumerate(rows):
        be = made[(k // 4) * per_seed + 1 + k % 4]
        n_c, n_f = be.tally[Fidelity.COARSE], be.tally[Fidelity.FINE]
        mismatches += (int(row["n_coarse"]), int(row["n_fine"])) != (n_c, n_f)
        mismatches += int(row["method_reported_sims"]) != n_c + n_f
        mismatches += float(row["fine_equivalent"]) != be.counter.equivalent_fine
    med = {m: float(np.median([float(r["final_U"]) for r in rows if r["method"] == m])) for m in bench_mod.METHODS}
    complete = code == 0 and len(rows) == 40 and {r["method"] for r in rows} == set(bench_mod.METHODS)
    ok = complete and mismatches == 0 and med["full"] <= med["iii"]
    verdict(8, ok, f"{len(rows)} rows, {mismatches} cost mismatches against independent tallies; median final U "
                   + ", ".join(f"{m}={v:.4g}" for m, v in med.items()))


# -- 9: accounting identity ----------------------------------------------------------


def test_c9_accounting(verdict, e2e, bench):
    reports, warm, _ = e2e
    _, rows, _ = bench
    errs = [abs(r.fine_equivalent - (r.n_coarse * 60 / 110 + r.n_fine)) for r in [*reports, warm]]
    errs += [abs(float(r["fine_equivalent"]) - (int(r["n_coarse"]) * 60 / 110 + int(r["n_fine"]))) for r in rows]
    worst = max(errs)
    verdict(9, worst <= 1e-9, f"{len(errs)} runs, max |reported - (n_c*60/110 + n_f)| = {worst:.1e}")
