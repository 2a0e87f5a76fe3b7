"""Trust-region optimization with finite-difference linear models.

Each iteration minimizes the in-band objective of an affine model
``G(x) = R(x_j) + J (x - x_j)`` inside an infinity-norm ball of radius
``lam`` (in parameters normalized by the bound span), simulates the
candidate once, and adapts ``lam`` from the gain ratio. The Jacobian is
either rebuilt after every accepted step (``JacobianMode.RESET``) or kept
from the starting point (``JacobianMode.STATIC``).
"""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleDesign, PerturbationOutOfBounds
from .geometry import Bounds, DesignVector
from .simbackend import Backend, Fidelity, FrequencyGrid, ResponseCurve, evaluate

log = logging.getLogger("topoforge.tr")

EPS = 1e-2
EXPAND_ABOVE = 0.75
SHRINK_BELOW = 0.25
DEGENERATE_PRED = 1e-14
STATIC_MAX_ITER = 10


@dataclass(frozen=True)
class BandObjective:
    f_L: float
    f_H: float
    R_max: float = -11.0
    R_goal: float = -10.0

    def __post_init__(self):
        if not self.f_L < self.f_H:
            raise ValueError("f_L must be below f_H")
        if self.R_max > self.R_goal:
            raise ValueError("R_max must not exceed R_goal")


def objective_u(curve: ResponseCurve, obj: BandObjective) -> float:
    """Mean squared excess of in-band reflection above ``R_max``."""
    r = curve.values[curve.grid.band_mask(obj.f_L, obj.f_H)]
    return float(np.mean(np.maximum(r - obj.R_max, 0.0) ** 2))


class JacobianMode(enum.Enum):
    RESET = "reset"  # p = j
    STATIC = "static"  # p = 0


@dataclass(frozen=True, eq=False)
class LinearModel:
    anchor: np.ndarray
    response: ResponseCurve
    J: np.ndarray  # (n_points, D), dB per unit parameter

    def predict(self, x) -> np.ndarray:
        a = x.to_array() if isinstance(x, DesignVector) else np.asarray(x, dtype=float)
        return self.response.values + self.J @ (a - self.anchor)

    def reanchor(self, x: np.ndarray, response: ResponseCurve) -> "LinearModel":
        return LinearModel(np.asarray(x, dtype=float), response, self.J)


def fd_step(x: np.ndarray, sigma: float, bounds: Bounds) -> np.ndarray:
    return sigma * np.maximum(np.abs(x), 0.01 * bounds.span)


def fd_jacobian(
    backend: Backend,
    x: DesignVector,
    sigma: float,
    fidelity: Fidelity,
    grid: FrequencyGrid,
    bounds: Bounds,
    anchor_curve: ResponseCurve | None = None,
    workers: int = 1,
) -> LinearModel:
    """Large-step central differences; 2D simulations plus one for the anchor if not given.

    Perturbed points are clipped into the box. A perturbed point whose feed
    leaves the outline falls back to a one-sided difference against the anchor.
    """
    a = x.to_array()
    D = a.size
    h = fd_step(a, sigma, bounds)
    plus = np.minimum(a + h / 2, bounds.ub)
    minus = np.maximum(a - h / 2, bounds.lb)
    if np.any(plus - minus <= 1e-9 * bounds.span):
        bad = int(np.argmax(plus - minus <= 1e-9 * bounds.span))
        raise PerturbationOutOfBounds(f"finite-difference step collapsed for parameter {bad}")

    if anchor_curve is None:
        anchor_curve = evaluate(backend, x, grid, fidelity)

    def run(point):
        d = DesignVector.from_array(point)
        if not backend.feasible(d):
            return None
        return evaluate(backend, d, grid, fidelity).values

    points = []
    for d in range(D):
        p, m = a.copy(), a.copy()
        p[d], m[d] = plus[d], minus[d]
        points += [p, m]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, points))
    else:
        results = [run(p) for p in points]

    J = np.empty((grid.n_points, D))
    r0 = anchor_curve.values
    for d in range(D):
        rp, rm = results[2 * d], results[2 * d + 1]
        hi, lo = plus[d], minus[d]
        if rp is None and rm is None:
            J[:, d] = 0.0
            continue
        if rp is None:
            rp, hi = r0, a[d]
        elif rm is None:
            rm, lo = r0, a[d]
        J[:, d] = (rp - rm) / (hi - lo)
    return LinearModel(a, anchor_curve, J)


def trust_box(x: np.ndarray, lam: float, bounds: Bounds) -> tuple[np.ndarray, np.ndarray]:
    return np.maximum(bounds.lb, x - lam * bounds.span), np.minimum(bounds.ub, x + lam * bounds.span)


def model_objective(model: LinearModel, x: np.ndarray, obj: BandObjective) -> float:
    mask = model.response.grid.band_mask(obj.f_L, obj.f_H)
    r = model.predict(x)[mask]
    return float(np.mean(np.maximum(r - obj.R_max, 0.0) ** 2))


def solve_subproblem(
    model: LinearModel,
    lam: float,
    bounds: Bounds,
    obj: BandObjective,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> np.ndarray:
    """Projected gradient with backtracking on the convex model objective. No simulations."""
    x0 = model.anchor
    lo, hi = trust_box(x0, lam, bounds)
    mask = model.response.grid.band_mask(obj.f_L, obj.f_H)
    M = int(mask.sum())
    # optimize in span-normalized coordinates z = (x - x0) / span
    span = np.where(bounds.span > 0, bounds.span, 1.0)
    A = model.J[mask] * span
    b = model.response.values[mask] - obj.R_max
    zlo, zhi = (lo - x0) / span, (hi - x0) / span

    def f_and_g(z):
        e = np.maximum(b + A @ z, 0.0)
        return float(e @ e) / M, (2.0 / M) * (A.T @ e)

    z = np.zeros_like(x0)
    f, g = f_and_g(z)
    if f == 0.0:
        return x0.copy()
    # Lipschitz estimate for the gradient of the squared hinge
    step = M / (2.0 * max(np.linalg.norm(A, 2) ** 2, 1e-300))
    for _ in range(max_iter):
        pg = np.clip(z - g, zlo, zhi) - z
        if np.max(np.abs(pg)) <= tol:
            break
        t = step * 4.0
        while True:
            zn = np.clip(z - t * g, zlo, zhi)
            fn, gn = f_and_g(zn)
            if fn <= f + 0.5 * g @ (zn - z) or t < 1e-20:
                break
            t *= 0.5
        if fn > f:
            break
        z, f, g = zn, fn, gn
        step = t
        if f == 0.0:
            break
    return np.clip(x0 + z * span, lo, hi)


def feasible_along_step(backend: Backend, x: np.ndarray, cand: np.ndarray, max_halvings: int = 12) -> np.ndarray:
    """Pull an infeasible candidate back towards ``x`` (geometry checks only, no simulations).

    The feed coordinates are shortened first with the outline step kept whole; only if that
    fails is the full step halved.
    """
    step = cand - x
    feed_step = np.zeros_like(step)
    feed_step[1:3] = step[1:3]
    if backend.feasible(DesignVector.from_array(cand)):
        return cand
    for _ in range(max_halvings + 1):
        feed_step /= 2
        trial = x + step
        trial[1:3] = x[1:3] + feed_step[1:3]
        if backend.feasible(DesignVector.from_array(trial)):
            return trial
    for _ in range(max_halvings + 1):
        step = step / 2
        trial = x + step
        if backend.feasible(DesignVector.from_array(trial)):
            return trial
    return cand


def update_radius(lam: float, rho: float) -> float:
    if rho > EXPAND_ABOVE:
        return 2.0 * lam
    if rho < SHRINK_BELOW:
        return lam / 3.0
    return lam


@dataclass
class IterationRecord:
    iteration: int
    x: np.ndarray
    U: float | None
    U_pred: float | None
    rho: float | None
    lam: float
    accepted: bool
    step_norm: float
    n_coarse: int
    n_fine: int


@dataclass
class TRResult:
    x_star: DesignVector
    curve_star: ResponseCurve
    U_star: float
    U_start: float
    history: list[IterationRecord] = field(default_factory=list)
    reason: str = ""
    n_jacobians: int = 0
    n_candidates: int = 0
    n_accepted: int = 0
    n_sims: int = 0

    @property
    def iterations(self) -> int:
        return len(self.history)


def step_norm(a: np.ndarray, b: np.ndarray, bounds: Bounds) -> float:
    span = np.where(bounds.span > 0, bounds.span, 1.0)
    return float(np.max(np.abs((a - b) / span)))


def tr_optimize(
    backend: Backend,
    x0: DesignVector,
    bounds: Bounds,
    obj: BandObjective,
    fidelity: Fidelity = Fidelity.COARSE,
    jacobian_mode: JacobianMode = JacobianMode.RESET,
    sigma: float = 0.02,
    grid: FrequencyGrid = FrequencyGrid(),
    lam0: float = 1.0,
    eps: float = EPS,
    max_iter: int | None = None,
    max_sims: int | None = None,
    x0_curve: ResponseCurve | None = None,
    workers: int = 1,
) -> TRResult:
    if not bounds.contains(x0):
        raise ValueError("starting point is outside the bounds")
    if max_iter is None:
        max_iter = STATIC_MAX_ITER if jacobian_mode is JacobianMode.STATIC else 1000
    counter = backend.counter
    snap = counter.snapshot()
    D = x0.dim

    def sims_used():
        c, f = counter.since(snap)
        return c + f

    x = x0.to_array()
    curve = x0_curve if x0_curve is not None else evaluate(backend, x0, grid, fidelity)
    U = objective_u(curve, obj)
    res = TRResult(x0, curve, U, U)
    lam = lam0

    if U == 0.0:
        res.reason = "satisfied"
        res.n_sims = sims_used()
        return res
    if max_sims is not None and sims_used() + 2 * D + 1 > max_sims:
        res.reason = "budget"
        res.n_sims = sims_used()
        return res

    model = fd_jacobian(backend, x0, sigma, fidelity, grid, bounds, anchor_curve=curve, workers=workers)
    res.n_jacobians = 1
    reason = "max_iter"
    for it in range(max_iter):
        cand = solve_subproblem(model, lam, bounds, obj)
        cand = feasible_along_step(backend, x, cand)
        U_pred = model_objective(model, cand, obj)
        pred = U_pred - U  # model is exact at its anchor
        snorm = step_norm(cand, x, bounds)
        cand_design = DesignVector.from_array(cand)

        accepted = False
        rho = None
        U_new = None
        if abs(pred) <= DEGENERATE_PRED:
            lam /= 3.0
        elif not backend.feasible(cand_design):  # repair failed
            lam /= 3.0
        else:
            if max_sims is not None and sims_used() + 1 > max_sims:
                reason = "budget"
                break
            new_curve = evaluate(backend, cand_design, grid, fidelity)
            res.n_candidates += 1
            U_new = objective_u(new_curve, obj)
            rho = (U_new - U) / pred
            accepted = U_new < U
            lam = update_radius(lam, rho)

        c_n, f_n = counter.since(snap)
        res.history.append(IterationRecord(it, cand, U_new, U_pred, rho, lam, accepted, snorm, c_n, f_n))
        log.info("iter %d U=%s rho=%s lam=%.4g accepted=%s coarse=%d fine=%d", it,
                 "n/a" if U_new is None else f"{U_new:.5g}", "n/a" if rho is None else f"{rho:.4g}",
                 lam, accepted, c_n, f_n)

        if accepted:
            dU = abs(U_new - U)
            x, curve, U = cand, new_curve, U_new
            res.n_accepted += 1
            if U == 0.0:
                reason = "satisfied"
                break
            if snorm < eps:
                reason = "step"
                break
            if dU < eps:
                reason = "objective"
                break
        if lam < eps:
            reason = "radius"
            break
        if accepted:
            if jacobian_mode is JacobianMode.RESET:
                if max_sims is not None and sims_used() + 2 * D > max_sims:
                    reason = "budget"
                    break
                model = fd_jacobian(backend, DesignVector.from_array(x), sigma, fidelity, grid, bounds,
                                    anchor_curve=curve, workers=workers)
                res.n_jacobians += 1
            else:
                model = model.reanchor(x, curve)

    res.x_star = DesignVector.from_array(x)
    res.curve_star = curve
    res.U_star = U
    res.reason = reason
    res.n_sims = sims_used()
    return res


@dataclass
class BiStageResult:
    x_tmp: DesignVector
    x_c_star: DesignVector
    x_f_star: DesignVector
    stage1: TRResult
    restart: TRResult | None
    stage2: TRResult
    n_coarse: int
    n_fine: int
    fine_equivalent: float

    @property
    def sigma_halved(self) -> bool:
        return self.restart is not None


def violates(curve: ResponseCurve, obj: BandObjective) -> bool:
    return curve.band_max(obj.f_L, obj.f_H) > obj.R_goal


def bi_stage_optimize(
    backend: Backend,
    x0: DesignVector,
    bounds: Bounds,
    obj: BandObjective,
    grid: FrequencyGrid = FrequencyGrid(),
    sigma0: float = 0.02,
    coarse_budget: int | None = None,
    fine_budget: int | None = None,
    x0_coarse_curve: ResponseCurve | None = None,
    workers: int = 1,
) -> BiStageResult:
    """Coarse trust-region run with Jacobian resets, optional restart at sigma/2, then fine tuning."""
    snap = backend.counter.snapshot()
    s1 = tr_optimize(backend, x0, bounds, obj, Fidelity.COARSE, JacobianMode.RESET, sigma0, grid,
                     max_sims=coarse_budget, x0_curve=x0_coarse_curve, workers=workers)
    x_tmp = s1.x_star
    restart = None
    x_c = x_tmp
    if violates(s1.curve_star, obj):
        remaining = None if coarse_budget is None else max(coarse_budget - s1.n_sims, 0)
        restart = tr_optimize(backend, x_tmp, bounds, obj, Fidelity.COARSE, JacobianMode.RESET, sigma0 / 2, grid,
                              max_sims=remaining, x0_curve=s1.curve_star, workers=workers)
        x_c = restart.x_star
    s2 = tr_optimize(backend, x_c, bounds, obj, Fidelity.FINE, JacobianMode.STATIC, sigma0, grid,
                     max_sims=fine_budget, workers=workers)
    n_c, n_f = backend.counter.since(snap)
    return BiStageResult(x_tmp, x_c, s2.x_star, s1, restart, s2, n_c, n_f,
                         backend.counter.fine_equivalent(n_c, n_f))
