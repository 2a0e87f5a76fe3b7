"""Monte Carlo manufacturing yield, through an affine surrogate or by direct simulation.

Tolerances are applied in millimetres to the physical radii ``c * rho_l`` of
the outline vertices and ``c * rho_f`` of the feed; angles are left alone.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSampleCount
from .geometry import DesignVector, make_bounds
from .simbackend import Backend, Fidelity, FrequencyGrid, ResponseCurve, evaluate
from .troptim import fd_jacobian

log = logging.getLogger("topoforge.yield")

MIN_RHO = 1e-6
# perturbed samples only need the feed inside the patch; the r2 rule binds the nominal
SAMPLE_CLEARANCE = 0.0
DIRECT_MAX_SAMPLES = 5000


@dataclass(frozen=True)
class PerturbationSpec:
    distribution: str = "gaussian"  # "uniform" or "gaussian"
    magnitude: float = 0.03  # max deviation (uniform) or stdev (gaussian), mm
    mean: float = 0.0
    n_samples: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in ("uniform", "gaussian"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.magnitude < 0:
            raise ValueError("perturbation magnitude must be non-negative")

    @classmethod
    def uniform(cls, max_dev: float = 0.05, **kw) -> "PerturbationSpec":
        return cls("uniform", max_dev, 0.0, **kw)

    @classmethod
    def gaussian(cls, stdev: float = 0.03, mean: float = 0.0, **kw) -> "PerturbationSpec":
        return cls("gaussian", stdev, mean, **kw)

    @classmethod
    def parse(cls, text: str, **kw) -> "PerturbationSpec":
        """``uniform:0.05`` or ``gaussian:0.03`` (optionally ``gaussian:0.03:0.0`` with a mean)."""
        parts = text.split(":")
        kind = parts[0].strip().lower()
        if kind not in ("uniform", "gaussian"):
            raise ValueError(f"unknown distribution {kind!r}")
        mag = float(parts[1]) if len(parts) > 1 else (0.05 if kind == "uniform" else 0.03)
        if kind == "uniform":
            return cls.uniform(mag, **kw)
        mean = float(parts[2]) if len(parts) > 2 else 0.0
        return cls.gaussian(mag, mean, **kw)


def _deviations(spec: PerturbationSpec, index: int, size: int) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, index])
    if spec.distribution == "uniform":
        return rng.uniform(-spec.magnitude, spec.magnitude, size)
    return spec.mean + spec.magnitude * rng.standard_normal(size)


def perturbation_delta(x: DesignVector, spec: PerturbationSpec, index: int) -> np.ndarray:
    """Change of the design array for sample ``index`` (zero on c and on every angle)."""
    a = x.to_array()
    dev = _deviations(spec, index, x.L + 1)  # feed first, then the vertices
    idx = np.r_[1, 3:3 + x.L]
    new = np.maximum(a[idx] + dev / x.c, MIN_RHO)
    d = np.zeros_like(a)
    d[idx] = new - a[idx]
    return d


def perturb(x: DesignVector, spec: PerturbationSpec, index: int) -> DesignVector:
    return DesignVector.from_array(x.to_array() + perturbation_delta(x, spec, index))


def u1(curve: ResponseCurve, R_goal: float, band: tuple[float, float]) -> float:
    """Positive margin means the specification is met."""
    return float(R_goal - curve.band_max(*band))


@dataclass
class YieldResult:
    Y: float
    n_samples: int
    n_satisfied: int
    n_infeasible: int
    n_sims: int
    u1: np.ndarray

    def to_dict(self) -> dict:
        return {"Y": self.Y, "n_samples": self.n_samples, "n_satisfied": self.n_satisfied,
                "n_infeasible": self.n_infeasible, "n_sims": self.n_sims}


def _check_n(spec: PerturbationSpec, limit: int | None = None) -> None:
    if spec.n_samples <= 0:
        raise InvalidSampleCount("need at least one perturbation sample")
    if limit is not None and spec.n_samples > limit:
        raise InvalidSampleCount(f"direct Monte Carlo is limited to {limit} samples")


def estimate_yield_surrogate(
    backend: Backend,
    x_nominal: DesignVector,
    spec: PerturbationSpec,
    band: tuple[float, float],
    R_goal: float = -10.0,
    sigma_fd: float = 0.02,
    grid: FrequencyGrid = FrequencyGrid(),
    fidelity: Fidelity = Fidelity.FINE,
    workers: int = 1,
) -> YieldResult:
    """One Jacobian at the nominal (2D+1 simulations), then every sample through the affine model."""
    _check_n(spec)
    snap = backend.counter.snapshot()
    model = fd_jacobian(backend, x_nominal, sigma_fd, fidelity, grid, make_bounds(x_nominal), workers=workers)
    mask = grid.band_mask(*band)
    Jb = model.J[mask]
    r0 = model.response.values[mask]
    u = np.empty(spec.n_samples)
    infeasible = 0
    for i in range(spec.n_samples):
        d = perturbation_delta(x_nominal, spec, i)
        if not backend.feasible(DesignVector.from_array(x_nominal.to_array() + d), SAMPLE_CLEARANCE):
            u[i] = -np.inf
            infeasible += 1
            continue
        u[i] = R_goal - float(np.max(r0 + Jb @ d))
    c, f = backend.counter.since(snap)
    ok = int(np.count_nonzero(u >= 0))
    log.info("surrogate yield %.4f (%d/%d, %d infeasible)", ok / spec.n_samples, ok, spec.n_samples, infeasible)
    return YieldResult(ok / spec.n_samples, spec.n_samples, ok, infeasible, c + f, u)


def estimate_yield_direct(
    backend: Backend,
    x_nominal: DesignVector,
    spec: PerturbationSpec,
    band: tuple[float, float],
    R_goal: float = -10.0,
    grid: FrequencyGrid = FrequencyGrid(),
    fidelity: Fidelity = Fidelity.FINE,
) -> YieldResult:
    """Simulate every perturbed design; the reference the surrogate is checked against."""
    _check_n(spec, DIRECT_MAX_SAMPLES)
    snap = backend.counter.snapshot()
    u = np.empty(spec.n_samples)
    infeasible = 0
    for i in range(spec.n_samples):
        xp = perturb(x_nominal, spec, i)
        if not backend.feasible(xp, SAMPLE_CLEARANCE):
            u[i] = -np.inf
            infeasible += 1
            continue
        u[i] = u1(evaluate(backend, xp, grid, fidelity, SAMPLE_CLEARANCE), R_goal, band)
    c, f = backend.counter.since(snap)
    ok = int(np.count_nonzero(u >= 0))
    return YieldResult(ok / spec.n_samples, spec.n_samples, ok, infeasible, c + f, u)
