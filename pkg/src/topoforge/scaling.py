"""Frequency-scaling surrogate: a quadratic size-to-frequency-multiplier map.

Uniformly resizing an antenna from the reference scale ``c0`` to ``c`` moves
its resonances from ``r`` to ``r / alpha(c)``, with

    alpha(c) = beta0 * c**2 + beta1 * c + beta2.

The surrogate response of a design at a new scale is its stored coarse
response read at ``alpha * f`` -- resonance positions move, levels do not.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NonPositiveAlpha, NoResonanceFound, RankDeficient, ResonanceTrackingLost
from .geometry import DEFAULT_FIXED, DesignVector, FixedParams, is_feasible, random_design, scale_design
from .simbackend import Backend, Fidelity, FrequencyGrid, ResponseCurve, evaluate, extract_resonances

DEFAULT_DELTA = (0.0, -5.0, 15.0)
TRACK_THRESHOLD_DB = -1.0
# a tracked resonance further than this (relative) from its prediction counts as lost
TRACK_TOLERANCE = 0.25


@dataclass(frozen=True, eq=False)
class ScalingModel:
    beta: np.ndarray
    c0: float = 30.0
    delta: tuple = DEFAULT_DELTA
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).reshape(3))
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))

    @property
    def c_values(self) -> np.ndarray:
        return self.c0 + np.asarray(self.delta)

    def to_dict(self) -> dict:
        return {"beta": self.beta.tolist(), "c0": self.c0, "delta": list(self.delta), "training_meta": self.training_meta}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingModel":
        return cls(np.array(d["beta"]), d["c0"], tuple(d["delta"]), d.get("training_meta", {}))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ScalingModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def alpha(model: ScalingModel, c, check: bool = True):
    b0, b1, b2 = model.beta
    a = b0 * np.square(c) + b1 * np.asarray(c) + b2
    if check and np.any(a <= 0):
        raise NonPositiveAlpha(f"alpha({c}) = {a} is not a valid frequency multiplier")
    return float(a) if np.ndim(a) == 0 else a


def solve_quadratic_lsq(c: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Least-squares beta for ``a ~ beta0 c^2 + beta1 c + beta2`` via the normal equations."""
    c = np.asarray(c, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    if np.unique(c).size < 3:
        raise RankDeficient("need at least three distinct scale values to fit a quadratic")
    # centre and scale c for conditioning, then map the coefficients back
    m, s = c.mean(), c.std()
    t = (c - m) / s
    V = np.column_stack((t**2, t, np.ones_like(t)))
    g = np.linalg.solve(V.T @ V, V.T @ a)
    return np.array([g[0] / s**2, g[1] / s - 2 * g[0] * m / s**2, g[2] - g[1] * m / s + g[0] * m**2 / s**2])


def lsq_residual(beta, c, a) -> float:
    c = np.asarray(c, dtype=float)
    return float(np.sum((beta[0] * c**2 + beta[1] * c + beta[2] - a) ** 2))


def track_resonance(curve: ResponseCurve, predicted: float | None = None, threshold_db: float = TRACK_THRESHOLD_DB) -> float:
    """Deepest dip when ``predicted`` is None, otherwise the dip nearest the prediction."""
    try:
        res = extract_resonances(curve, threshold_db)
    except NoResonanceFound as exc:
        raise ResonanceTrackingLost(str(exc)) from exc
    if predicted is None:
        return min(res, key=lambda r: r[1])[0]
    f = min(res, key=lambda r: abs(r[0] - predicted))[0]
    if abs(f - predicted) > TRACK_TOLERANCE * predicted:
        raise ResonanceTrackingLost(f"nearest resonance {f:.3f} GHz too far from predicted {predicted:.3f} GHz")
    return f


def training_designs(rng: np.random.Generator, T: int = 3, L: int = 25, c0: float = 30.0, delta=DEFAULT_DELTA,
                     fixed: FixedParams = DEFAULT_FIXED, max_draws: int = 1000) -> list[DesignVector]:
    """Random designs whose feed stays admissible at every training scale (geometry checks only)."""
    c_values = c0 + np.asarray(delta, dtype=float)
    out = []
    for _ in range(max_draws):
        x = random_design(rng, L, c0=c0, fixed=fixed)
        if all(is_feasible(scale_design(x, ck), fixed) for ck in c_values):
            out.append(x)
            if len(out) == T:
                return out
    raise RuntimeError(f"could not draw {T} training designs feasible at scales {c_values.tolist()}")


def fit_beta(
    designs: list[DesignVector],
    backend: Backend,
    grid: FrequencyGrid,
    c0: float = 30.0,
    delta=DEFAULT_DELTA,
) -> ScalingModel:
    if len(designs) < 1:
        raise ValueError("need at least one training design")
    c_values = c0 + np.asarray(delta, dtype=float)
    if len(c_values) < 3 or np.unique(c_values).size < 3:
        raise RankDeficient("need at least three distinct scale values to fit a quadratic")

    r = np.empty((len(designs), len(c_values)))
    for t, x in enumerate(designs):
        curves = [evaluate(backend, scale_design(x, ck), grid, Fidelity.COARSE) for ck in c_values]
        r[t, 0] = track_resonance(curves[0])
        for k in range(1, len(c_values)):
            r[t, k] = track_resonance(curves[k], r[t, 0] * c_values[0] / c_values[k])
    A = r[:, :1] / r
    C = np.broadcast_to(c_values, A.shape)
    beta = solve_quadratic_lsq(C, A)
    meta = {
        "T": len(designs),
        "c_values": c_values.tolist(),
        "resonances_GHz": r.tolist(),
        "alphas": A.tolist(),
        "residual": lsq_residual(beta, C.ravel(), A.ravel()),
        "n_coarse": int(r.size),
    }
    return ScalingModel(beta, float(c0), tuple(delta), meta)


def frequency_ratio(model: ScalingModel, c_new, c_stored) -> float:
    """Multiplier applied to the frequency axis when moving a curve from c_stored to c_new."""
    return alpha(model, c_new) / alpha(model, c_stored)


def shifted_values(curve: ResponseCurve, ratio, freqs: np.ndarray | None = None) -> np.ndarray:
    """Stored curve read at ``ratio * f``; ``ratio`` may be an array (one row per value)."""
    f = curve.freqs if freqs is None else freqs
    q = np.multiply.outer(np.asarray(ratio, dtype=float), f)
    return np.interp(q, curve.freqs, curve.values)


def support_mask(curve: ResponseCurve, ratio: float) -> np.ndarray:
    """True where ``ratio * f`` falls inside the stored sweep."""
    q = ratio * curve.freqs
    return (q >= curve.grid.f_min) & (q <= curve.grid.f_max)


def shifted_response(curve: ResponseCurve, model: ScalingModel, c_new: float, c_stored: float | None = None) -> ResponseCurve:
    """Surrogate response at scale ``c_new`` of a design whose curve was simulated at ``c_stored``.

    Out-of-support samples take the boundary value of the stored curve.
    """
    c_stored = model.c0 if c_stored is None else c_stored
    ratio = frequency_ratio(model, c_new, c_stored)
    return ResponseCurve(curve.grid, shifted_values(curve, ratio))
