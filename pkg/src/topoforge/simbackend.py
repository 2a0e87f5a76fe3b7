"""Variable-fidelity simulation interface, the built-in mock resonator and CSV curves."""
from __future__ import annotations

import csv
import enum
import hashlib
import logging
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BackendFailure,
    InfeasibleDesign,
    NonMonotoneFrequency,
    NoResonanceFound,
    ParseError,
)
from .geometry import DEFAULT_FIXED, DesignVector, FixedParams, is_feasible, vertices_of, feed_point, polygon_area

log = logging.getLogger("topoforge.sim")

C_LIGHT_MM_GHZ = 299.792458


@dataclass(frozen=True)
class FrequencyGrid:
    f_min: float = 1.0
    f_max: float = 10.0
    n_points: int = 451

    def __post_init__(self):
        if not self.f_min < self.f_max:
            raise ValueError("f_min must be below f_max")
        if self.n_points < 2:
            raise ValueError("need at least two frequency samples")

    @property
    def freqs(self) -> np.ndarray:
        return np.linspace(self.f_min, self.f_max, self.n_points)

    @property
    def step(self) -> float:
        return (self.f_max - self.f_min) / (self.n_points - 1)

    def band_mask(self, f_lo: float, f_hi: float) -> np.ndarray:
        from .errors import BandOutsideGrid

        tol = 1e-9 * self.step
        if f_lo < self.f_min - tol or f_hi > self.f_max + tol or not f_lo < f_hi:
            raise BandOutsideGrid(f"band {f_lo}-{f_hi} GHz not inside sweep {self.f_min}-{self.f_max} GHz")
        f = self.freqs
        mask = (f >= f_lo - tol) & (f <= f_hi + tol)
        if not mask.any():
            raise BandOutsideGrid(f"no grid samples inside band {f_lo}-{f_hi} GHz")
        return mask

    def to_dict(self) -> dict:
        return {"f_min": self.f_min, "f_max": self.f_max, "n_points": self.n_points}


@dataclass(frozen=True, eq=False)
class ResponseCurve:
    grid: FrequencyGrid
    values: np.ndarray  # dB

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} samples, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def freqs(self) -> np.ndarray:
        return self.grid.freqs

    def band_max(self, f_lo: float, f_hi: float) -> float:
        return float(np.max(self.values[self.grid.band_mask(f_lo, f_hi)]))


class Fidelity(enum.Enum):
    COARSE = "coarse"
    FINE = "fine"

    @property
    def nominal_cost_s(self) -> float:
        return 60.0 if self is Fidelity.COARSE else 110.0


@dataclass
class EvalCounter:
    """Thread-safe simulation tally; cost is expressed in fine-model equivalents."""

    cost_coarse_s: float = 60.0
    cost_fine_s: float = 110.0
    n_coarse: int = 0
    n_fine: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, fidelity: Fidelity, n: int = 1) -> None:
        with self._lock:
            if fidelity is Fidelity.COARSE:
                self.n_coarse += n
            else:
                self.n_fine += n

    @property
    def equivalent_fine(self) -> float:
        return self.n_coarse * (self.cost_coarse_s / self.cost_fine_s) + self.n_fine

    @property
    def equivalent_coarse(self) -> float:
        return self.n_coarse + self.n_fine * (self.cost_fine_s / self.cost_coarse_s)

    def snapshot(self) -> tuple[int, int]:
        with self._lock:
            return self.n_coarse, self.n_fine

    def since(self, snap: tuple[int, int]) -> tuple[int, int]:
        c, f = self.snapshot()
        return c - snap[0], f - snap[1]

    def fine_equivalent(self, n_coarse: int, n_fine: int) -> float:
        return n_coarse * (self.cost_coarse_s / self.cost_fine_s) + n_fine


class Backend:
    """A simulation model with a coarse and a fine fidelity level.

    Subclasses implement :meth:`simulate`; callers go through :func:`evaluate`
    so that feasibility is checked and every simulation is counted.
    """

    name = "abstract"

    def __init__(self, fixed: FixedParams = DEFAULT_FIXED, counter: EvalCounter | None = None):
        self.fixed = fixed
        self.counter = counter if counter is not None else EvalCounter()

    def simulate(self, x: DesignVector, grid: FrequencyGrid, fidelity: Fidelity) -> np.ndarray:
        raise NotImplementedError

    def feasible(self, x: DesignVector, min_clearance: float | None = None) -> bool:
        return is_feasible(x, self.fixed, min_clearance)


def evaluate(backend: Backend, x: DesignVector, grid: FrequencyGrid, fidelity: Fidelity,
             min_clearance: float | None = None) -> ResponseCurve:
    """Simulate once and count it. ``min_clearance`` relaxes the feed rule (default r2)."""
    if not backend.feasible(x, min_clearance):
        raise InfeasibleDesign(f"design {x!r} is not feasible")
    try:
        values = backend.simulate(x, grid, fidelity)
    except (InfeasibleDesign, BackendFailure):
        raise
    except Exception as exc:  # concrete backends may fail in arbitrary ways
        raise BackendFailure(f"{backend.name} backend failed: {exc}") from exc
    backend.counter.add(fidelity)
    log.debug("sim %s c=%.4f n_coarse=%d n_fine=%d", fidelity.value, x.c, backend.counter.n_coarse, backend.counter.n_fine)
    return ResponseCurve(grid, values)


# -- mock resonator -------------------------------------------------------------


@dataclass(frozen=True)
class MockParams:
    max_depth_db: float = 35.0
    width_fraction: float = 0.035
    irregularity_gain: float = 4.0
    coarse_freq_factor: float = 1.02
    coarse_depth_factor: float = 0.9
    mode_limit: float = 1.5  # modes up to mode_limit * f_max
    floor_db: float = -40.0


def mock_modes(x: DesignVector, f_max: float, fidelity: Fidelity, params: MockParams = MockParams(),
               eps_r: float = DEFAULT_FIXED.substrate.eps_r):
    """Resonant frequencies, depths and half-widths of the mock model."""
    verts = vertices_of(x)
    l_eff = math.sqrt(polygon_area(verts))
    f1 = C_LIGHT_MM_GHZ / (2.0 * l_eff * math.sqrt(eps_r))
    if fidelity is Fidelity.COARSE:
        f1 *= params.coarse_freq_factor
    n_modes = max(1, int(math.floor(params.mode_limit * f_max / f1 + 1e-12)))
    n = np.arange(1, n_modes + 1)
    fn = n * f1

    lo, hi = verts.min(axis=0), verts.max(axis=0)
    u, v = (feed_point(x) - lo) / (hi - lo)
    w = np.abs(np.sin(n * math.pi * u) * np.sin(n * math.pi * v))

    s = float(np.std(x.rho) / np.mean(x.rho))
    depth = np.maximum(params.max_depth_db * w * (0.6 + 0.4 * np.cos(n * s * math.pi)), 0.0)
    if fidelity is Fidelity.COARSE:
        depth = depth * params.coarse_depth_factor
    width = params.width_fraction * fn * (1.0 + params.irregularity_gain * s)
    return fn, depth, width


def mock_em(x: DesignVector, grid: FrequencyGrid, fidelity: Fidelity, params: MockParams = MockParams(),
            fixed: FixedParams = DEFAULT_FIXED) -> ResponseCurve:
    if not is_feasible(x, fixed):
        raise InfeasibleDesign(f"design {x!r} is not feasible")
    return ResponseCurve(grid, _mock_values(x, grid, fidelity, params, fixed.substrate.eps_r))


def _mock_values(x, grid, fidelity, params, eps_r) -> np.ndarray:
    fn, depth, width = mock_modes(x, grid.f_max, fidelity, params, eps_r)
    f = grid.freqs[:, None]
    b2 = width**2
    r = -np.sum(depth * b2 / ((f - fn) ** 2 + b2), axis=1)
    return np.clip(r, params.floor_db, 0.0)


class MockBackend(Backend):
    name = "mock"

    def __init__(self, params: MockParams = MockParams(), fixed: FixedParams = DEFAULT_FIXED,
                 counter: EvalCounter | None = None):
        super().__init__(fixed, counter)
        self.params = params

    def simulate(self, x, grid, fidelity):
        return _mock_values(x, grid, fidelity, self.params, self.fixed.substrate.eps_r)


# -- resonance extraction ---------------------------------------------------------


def extract_resonances(curve: ResponseCurve, depth_threshold_db: float = -3.0) -> list[tuple[float, float]]:
    """Local minima at or below the threshold, refined by a 3-point parabola."""
    y = curve.values
    f = curve.freqs
    h = curve.grid.step
    out = []
    n = len(y)
    for i in range(n):
        if y[i] > depth_threshold_db:
            continue
        left = y[i - 1] if i > 0 else np.inf
        right = y[i + 1] if i < n - 1 else np.inf
        # plateaus: keep the first sample of a flat bottom only
        if not (y[i] < left and y[i] <= right):
            continue
        if 0 < i < n - 1:
            denom = left - 2 * y[i] + right
            if denom > 0:
                off = 0.5 * (left - right) / denom
                out.append((f[i] + off * h, y[i] - 0.25 * (left - right) * off))
                continue
        out.append((f[i], y[i]))
    if not out:
        raise NoResonanceFound(f"no minimum at or below {depth_threshold_db} dB")
    return out


# -- tabulated curves ----------------------------------------------------------------


def save_curve(path, curve: ResponseCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_GHz", "S11_dB"])
        for fr, val in zip(curve.freqs, curve.values):
            w.writerow([repr(float(fr)), repr(float(val))])


def read_table(path) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != ["freq_GHz", "S11_dB"]:
        raise ParseError(f"{path}: expected header 'freq_GHz,S11_dB'")
    try:
        data = np.array([[float(a), float(b)] for a, b in (r for r in rows[1:] if r)])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if data.shape[0] < 2:
        raise ParseError(f"{path}: need at least two samples")
    if np.any(np.diff(data[:, 0]) <= 0):
        raise NonMonotoneFrequency(f"{path}: frequencies must be strictly increasing")
    return data[:, 0], data[:, 1]


def load_tabulated(path, grid: FrequencyGrid | None = None) -> ResponseCurve:
    """Read a CSV curve; with ``grid`` given, resample it there by linear interpolation."""
    f, v = read_table(path)
    if grid is None:
        grid = FrequencyGrid(float(f[0]), float(f[-1]), len(f))
        if np.allclose(grid.freqs, f, rtol=0, atol=1e-9 * max(1.0, abs(f[-1]))):
            return ResponseCurve(grid, v)
    return ResponseCurve(grid, np.interp(grid.freqs, f, v))


def design_key(x: DesignVector) -> str:
    return hashlib.sha1(x.to_text(precision=12).encode()).hexdigest()[:16]


class TabulatedBackend(Backend):
    """Serves pre-computed responses from ``<root>/<fidelity>/<design key>.csv``."""

    name = "tabulated"

    def __init__(self, root, fixed: FixedParams = DEFAULT_FIXED, counter: EvalCounter | None = None):
        super().__init__(fixed, counter)
        self.root = Path(root)

    def path_for(self, x: DesignVector, fidelity: Fidelity) -> Path:
        return self.root / fidelity.value / f"{design_key(x)}.csv"

    def simulate(self, x, grid, fidelity):
        p = self.path_for(x, fidelity)
        if not p.exists():
            raise BackendFailure(f"no tabulated response for design {design_key(x)} at {fidelity.value} fidelity")
        return load_tabulated(p, grid).values


def make_backend(spec: str, counter: EvalCounter | None = None, fixed: FixedParams = DEFAULT_FIXED) -> Backend:
    if spec == "mock":
        return MockBackend(fixed=fixed, counter=counter)
    if spec.startswith("tabulated:"):
        return TabulatedBackend(spec.split(":", 1)[1], fixed=fixed, counter=counter)
    raise ValueError(f"unknown backend spec {spec!r}")


__all__ = [
    "Backend", "EvalCounter", "Fidelity", "FrequencyGrid", "MockBackend", "MockParams", "ResponseCurve",
    "TabulatedBackend", "evaluate", "extract_resonances", "load_tabulated", "make_backend", "mock_em",
    "mock_modes", "save_curve",
]
