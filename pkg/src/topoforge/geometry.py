"""Point-swarm parameterization of a free-form planar patch antenna.

A design is ``x = [c, rho_f, phi_f, rho_1..rho_L, phi_1..phi_L]``: a scale
``c`` in millimetres, the feed position in polar form, radial fractions of
the outline vertices, and positive angular increments whose cumulative sum is
normalized onto ``(0, 2*pi]``. Vertices at non-decreasing angles with positive
radii form a star-shaped, hence simple, polygon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DegenerateOutline, FeedOutsideOutline, FeedSamplingExhausted, ParseError

TWO_PI = 2.0 * math.pi
MAX_FEED_TRIES = 10_000


@dataclass(frozen=True)
class Substrate:
    height: float = 1.524
    eps_r: float = 2.55
    tan_delta: float = 0.0013


@dataclass(frozen=True)
class FixedParams:
    """Dimensions that are not design variables (mm)."""

    edge_offset: float = 5.0
    r1: float = 0.615
    r2: float = 1.415
    substrate: Substrate = field(default_factory=Substrate)


DEFAULT_FIXED = FixedParams()


@dataclass(frozen=True, eq=False)
class DesignVector:
    c: float
    rho_f: float
    phi_f: float
    rho: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float)
        phi = np.array(self.phi, dtype=float)
        rho.flags.writeable = False
        phi.flags.writeable = False
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "rho_f", float(self.rho_f))
        object.__setattr__(self, "phi_f", float(self.phi_f))
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "phi", phi)
        if rho.ndim != 1 or rho.shape != phi.shape:
            raise ValueError("rho and phi must be 1-D arrays of equal length")
        if rho.size < 3:
            raise ValueError(f"need at least 3 outline points, got {rho.size}")

    @property
    def L(self) -> int:
        return int(self.rho.size)

    @property
    def dim(self) -> int:
        return 2 * self.L + 3

    def to_array(self) -> np.ndarray:
        return np.concatenate(([self.c, self.rho_f, self.phi_f], self.rho, self.phi))

    @classmethod
    def from_array(cls, arr) -> "DesignVector":
        arr = np.asarray(arr, dtype=float).ravel()
        if arr.size < 9 or (arr.size - 3) % 2:
            raise ValueError(f"design array length must be 2L+3 with L>=3, got {arr.size}")
        L = (arr.size - 3) // 2
        return cls(arr[0], arr[1], arr[2], arr[3 : 3 + L], arr[3 + L :])

    def to_text(self, precision: int = 6) -> str:
        return " ".join(f"{v:.{precision}g}" for v in self.to_array())

    @classmethod
    def from_text(cls, text: str) -> "DesignVector":
        cleaned = text.replace("[", " ").replace("]", " ").replace(",", " ")
        try:
            vals = [float(tok) for tok in cleaned.split()]
        except ValueError as exc:
            raise ParseError(f"not a design vector: {exc}") from None
        if len(vals) < 5 or (len(vals) - 3) % 2:
            raise ParseError(f"a design vector has 2L+3 entries, got {len(vals)}")
        return cls.from_array(vals)

    def check(self) -> None:
        """Raise ``ValueError`` if the encoding invariants are violated."""
        if not self.c > 0:
            raise ValueError(f"scale c must be positive, got {self.c}")
        if self.rho_f < 0:
            raise ValueError("feed radial fraction must be non-negative")
        if np.any(self.rho <= 0):
            raise DegenerateOutline("outline radii must be positive")
        if np.any(self.phi < 0) or not self.phi.sum() > 0:
            raise ValueError("angular increments must be non-negative with a positive sum")

    def __eq__(self, other):
        if not isinstance(other, DesignVector):
            return NotImplemented
        return self.L == other.L and np.array_equal(self.to_array(), other.to_array())

    __hash__ = None

    def __repr__(self):
        return f"DesignVector(L={self.L}, c={self.c:.4g}, rho_f={self.rho_f:.4g}, phi_f={self.phi_f:.4g})"


@dataclass(frozen=True, eq=False)
class AntennaLayout:
    vertices: np.ndarray  # (L, 2) mm
    feed: np.ndarray  # (2,) mm
    patch_side: float  # A1
    substrate_side: float  # A
    fixed: FixedParams = DEFAULT_FIXED

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)


def outline_angles(phi: np.ndarray) -> np.ndarray:
    """Cumulative angular increments normalized so the last angle is exactly 2*pi."""
    cs = np.cumsum(phi)
    angles = TWO_PI * cs / cs[-1]
    angles[-1] = TWO_PI
    return angles


def vertices_of(x: DesignVector) -> np.ndarray:
    ang = outline_angles(x.phi)
    r = x.c * x.rho
    return np.column_stack((r * np.cos(ang), r * np.sin(ang)))


def feed_point(x: DesignVector) -> np.ndarray:
    a = math.fmod(x.phi_f, TWO_PI)
    r = x.c * x.rho_f
    return np.array([r * math.cos(a), r * math.sin(a)])


def polygon_area(vertices: np.ndarray) -> float:
    xs, ys = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(float(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1))))


def build_layout(x: DesignVector, fixed: FixedParams = DEFAULT_FIXED, check_feed: bool = True) -> AntennaLayout:
    if np.any(x.rho <= 0):
        raise DegenerateOutline("outline radii must be positive")
    x.check()
    patch = 2.0 * x.c * float(np.max(x.rho))
    layout = AntennaLayout(
        vertices=vertices_of(x),
        feed=feed_point(x),
        patch_side=patch,
        substrate_side=patch + 2.0 * fixed.edge_offset,
        fixed=fixed,
    )
    if check_feed:
        clearance = feed_clearance(layout)
        if clearance < fixed.r2:
            raise FeedOutsideOutline(f"feed clearance {clearance:.4g} mm < r2 = {fixed.r2} mm")
    return layout


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segments_intersect(p1, p2, p3, p4) -> np.ndarray:
    """Vectorized closed-segment intersection test (touching counts)."""
    d1 = _orient(p3[..., 0], p3[..., 1], p4[..., 0], p4[..., 1], p1[..., 0], p1[..., 1])
    d2 = _orient(p3[..., 0], p3[..., 1], p4[..., 0], p4[..., 1], p2[..., 0], p2[..., 1])
    d3 = _orient(p1[..., 0], p1[..., 1], p2[..., 0], p2[..., 1], p3[..., 0], p3[..., 1])
    d4 = _orient(p1[..., 0], p1[..., 1], p2[..., 0], p2[..., 1], p4[..., 0], p4[..., 1])
    s1, s2, s3, s4 = np.sign(d1), np.sign(d2), np.sign(d3), np.sign(d4)
    proper = (s1 * s2 < 0) & (s3 * s4 < 0)

    def on_seg(a, b, p):
        return (
            (np.minimum(a[..., 0], b[..., 0]) <= p[..., 0])
            & (p[..., 0] <= np.maximum(a[..., 0], b[..., 0]))
            & (np.minimum(a[..., 1], b[..., 1]) <= p[..., 1])
            & (p[..., 1] <= np.maximum(a[..., 1], b[..., 1]))
        )

    touch = (
        ((s1 == 0) & on_seg(p3, p4, p1))
        | ((s2 == 0) & on_seg(p3, p4, p2))
        | ((s3 == 0) & on_seg(p1, p2, p3))
        | ((s4 == 0) & on_seg(p1, p2, p4))
    )
    return proper | touch


def is_simple(vertices) -> bool:
    """All-pairs test: True iff no two non-adjacent edges of the closed polygon meet."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    if n < 3:
        raise ValueError("a polygon needs at least 3 vertices")
    a, b = v, np.roll(v, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))  # first and last edge share vertex 0
    i, j = i[keep], j[keep]
    if i.size == 0:
        return True
    return not bool(np.any(_segments_intersect(a[i], b[i], a[j], b[j])))


def point_in_polygon(point, vertices) -> bool:
    px, py = float(point[0]), float(point[1])
    xs, ys = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(xs, -1), np.roll(ys, -1)
    crosses = (ys > py) != (yn > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = xs + (py - ys) * (xn - xs) / (yn - ys)
    return bool(np.count_nonzero(crosses & (px < xint)) % 2)


def boundary_distance(point, vertices) -> float:
    p = np.asarray(point, dtype=float)
    a = vertices
    ab = np.roll(vertices, -1, axis=0) - a
    ap = p - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", ap, ab) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return float(np.min(np.hypot(*(p - closest).T)))


def feed_clearance(layout: AntennaLayout) -> float:
    """Signed distance from the feed to the outline, positive inside."""
    d = boundary_distance(layout.feed, layout.vertices)
    if d == 0.0:
        return 0.0
    return d if point_in_polygon(layout.feed, layout.vertices) else -d


def design_clearance(x: DesignVector) -> float:
    return feed_clearance(build_layout(x, check_feed=False))


def is_feasible(x: DesignVector, fixed: FixedParams = DEFAULT_FIXED, min_clearance: float | None = None) -> bool:
    """Valid outline and feed clearance of at least ``min_clearance`` (default r2)."""
    if x.c <= 0 or x.rho_f < 0 or np.any(x.rho <= 0) or np.any(x.phi < 0) or not x.phi.sum() > 0:
        return False
    return design_clearance(x) >= (fixed.r2 if min_clearance is None else min_clearance)


def scale_design(x: DesignVector, c_new: float) -> DesignVector:
    if not c_new > 0:
        raise ValueError(f"scale must be positive, got {c_new}")
    return replace(x, c=c_new)


@dataclass(frozen=True)
class GenerationRanges:
    rho: tuple[float, float] = (0.1, 0.9)
    phi: tuple[float, float] = (0.01, 0.8)
    rho_f: tuple[float, float] = (0.0, 0.9)
    phi_f: tuple[float, float] = (0.0, TWO_PI)


def random_design(
    rng: np.random.Generator,
    L: int = 25,
    ranges: GenerationRanges = GenerationRanges(),
    c0: float = 30.0,
    fixed: FixedParams = DEFAULT_FIXED,
    max_tries: int = MAX_FEED_TRIES,
) -> DesignVector:
    """Draw an outline, then resample the feed until it sits inside with clearance >= r2."""
    rho = rng.uniform(*ranges.rho, size=L)
    phi = rng.uniform(*ranges.phi, size=L)
    outline = DesignVector(c0, 0.0, 0.0, rho, phi)
    verts = vertices_of(outline)
    for _ in range(max_tries):
        rho_f = rng.uniform(*ranges.rho_f)
        phi_f = rng.uniform(*ranges.phi_f)
        cand = replace(outline, rho_f=rho_f, phi_f=phi_f)
        feed = feed_point(cand)
        if point_in_polygon(feed, verts) and boundary_distance(feed, verts) >= fixed.r2:
            return cand
    raise FeedSamplingExhausted(f"no admissible feed position after {max_tries} draws")


@dataclass(frozen=True, eq=False)
class Bounds:
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        lb = np.asarray(self.lb, dtype=float)
        ub = np.asarray(self.ub, dtype=float)
        if lb.shape != ub.shape:
            raise ValueError("bound shapes differ")
        if np.any(lb > ub):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)

    @property
    def span(self) -> np.ndarray:
        return self.ub - self.lb

    def contains(self, x) -> bool:
        a = x.to_array() if isinstance(x, DesignVector) else np.asarray(x)
        return bool(np.all(a >= self.lb) and np.all(a <= self.ub))

    def clip(self, x: DesignVector) -> tuple[DesignVector, int]:
        a = x.to_array()
        clipped = np.clip(a, self.lb, self.ub)
        return DesignVector.from_array(clipped), int(np.count_nonzero(clipped != a))

    def normalize(self, a: np.ndarray) -> np.ndarray:
        return (a - self.lb) / np.where(self.span > 0, self.span, 1.0)

    def denormalize(self, z: np.ndarray) -> np.ndarray:
        return self.lb + z * self.span


def make_bounds(x0: DesignVector) -> Bounds:
    L = x0.L
    lb = np.concatenate(([x0.c - 2.0, 0.0, x0.phi_f - math.pi / 2], np.full(L, 0.1), np.full(L, 0.01)))
    ub = np.concatenate(
        ([x0.c + 3.0, float(np.max(x0.rho)), x0.phi_f + 3 * math.pi / 2], np.full(L, 0.9), np.full(L, 0.8))
    )
    return Bounds(lb, ub)


# -- export -------------------------------------------------------------------


def layout_svg(layout: AntennaLayout, px_per_mm: float = 10.0) -> str:
    half = layout.substrate_side / 2
    size = layout.substrate_side * px_per_mm

    def tx(p):
        return (p[0] + half) * px_per_mm, (half - p[1]) * px_per_mm

    pts = " ".join("{:.3f},{:.3f}".format(*tx(v)) for v in layout.vertices)
    fx, fy = tx(layout.feed)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.1f}" height="{size:.1f}" '
        f'viewBox="0 0 {size:.3f} {size:.3f}">\n'
        f'  <rect x="0" y="0" width="{size:.3f}" height="{size:.3f}" fill="#e8e2c8"/>\n'
        f'  <polygon points="{pts}" fill="#c87533" stroke="black" stroke-width="1"/>\n'
        f'  <circle cx="{fx:.3f}" cy="{fy:.3f}" r="{layout.fixed.r2 * px_per_mm:.3f}" fill="white" stroke="black"/>\n'
        f'  <circle cx="{fx:.3f}" cy="{fy:.3f}" r="{layout.fixed.r1 * px_per_mm:.3f}" fill="#888"/>\n'
        "</svg>\n"
    )


def write_vertex_csv(layout: AntennaLayout, path) -> None:
    lines = ["index,x_mm,y_mm"]
    lines += [f"{i},{v[0]:.9g},{v[1]:.9g}" for i, v in enumerate(layout.vertices)]
    Path(path).write_text("\n".join(lines) + "\n")
