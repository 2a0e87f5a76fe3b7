"""Scripted backends and brute-force oracles shared by the tests."""
import math
from fractions import Fraction

import numpy as np

from topoforge.geometry import DesignVector
from topoforge.simbackend import C_LIGHT_MM_GHZ, Backend, FrequencyGrid


class FunctionBackend(Backend):
    """Response computed by ``fn(design_array, freqs)``; every design is admissible."""

    name = "function"

    def __init__(self, fn):
        super().__init__()
        self.fn = fn

    def feasible(self, x, min_clearance=None):
        return True

    def simulate(self, x, grid, fidelity):
        return np.asarray(self.fn(x.to_array(), grid.freqs), dtype=float)


class ScriptedBackend(Backend):
    """Returns queued curves in order, ignoring the design."""

    name = "scripted"

    def __init__(self, curves):
        super().__init__()
        self.queue = list(curves)

    def feasible(self, x, min_clearance=None):
        return True

    def simulate(self, x, grid, fidelity):
        return np.asarray(self.queue.pop(0), dtype=float)


def quadratic_backend(x_star, slope=1000.0, curvature=500.0, R_max=-11.0):
    """Two samples per active coordinate, rising away from ``x_star`` on either side.

    The in-band objective is then roughly ``slope**2 * |x - x_star|**2 / n``.
    """
    x_star = np.asarray(x_star, dtype=float)
    n = x_star.size

    def fn(a, f):
        d = a[:n] - x_star
        up = R_max + slope * d + curvature * d**2
        down = R_max - slope * d + curvature * d**2
        return np.concatenate([up, down])

    return FunctionBackend(fn), FrequencyGrid(1.0, float(2 * n), 2 * n)


def square_patch(f1=5.5, eps_r=2.55, c=30.0):
    """Four-vertex diamond whose first mock mode sits at ``f1`` (feed at the centre)."""
    side = C_LIGHT_MM_GHZ / (2 * f1 * math.sqrt(eps_r))
    R = side / math.sqrt(2)
    return DesignVector(c, 0.0, 0.0, [R / c] * 4, [1.0] * 4)


def array_design(a):
    return DesignVector.from_array(np.asarray(a, dtype=float))


# -- exact geometry oracles ---------------------------------------------------------


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _on_segment(p, q, r):
    return min(p[0], r[0]) <= q[0] <= max(p[0], r[0]) and min(p[1], r[1]) <= q[1] <= max(p[1], r[1])


def exact_segments_meet(p1, p2, p3, p4):
    p1, p2, p3, p4 = ([Fraction(float(c)) for c in p] for p in (p1, p2, p3, p4))
    d1, d2 = _cross(p3, p4, p1), _cross(p3, p4, p2)
    d3, d4 = _cross(p1, p2, p3), _cross(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0:
        return True
    return ((d1 == 0 and _on_segment(p3, p1, p4)) or (d2 == 0 and _on_segment(p3, p2, p4))
            or (d3 == 0 and _on_segment(p1, p3, p2)) or (d4 == 0 and _on_segment(p1, p4, p2)))


def exact_is_simple(vertices):
    v = [tuple(p) for p in np.asarray(vertices)]
    n = len(v)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if exact_segments_meet(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


def _fast_meet(a, b, c, d):
    """Float orientation signs where they are unambiguous, exact arithmetic otherwise."""
    if (max(a[0], b[0]) < min(c[0], d[0]) or max(c[0], d[0]) < min(a[0], b[0])
            or max(a[1], b[1]) < min(c[1], d[1]) or max(c[1], d[1]) < min(a[1], b[1])):
        return False
    ds = (_cross(c, d, a), _cross(c, d, b), _cross(a, b, c), _cross(a, b, d))
    if min(abs(t) for t in ds) < 1e-9:
        return exact_segments_meet(a, b, c, d)
    return (ds[0] > 0) != (ds[1] > 0) and (ds[2] > 0) != (ds[3] > 0)


def filtered_is_simple(vertices):
    """All-pairs check with the same answers as ``exact_is_simple``, fast enough for 10^4 outlines."""
    v = [(float(x), float(y)) for x, y in np.asarray(vertices)]
    n = len(v)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _fast_meet(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


def scalar_clearance(point, vertices):
    """Signed distance by plain loops: winding-number containment and point-segment distances."""
    px, py = float(point[0]), float(point[1])
    v = [(float(a), float(b)) for a, b in vertices]
    n = len(v)
    best = float("inf")
    wn = 0
    for i in range(n):
        (ax, ay), (bx, by) = v[i], v[(i + 1) % n]
        dx, dy = bx - ax, by - ay
        L2 = dx * dx + dy * dy
        t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
        best = min(best, ((px - ax - t * dx) ** 2 + (py - ay - t * dy) ** 2) ** 0.5)
        cross = dx * (py - ay) - dy * (px - ax)
        if ay <= py < by and cross > 0:
            wn += 1
        elif by <= py < ay and cross < 0:
            wn -= 1
    return best if wn != 0 else -best
