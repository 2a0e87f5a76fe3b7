import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import exact_is_simple, filtered_is_simple, scalar_clearance
from topoforge.errors import DegenerateOutline, FeedOutsideOutline, FeedSamplingExhausted
from topoforge.fixtures import NAMES, reference_design
from topoforge.geometry import (
    DEFAULT_FIXED,
    DesignVector,
    GenerationRanges,
    build_layout,
    design_clearance,
    feed_clearance,
    is_feasible,
    is_simple,
    layout_svg,
    make_bounds,
    outline_angles,
    random_design,
    scale_design,
    vertices_of,
    write_vertex_csv,
)

SQUARE = DesignVector(30.0, 0.0, 0.0, [0.5] * 4, [1.0] * 4)


def test_uniform_increments_give_square():
    np.testing.assert_allclose(outline_angles(SQUARE.phi), [math.pi / 2, math.pi, 1.5 * math.pi, 2 * math.pi])
    v = vertices_of(SQUARE)
    np.testing.assert_allclose(np.hypot(v[:, 0], v[:, 1]), 15.0)
    np.testing.assert_allclose(v[-1], [15.0, 0.0], atol=1e-12)


def test_last_angle_is_exactly_two_pi():
    phi = np.array([0.1, 0.3, 0.7, 0.2, 0.05])
    assert outline_angles(phi)[-1] == 2 * math.pi


def test_first_reference_vector_layout():
    x = reference_design("x1_0")
    assert x.dim == 53 and x.c == 42
    lay = build_layout(x)
    assert lay.patch_side == pytest.approx(53.76)
    assert lay.substrate_side == pytest.approx(53.76 + 10.0)
    assert is_simple(lay.vertices)


def test_zero_radius_is_degenerate():
    x = DesignVector(30.0, 0.0, 0.0, [0.5, 0.0, 0.5, 0.5], [1.0] * 4)
    with pytest.raises(DegenerateOutline):
        build_layout(x)


def test_feed_outside_outline_raises():
    x = DesignVector(30.0, 0.99, 0.0, [0.5] * 4, [1.0] * 4)
    with pytest.raises(FeedOutsideOutline):
        build_layout(x)
    assert not is_feasible(x)


def test_square_and_bowtie():
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], float)
    assert is_simple(square) and exact_is_simple(square)
    assert not is_simple(bowtie) and not exact_is_simple(bowtie)


def test_clearance_of_centred_feed():
    lay = build_layout(SQUARE)
    assert feed_clearance(lay) == pytest.approx(15 * math.cos(math.pi / 4))


def test_clearance_on_vertex_and_outside():
    on_vertex = DesignVector(30.0, 0.5, 0.0, [0.5] * 4, [1.0] * 4)
    assert design_clearance(on_vertex) == pytest.approx(0.0, abs=1e-12)
    outside = DesignVector(30.0, 0.8, 0.0, [0.5] * 4, [1.0] * 4)
    assert design_clearance(outside) < 0


def test_random_designs_pass_brute_force_oracles():
    rng = np.random.default_rng(7)
    for k in range(300):
        x = random_design(rng)
        lay = build_layout(x)
        assert is_simple(lay.vertices)
        if k < 40:
            assert exact_is_simple(lay.vertices)
        assert scalar_clearance(lay.feed, lay.vertices) >= DEFAULT_FIXED.r2


def test_random_design_is_deterministic_and_sized():
    a = random_design(np.random.default_rng(3))
    b = random_design(np.random.default_rng(3))
    assert a == b
    assert a.dim == 53 and a.c == 30.0


def test_feed_sampling_gives_up():
    ranges = GenerationRanges(rho=(0.1, 0.2), rho_f=(0.95, 0.99))
    with pytest.raises(FeedSamplingExhausted):
        random_design(np.random.default_rng(0), L=8, ranges=ranges, max_tries=50)


def test_scale_identity_and_linearity():
    x = random_design(np.random.default_rng(11))
    assert scale_design(x, x.c) == x
    np.testing.assert_allclose(vertices_of(scale_design(x, 45.0)), 1.5 * vertices_of(x))


def test_rescaled_reference_design_matches_published_one():
    assert scale_design(reference_design("x2_0"), 37.64) == reference_design("x6_0")


def test_make_bounds_formulas():
    x = reference_design("x1_0")
    b = make_bounds(x)
    assert (b.lb[0], b.ub[0]) == (40.0, 45.0)
    assert b.lb[2] == pytest.approx(5.72 - math.pi / 2)
    assert b.ub[2] == pytest.approx(5.72 + 3 * math.pi / 2)
    assert b.ub[1] == pytest.approx(float(np.max(x.rho)))
    np.testing.assert_array_equal(b.lb[3:28], 0.1)
    np.testing.assert_array_equal(b.ub[28:], 0.8)


def test_clip_reports_count():
    x = reference_design("x1_0")
    n_zero_phi = int(np.count_nonzero(x.phi < 0.01))
    assert n_zero_phi > 0
    clipped, n = make_bounds(x).clip(x)
    assert n == n_zero_phi
    assert make_bounds(x).contains(clipped)


@pytest.mark.parametrize("name", NAMES)
def test_reference_vectors_have_full_length(name):
    x = reference_design(name)
    assert x.L == 25
    assert is_simple(build_layout(x, check_feed=False).vertices)


def test_svg_and_vertex_csv(tmp_path):
    x = random_design(np.random.default_rng(2))
    lay = build_layout(x)
    svg = layout_svg(lay)
    pts = svg.split('points="')[1].split('"')[0].split()
    assert len(pts) == x.L
    write_vertex_csv(lay, tmp_path / "v.csv")
    rows = (tmp_path / "v.csv").read_text().strip().splitlines()
    assert rows[0] == "index,x_mm,y_mm" and len(rows) == x.L + 1


def test_from_array_rejects_bad_length():
    with pytest.raises(ValueError):
        DesignVector.from_array(np.ones(10))
    with pytest.raises(ValueError):
        DesignVector.from_array(np.ones(7))


@given(st.integers(0, 2**32 - 1), st.integers(8, 40))
def test_random_outlines_are_simple(seed, L):
    x = random_design(np.random.default_rng(seed), L=L)
    lay = build_layout(x)
    assert is_simple(lay.vertices)
    assert feed_clearance(lay) >= DEFAULT_FIXED.r2


@given(st.integers(0, 2**32 - 1), st.floats(5.0, 80.0))
def test_text_round_trip_and_scaling(seed, c_new):
    x = random_design(np.random.default_rng(seed), L=6)
    assert DesignVector.from_text(x.to_text(precision=17)) == x
    y = scale_design(x, c_new)
    np.testing.assert_allclose(vertices_of(y), vertices_of(x) * (c_new / x.c), rtol=1e-12, atol=1e-12)
    assert design_clearance(y) == pytest.approx(design_clearance(x) * c_new / x.c, rel=1e-9)


def test_array_is_read_only():
    x = random_design(np.random.default_rng(1), L=5)
    with pytest.raises(ValueError):
        x.rho[0] = 3.0


@given(st.lists(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=4, max_size=9))
def test_filtered_oracle_matches_exact(pts):
    # small integer lattices produce plenty of touching and collinear edges
    v = np.array(pts, dtype=float)
    assert filtered_is_simple(v) == exact_is_simple(v)
