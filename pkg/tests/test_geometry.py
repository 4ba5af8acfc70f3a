import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tdl.errors import CombinatorialBudgetExceeded, EmptySweep, NoNonDegenerateSimplex
from tdl.geometry import (affine_rank, annulus_points, geometric_bound_sweep, max_collinear,
                          min_noncoplanar_diameter, snap_levels)
from tdl.lattice import QuadraticForm, eval_form

from oracles import quad_scan_min_diameter, triple_scan_min_diameter

point_sets = st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=3, max_size=12, unique=True)


def test_annulus_points_exact():
    Q = QuadraticForm((1.0, 1.0))
    ps = annulus_points(Q, 25.0, 1.0)
    q = eval_form(Q, ps.points)
    assert np.all((q >= 25) & (q <= 26))
    # r2(25) + r2(26) = 12 + 8
    assert len(ps) == 20
    with pytest.raises(ValueError):
        annulus_points(Q, 0.0)
    with pytest.raises(ValueError):
        annulus_points(Q, 3.0, width=0.0)


def test_triangle_example():
    D, diag = min_noncoplanar_diameter([[0, 0], [1, 0], [0, 1], [5, 5]])
    assert D == pytest.approx(math.sqrt(2))
    assert abs(diag.determinant) == 1
    assert diag.vertices.shape == (3, 2)


def test_collinear_raises():
    with pytest.raises(NoNonDegenerateSimplex):
        min_noncoplanar_diameter([[0, 0], [1, 1], [2, 2], [5, 5]])
    with pytest.raises(NoNonDegenerateSimplex):
        min_noncoplanar_diameter([[0, 0], [1, 1]])


def test_budget_cap():
    pts = np.stack(np.meshgrid(np.arange(50), np.arange(50), indexing="ij"), -1).reshape(-1, 2)
    with pytest.raises(CombinatorialBudgetExceeded):
        min_noncoplanar_diameter(pts)


@settings(max_examples=60)
@given(point_sets)
def test_min_diameter_matches_triple_scan(pts):
    pts = np.array(pts)
    if affine_rank(pts) < 2:
        with pytest.raises(NoNonDegenerateSimplex):
            min_noncoplanar_diameter(pts)
        return
    D, diag = min_noncoplanar_diameter(pts)
    assert D == triple_scan_min_diameter(pts)
    assert affine_rank(diag.vertices) == 2


@settings(max_examples=25)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3)),
                min_size=4, max_size=9, unique=True))
def test_min_diameter_matches_quad_scan_3d(pts):
    pts = np.array(pts)
    if affine_rank(pts) < 3:
        return
    D, _ = min_noncoplanar_diameter(pts)
    assert D == pytest.approx(quad_scan_min_diameter(pts), rel=0, abs=0)


@settings(max_examples=40)
@given(point_sets)
def test_min_diameter_translation_invariant(pts):
    pts = np.array(pts)
    if affine_rank(pts) < 2:
        return
    shift = np.array([17, -4])
    assert min_noncoplanar_diameter(pts)[0] == min_noncoplanar_diameter(pts + shift)[0]


def test_affine_rank_and_collinear():
    assert affine_rank([[0, 0], [1, 1], [3, 3]]) == 1
    assert affine_rank([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]) == 3
    assert max_collinear([[0, 0], [1, 1], [2, 2], [0, 1], [5, 0]]) == 3
    assert max_collinear([[0, 0], [2, 1]]) == 2


def test_snap_levels_distinct():
    Q = QuadraticForm((1.0, 1.69))
    levels = snap_levels(Q, [10.0, 10.0, 10.2], distinct=True)
    assert len(set(levels)) == 3 and levels == sorted(levels)
    for lv in levels:
        ps = annulus_points(Q, lv)
        assert affine_rank(ps.points) == 2


def test_sweep_at_x25_matches_oracle():
    Q = QuadraticForm((1.0, 1.0))
    sweep = geometric_bound_sweep(Q, [25.0])
    ps = annulus_points(Q, 25.0)
    assert sweep.samples[0].D == triple_scan_min_diameter(ps.points)
    assert sweep.samples[0].ratio == pytest.approx(sweep.samples[0].D / 25 ** (1 / 6))


def test_sweep_skips_and_envelope():
    Q = QuadraticForm((1.0, 1.0))
    sweep = geometric_bound_sweep(Q, [3.1, 25.0, 50.0, 100.0], width=0.5)
    assert any(x == 3.1 for x, _ in sweep.skipped)
    assert sweep.fit is not None and len(sweep.samples) == 3
    env = sweep.fit.y
    assert np.all(np.diff(env) >= 0)
    with pytest.raises(EmptySweep):
        geometric_bound_sweep(Q, [3.1], width=0.5)
