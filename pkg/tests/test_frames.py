from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bundlelink import RankDeficiencyError, circle, frenet, gram_schmidt
from bundlelink.curves import TWO_PI
from bundlelink.frames import complete_orientation, fiber_cross, gs_derivative


@given(st.integers(0, 10_000), st.integers(1, 4))
@settings(max_examples=50, deadline=None)
def test_gram_schmidt_is_orthonormal_and_flag_preserving(seed, m):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(5, m, 4))
    Q, R = gram_schmidt(V, return_r=True)
    assert np.allclose(Q @ np.swapaxes(Q, -1, -2), np.eye(m), atol=1e-12)
    assert np.allclose(np.swapaxes(R, -1, -2) @ Q, V, atol=1e-10)
    assert np.all(np.diagonal(R, axis1=-2, axis2=-1) > 0)


def test_gram_schmidt_rank_deficiency_reports_index():
    V = np.array([[1.0, 0, 0], [2.0, 0, 0]])
    with pytest.raises(RankDeficiencyError) as ei:
        gram_schmidt(V)
    assert ei.value.index == 1


def test_gs_derivative_matches_finite_differences():
    rng = np.random.default_rng(3)
    A0, A1 = rng.normal(size=(2, 3, 5))
    V = lambda t: A0 + np.sin(t) * A1
    t, h = 0.4, 1e-5
    Q, R = gram_schmidt(V(t), return_r=True)
    fd = (gram_schmidt(V(t + h)) - gram_schmidt(V(t - h))) / (2 * h)
    assert np.allclose(gs_derivative(Q, R, np.cos(t) * A1), fd, atol=1e-8)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_complete_orientation_gives_positive_basis(seed):
    rng = np.random.default_rng(seed)
    Q = gram_schmidt(rng.normal(size=(3, 4)))
    full = np.vstack([Q, complete_orientation(Q)])
    assert np.linalg.det(full) == pytest.approx(1.0, abs=1e-12)


def test_frenet_frame_orthonormal_and_positive(preset_curve):
    t = np.linspace(0, TWO_PI, 64, endpoint=False)
    fa = frenet(preset_curve, t)
    F = fa.frame
    assert np.allclose(F @ np.swapaxes(F, -1, -2), np.eye(4), atol=1e-12)
    assert np.allclose(np.linalg.det(F), 1.0)
    assert np.all(fa.curvatures[:, :2] > 0)


def test_frenet_equations_hold(preset_curve):
    t, h = np.linspace(0.1, 6.0, 11), 1e-5
    fd = (frenet(preset_curve, t + h).frame - frenet(preset_curve, t - h).frame) / (2 * h)
    assert np.allclose(frenet(preset_curve, t).frame_derivative(), fd, atol=1e-7)


def test_circle_frenet_data():
    fa = frenet(circle(2.0), 0.3)
    assert fa.speed == pytest.approx(2.0)
    assert np.allclose(fa.curvatures, [0.5, 0.0], atol=1e-14)


def test_planar_circle_in_r4_is_rank_deficient():
    with pytest.raises(RankDeficiencyError):
        frenet(circle(2.0, dim=4), 0.3)


def test_curvature_of_a_tilted_ellipse():
    from bundlelink.curves import trig_curve
    c = trig_curve([{"cos": {"1": 2}}, {"sin": {"1": 1}}, {"sin": {"1": 1}}])
    # planar curve: kappa = |a' x a''| / |a'|^3 at t = 0
    a1, a2 = c(0.0, 1), c(0.0, 2)
    k = np.linalg.norm(np.cross(a1, a2)) / np.linalg.norm(a1) ** 3
    B = gram_schmidt(np.stack([a1, a2]))
    assert k == pytest.approx(np.linalg.norm(a2 - (a2 @ B[0]) * B[0]) / np.linalg.norm(a1) ** 2)


def test_fiber_cross_is_cross_in_r3():
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=(2, 3))
    assert np.allclose(fiber_cross(np.eye(3), u, v), np.cross(u, v))
