from __future__ import annotations

import numpy as np
import pytest

from bundlelink import (RegularityError, ResidualError, TransversalityError, circle, gauss_linking_r3,
                        linking_integrand, linking_number_integral, linking_number_intersection,
                        orthogonal_bundle, pushoff, trivial_bundle)
from bundlelink.curves import TWO_PI, trig_curve
from bundlelink.linking import InvariantResult, finalize, gauss_integrand, projected_bundle

from conftest import GaugedBundle, preset

HOPF_A = circle(1.0)
HOPF_B = trig_curve([{"const": 1, "cos": {"1": 1}}, {}, {"sin": {"1": 1}}])
E3 = np.array([0.0, 0.0, 1.0])


def test_hopf_golden_value():
    # sign frozen: (cos t, sin t, 0) against (1 + cos s, 0, sin s)
    assert gauss_linking_r3(HOPF_A, HOPF_B).value == -1
    assert linking_number_integral(HOPF_A, HOPF_B, trivial_bundle()).value == -1
    assert linking_number_intersection(HOPF_A, HOPF_B, trivial_bundle(), mu=E3).value == -1


def test_hopf_antisymmetric_under_reversal():
    r = linking_number_integral(HOPF_A, HOPF_B.reversed(), trivial_bundle())
    assert r.value == 1


def test_trivial_bundle_integrand_is_gauss_integrand():
    t, s = np.meshgrid(np.linspace(0, 6, 7), np.linspace(0.3, 6.2, 5))
    assert np.allclose(linking_integrand(HOPF_A, HOPF_B, trivial_bundle(), t, s),
                       gauss_integrand(HOPF_A, HOPF_B, t, s), atol=1e-12)


def test_distant_circles_unlinked():
    far = circle(1.0, center=[5.0, 0, 0])
    assert linking_number_integral(HOPF_A, far, trivial_bundle()).value == 0
    assert linking_number_intersection(HOPF_A, far, trivial_bundle(), mu=E3).value == 0


def test_default_direction_on_coplanar_circles_is_not_transverse():
    far = circle(1.0, center=[5.0, 0, 0])
    with pytest.raises(TransversalityError):
        linking_number_intersection(HOPF_A, far, trivial_bundle())


def test_embedded_pair_with_projected_bundle():
    a, b = HOPF_A.embed(4), HOPF_B.embed(4)
    bundle = projected_bundle(4)
    assert linking_number_integral(a, b, bundle).value == -1
    assert linking_number_intersection(a, b, bundle, mu=np.eye(4)[2]).value == -1


def test_integrand_is_frame_independent():
    c = preset("example1", 1.0)
    beta = pushoff(c, 2, 0.05)
    base = orthogonal_bundle(c)
    rng = np.random.default_rng(11)
    t, s = rng.uniform(0, TWO_PI, (2, 50))
    ref = linking_integrand(c, beta, base, t, s)
    for _ in range(5):
        g = GaugedBundle(base, rng)
        assert np.max(np.abs(linking_integrand(c, beta, g, t, s) - ref)) < 1e-10 * (1 + np.abs(ref).max())


@pytest.mark.parametrize("delta", [0.05, 0.02])
def test_pushoff_linking_methods_agree(delta):
    c = preset("example1", 1.0)
    b = orthogonal_bundle(c)
    beta = pushoff(c, 2, delta)
    i = linking_number_integral(beta, c, b, 512)
    # b_1 is parallel to n alpha'' here, which makes the whole diagonal a root curve; use b_2
    j = linking_number_intersection(beta, c, b, mu=1)
    assert i.value == j.value == 1


def test_intersecting_curves_name_the_point():
    through = trig_curve([{"cos": {"1": 1}}, {"sin": {"1": 1}}, {"sin": {"2": 0.5}}])
    with pytest.raises(RegularityError) as ei:
        linking_number_integral(HOPF_A, through, trivial_bundle(), 64)
    assert ei.value.t is not None and ei.value.s is not None


def test_coarse_grid_refuses_to_round():
    c = preset("example1", 1.0)
    with pytest.raises(ResidualError) as ei:
        linking_number_integral(pushoff(c, 2, 1e-2), c, orthogonal_bundle(c), 16, adaptive=False)
    assert ei.value.residual > 0.05


def test_finalize_contract():
    r = finalize(2.9999, "x")
    assert isinstance(r, InvariantResult) and r.value == 3 and r.residual == pytest.approx(1e-4)
    with pytest.raises(ResidualError):
        finalize(0.5, "x")
    assert r.to_dict()["value"] == 3
