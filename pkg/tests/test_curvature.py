import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qmass.ambient import DESITTER, HYPERBOLIC, SPHERE
from qmass.body import make_ball, make_perturbed_ball
from qmass.curvature import classify, compute_curvature, curvature_at, normalized_symmetric
from qmass.grid import make_grid
from qmass.quermass import volume


@given(arrays(float, st.integers(1, 5), elements=st.floats(-3, 3)))
def test_elementary_symmetric_subset_sums(kappa):
    n = kappa.size
    E = normalized_symmetric(kappa)
    for k in range(n + 1):
        ref = sum(np.prod(c) for c in itertools.combinations(kappa, k)) / math.comb(n, k)
        assert E[k] == pytest.approx(ref, abs=1e-9 * (1 + abs(ref)))
    assert normalized_symmetric(kappa, n) == pytest.approx(E[n])


def test_elementary_symmetric_bad_order():
    with pytest.raises(ValueError):
        normalized_symmetric([1.0, 2.0], 3)


@pytest.mark.parametrize("space", [SPHERE, HYPERBOLIC, DESITTER])
@pytest.mark.parametrize("n,res", [(1, 64), (2, (16, 32))])
def test_ball_curvature_exact(space, n, res):
    r = 0.7
    f = compute_curvature(make_ball(space, r, grid=make_grid(n, res)))
    np.testing.assert_allclose(f.kappa, space.ball_principal_curvature(r), rtol=1e-12)
    np.testing.assert_allclose(f.area, 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2) * space.warp(r) ** n,
                               rtol=1e-12)


@pytest.mark.parametrize("space", [SPHERE, HYPERBOLIC])
def test_offset_ball_curvature_converges(space):
    r, d = 0.8, 0.2
    errs = []
    for res in ((16, 32), (32, 64)):
        f = compute_curvature(make_ball(space, r, d, [0.2, 0.3, 0.9], make_grid(2, res)))
        errs.append(np.abs(f.kappa - space.ball_principal_curvature(r)).max())
    assert errs[1] < 2e-3
    assert errs[0] / errs[1] > 6


@pytest.mark.parametrize("space,sign", [(SPHERE, -1), (HYPERBOLIC, 1)])
def test_gauss_bonnet_for_curves(space, sign):
    # total geodesic curvature of a simple closed curve = 2 pi - K * enclosed area
    errs = []
    for m in (256, 1024):
        b = make_perturbed_ball(space, 0.8, [(2, 0.05), (3, 0.02, [0.6, 0.8])], make_grid(1, m))
        errs.append(abs(compute_curvature(b).curvature_integral(1) - (2 * math.pi + sign * volume(b))))
    assert errs[1] < 1e-9
    assert errs[0] / errs[1] > 100  # fourth-order stencils


def test_weingarten_eigenvalues_match():
    b = make_perturbed_ball(HYPERBOLIC, 1.0, [(2, 0.03)], make_grid(2, (16, 32)))
    f = compute_curvature(b)
    ev = np.sort(np.linalg.eigvals(f.weingarten).real, axis=-1)
    np.testing.assert_allclose(ev, f.kappa, atol=1e-10)


def test_curvature_at_matches_nodes():
    g = make_grid(2, (32, 64))
    b = make_perturbed_ball(SPHERE, 0.6, [(2, 0.02), (3, 0.01, [1, 0, 0])], g)
    f = compute_curvature(b)
    k, rho = curvature_at(SPHERE, g.interpolant(b.rho), g.directions)
    np.testing.assert_allclose(rho, b.rho, atol=1e-6)
    assert np.abs(k - f.kappa).max() < 1e-2


def test_classification_flags():
    g = make_grid(2, (16, 32))
    c = classify(compute_curvature(make_ball(HYPERBOLIC, 0.5, grid=g)))
    assert c.strictly_convex and c.h_convex and c.m_convex == (True, True) and not c.unit_bounded
    c = classify(compute_curvature(make_ball(SPHERE, 1.0, grid=g)))
    assert c.unit_bounded and not c.h_convex
    c = classify(compute_curvature(make_ball(DESITTER, 0.5, grid=g)))
    assert c.unit_bounded and c.spacelike_margin == pytest.approx(1.0)
    c = classify(compute_curvature(make_ball(DESITTER, 0.0 + 1e-3, grid=g)))
    assert c.strictly_convex  # tanh of a small positive radius
    c = classify(compute_curvature(make_perturbed_ball(HYPERBOLIC, 1.0, [(4, 0.3)], g)))
    assert not c.strictly_convex
