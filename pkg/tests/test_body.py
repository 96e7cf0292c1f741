import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmass.ambient import DESITTER, HYPERBOLIC, SPHERE, GeometryError, embed, model_inner
from qmass.body import (BodyParseError, body_from_dict, body_from_spec, body_to_dict, isometry_to_origin,
                        load_body, make_ball, make_perturbed_ball, minimax_center, offset_ball_radius,
                        random_perturbations, recenter, save_body)
from qmass.grid import make_grid

G = make_grid(2, (16, 32))


@pytest.mark.parametrize("space", [SPHERE, HYPERBOLIC, DESITTER])
def test_centred_ball_is_constant(space):
    b = make_ball(space, 0.6, grid=G)
    np.testing.assert_array_equal(b.rho, 0.6)
    assert not b.rho.flags.writeable


@given(st.sampled_from([SPHERE, HYPERBOLIC]), st.floats(0.2, 0.9), st.floats(0.0, 0.9))
def test_offset_ball_points_are_equidistant(space, r, frac):
    d = frac * r * 0.6
    u = np.array([0.3, -0.5, 0.8])
    u /= np.linalg.norm(u)
    b = make_ball(space, r, d, u, G)
    pts = embed(space, b.rho, G.directions)
    centre = embed(space, d, u)
    ip = model_inner(space, pts, centre)
    dist = np.arccos(np.clip(ip, -1, 1)) if space is SPHERE else np.arccosh(np.maximum(-ip, 1))
    np.testing.assert_allclose(dist, r, atol=1e-11)


def test_offset_radius_extremes():
    # along the offset direction the radial value is r + d, opposite r - d
    for space in (SPHERE, HYPERBOLIC):
        assert offset_ball_radius(space, 0.7, 0.2, np.array([1.0]))[0] == pytest.approx(0.9)
        assert offset_ball_radius(space, 0.7, 0.2, np.array([-1.0]))[0] == pytest.approx(0.5)


def test_ball_validation():
    with pytest.raises(GeometryError):
        make_ball(SPHERE, 1.2, 0.5, grid=G)
    with pytest.raises(GeometryError):
        make_ball(DESITTER, 1.0, 0.1, grid=G)
    with pytest.raises(GeometryError):
        make_ball(HYPERBOLIC, 0.3, 0.4, grid=G)


def test_steep_de_sitter_graph_is_rejected():
    # |D rho| >= cosh rho makes the graph timelike
    with pytest.raises(GeometryError, match="spacelike"):
        make_perturbed_ball(DESITTER, 0.3, [(4, 0.6)], G)


def test_random_perturbations_deterministic():
    a = random_perturbations(np.random.default_rng(3), 2, 1.0, 4)
    b = random_perturbations(np.random.default_rng(3), 2, 1.0, 4)
    assert a == b
    assert all(abs(p[1]) <= 0.05 for p in a)


@pytest.mark.parametrize("space", [SPHERE, HYPERBOLIC])
def test_isometry_sends_centre_to_origin(space):
    y = np.array([0.1, -0.2, 0.25])
    M = isometry_to_origin(space, y)
    d = np.linalg.norm(y)
    p = embed(space, d, y / d)
    np.testing.assert_allclose(M @ p, np.eye(4)[0], atol=1e-13)
    eta = np.diag([1.0, 1, 1, 1]) if space is SPHERE else np.diag([-1.0, 1, 1, 1])
    np.testing.assert_allclose(M.T @ eta @ M, eta, atol=1e-13)


@pytest.mark.parametrize("space", [SPHERE, HYPERBOLIC])
def test_recenter_offset_ball(space):
    g = make_grid(2, (32, 64))
    b = make_ball(space, 0.8, 0.25, [1.0, 1.0, 0.5], g)
    y, _ = minimax_center(b)
    assert np.linalg.norm(y) == pytest.approx(0.25, abs=1e-6)
    c = recenter(b)
    np.testing.assert_allclose(c.rho, 0.8, atol=1e-6)
    assert recenter(c) is c or np.abs(recenter(c).rho - c.rho).max() < 1e-8


def test_recenter_rejects_de_sitter():
    with pytest.raises(GeometryError):
        recenter(make_ball(DESITTER, 0.5, grid=G))


def test_serialisation_roundtrip(tmp_path):
    b = make_perturbed_ball(HYPERBOLIC, 1.0, [(2, 0.02), (3, -0.01, [0, 1, 0])], G)
    path = tmp_path / "b.json"
    save_body(b, path)
    c = load_body(path)
    np.testing.assert_array_equal(b.rho, c.rho)
    assert c.space is HYPERBOLIC and c.grid.resolution == (16, 32)
    assert c.meta["perturbations"][1][0] == 3
    assert path.read_text() == json.dumps(body_to_dict(c), indent=1, sort_keys=True) + "\n"


@pytest.mark.parametrize("field,mutate", [
    ("space", lambda d: d.update(space="torus")),
    ("n", lambda d: d.update(n=4)),
    ("resolution", lambda d: d.update(resolution=[16])),
    ("rho", lambda d: d.update(rho=[0.5] * 7)),
    ("rho", lambda d: d.pop("rho")),
    ("meta", lambda d: d.update(meta=[1])),
])
def test_parse_errors_name_the_field(field, mutate):
    d = body_to_dict(make_ball(SPHERE, 0.5, grid=G))
    mutate(d)
    with pytest.raises(BodyParseError) as exc:
        body_from_dict(d)
    assert exc.value.field == field


def test_body_from_spec_kinds():
    b = body_from_spec({"space": "sphere", "n": 1, "resolution": 64, "kind": "ball", "r": 0.4})
    assert b.n == 1 and np.allclose(b.rho, 0.4)
    with pytest.raises(BodyParseError):
        body_from_spec({"space": "sphere", "kind": "blob"})
