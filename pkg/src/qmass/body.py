"""Bodies represented as radial graphs over a spherical grid."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import eval_legendre

from .ambient import DESITTER, SPHERE, GeometryError, Kind, SpaceForm, embed, space_from_name, unembed
from .grid import SphericalGrid, make_grid

SPACELIKE_MARGIN = 1e-6


class BodyParseError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True, eq=False)
class RadialGraphBody:
    space: SpaceForm
    grid: SphericalGrid
    rho: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float).ravel()
        if rho.size != self.grid.size:
            raise GeometryError(f"rho has {rho.size} values, grid has {self.grid.size} nodes")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.grid.n

    def with_rho(self, rho, **meta) -> "RadialGraphBody":
        return RadialGraphBody(self.space, self.grid, rho, {**self.meta, **meta})

    def validate(self) -> "RadialGraphBody":
        """Check that the body lies in the valid radial range (and is spacelike in de Sitter)."""
        self.space.check_radius(self.rho, strict_lower=True)
        if self.space is SPHERE and self.rho.max() >= math.pi / 2:
            raise GeometryError("sphere body must lie inside the open hemisphere (max rho < pi/2)")
        if self.space is DESITTER:
            v2 = spacelike_factor(self)
            if v2.min() < SPACELIKE_MARGIN:
                j = int(np.argmin(v2))
                raise GeometryError(f"graph is not spacelike at node {j} (v^2 = {v2[j]:.3e})")
        return self


def gradient_norm_sq(grid: SphericalGrid, rho) -> np.ndarray:
    """|D rho|^2 with respect to the round metric."""
    if grid.n == 1:
        rp, _ = grid.derivatives(rho)
        return (rp ** 2).ravel()
    rt, rp, *_ = grid.derivatives(rho)
    s = np.sin(grid.theta)[:, None]
    return (rt ** 2 + (rp / s) ** 2).ravel()


def spacelike_factor(body: RadialGraphBody) -> np.ndarray:
    """v^2 = 1 - |D rho|^2 / cosh^2 rho for de Sitter graphs."""
    return 1.0 - gradient_norm_sq(body.grid, body.rho) / np.cosh(body.rho) ** 2


# generators ------------------------------------------------------------------

def _unit(u, dim):
    if u is None:
        u = np.zeros(dim)
        u[0] = 1.0
    u = np.asarray(u, dtype=float)
    if u.shape != (dim,):
        raise GeometryError(f"direction must have {dim} components")
    nrm = np.linalg.norm(u)
    if nrm == 0:
        raise GeometryError("zero direction")
    return u / nrm


def offset_ball_radius(space: SpaceForm, r: float, d: float, cos_gamma):
    """Radial function of a ball of radius r whose centre sits at distance d along u.

    Solves the law of cosines of the space form for rho at each angle gamma.
    """
    cg = np.asarray(cos_gamma, dtype=float)
    if d == 0:
        return np.full(cg.shape, float(r))
    if space.kind is Kind.SPHERE:
        # cos r = cos d cos rho + sin d cos g sin rho  =  A cos(rho - delta)
        a, b = math.cos(d), math.sin(d) * cg
        amp = np.hypot(a, b)
        return np.arctan2(b, a) + np.arccos(np.clip(math.cos(r) / amp, -1, 1))
    if space.kind is Kind.HYPERBOLIC:
        # cosh r = cosh d cosh rho - sinh d cos g sinh rho
        a, b = math.cosh(d), -math.sinh(d) * cg
        # a cosh x + b sinh x = sqrt(a^2 - b^2) cosh(x + atanh(b/a))
        amp = np.sqrt(a * a - b * b)
        return np.arccosh(math.cosh(r) / amp) - np.arctanh(b / a)
    raise GeometryError("offset balls are only defined in the sphere and hyperbolic space")


def make_ball(space, r: float, d: float = 0.0, u=None, grid: SphericalGrid | None = None,
              validate: bool = True) -> RadialGraphBody:
    """Geodesic ball of radius r (or de Sitter slice region {0 <= r' <= r})."""
    space = space_from_name(space)
    grid = grid or make_grid(2)
    if space is DESITTER and d != 0:
        raise GeometryError("de Sitter bodies are coordinate slices only (d must be 0)")
    if space is SPHERE and r + d >= math.pi / 2:
        raise GeometryError("ball leaves the open hemisphere (r + d >= pi/2)")
    if d < 0 or r <= d:
        raise GeometryError("need 0 <= d < r so that the origin is interior")
    u = _unit(u, grid.n + 1)
    rho = offset_ball_radius(space, r, d, grid.directions @ u)
    body = RadialGraphBody(space, grid, rho, {"kind": "ball", "r": r, "d": d, "u": u.tolist()})
    return body.validate() if validate else body


def harmonic_mode(grid: SphericalGrid, degree: int, axis=None) -> np.ndarray:
    """Real harmonic of the given degree: cos(l(phi - phi0)) on S^1, P_l(x.axis) on S^2."""
    a = _unit(axis, grid.n + 1)
    x = grid.directions @ a
    if grid.n == 1:
        # cos(l * angle to axis)
        ang = np.arctan2(grid.directions @ np.array([-a[1], a[0]]), x)
        return np.cos(degree * ang)
    return eval_legendre(degree, x)


def make_perturbed_ball(space, r: float, perturbations=(), grid: SphericalGrid | None = None,
                        validate: bool = True) -> RadialGraphBody:
    """``rho = r + sum a_l Y_l``; each perturbation is ``(degree, amplitude[, axis])``.

    Convexity is not checked here; run the curvature classification afterwards.
    """
    space = space_from_name(space)
    grid = grid or make_grid(2)
    rho = np.full(grid.size, float(r))
    modes = []
    for p in perturbations:
        degree, amp = int(p[0]), float(p[1])
        axis = _unit(p[2] if len(p) > 2 and p[2] is not None else None, grid.n + 1)
        rho = rho + amp * harmonic_mode(grid, degree, axis)
        modes.append([degree, amp, axis.tolist()])
    body = RadialGraphBody(space, grid, rho, {"kind": "perturbed_ball", "r": r, "perturbations": modes})
    return body.validate() if validate else body


def random_perturbations(rng: np.random.Generator, n: int, r: float, count: int = 3,
                         degrees=(1, 2, 3), rel_amplitude: float = 0.05):
    """Random (degree, amplitude, axis) triples with |amplitude| <= rel_amplitude * r."""
    out = []
    for _ in range(count):
        deg = int(rng.choice(degrees))
        amp = float(rng.uniform(-1, 1) * rel_amplitude * r)
        axis = rng.normal(size=n + 1)
        out.append((deg, amp, (axis / np.linalg.norm(axis)).tolist()))
    return out


def body_from_spec(spec: dict, grid: SphericalGrid | None = None) -> RadialGraphBody:
    """Build a body from a BodySpec-like dict (kinds: ball, perturbed_ball, grid)."""
    space = space_from_name(spec["space"])
    if grid is None:
        n = int(spec.get("n", 2))
        grid = make_grid(n, spec.get("resolution"))
    kind = spec.get("kind", "ball")
    if kind == "ball":
        return make_ball(space, spec["r"], spec.get("d", 0.0), spec.get("u"), grid)
    if kind == "perturbed_ball":
        return make_perturbed_ball(space, spec["r"], spec.get("perturbations", ()), grid)
    if kind == "grid":
        return RadialGraphBody(space, grid, spec["rho"], {"kind": "grid"}).validate()
    raise BodyParseError("kind", f"unknown body kind {kind!r}")


# recentering -----------------------------------------------------------------

def _distance_from(space: SpaceForm, z, pts):
    if space is SPHERE:
        return np.arccos(np.clip(pts @ z, -1.0, 1.0))
    c = pts[:, 0] * z[0] - pts[:, 1:] @ z[1:]
    return np.arccosh(np.maximum(c, 1.0))


def isometry_to_origin(space: SpaceForm, y) -> np.ndarray:
    """Rotation (sphere) or boost (hyperbolic) mapping exp_o(y) to the origin o = e_0."""
    y = np.asarray(y, dtype=float)
    m = y.size + 1
    M = np.eye(m)
    d = float(np.linalg.norm(y))
    if d == 0:
        return M
    w = np.concatenate([[0.0], y / d])
    e0 = np.eye(m)[0]
    if space is SPHERE:
        c, s = math.cos(d), math.sin(d)
        # M e0 = c e0 - s w, M w = s e0 + c w
        return M + (c - 1) * (np.outer(e0, e0) + np.outer(w, w)) - s * np.outer(w, e0) + s * np.outer(e0, w)
    c, s = math.cosh(d), math.sinh(d)
    # M e0 = c e0 - s w, M w = -s e0 + c w
    return M + (c - 1) * (np.outer(e0, e0) + np.outer(w, w)) - s * np.outer(w, e0) - s * np.outer(e0, w)


def minimax_center(body: RadialGraphBody, tol: float = 1e-13):
    """Tangent vector y at the origin minimising the max node distance from exp(y).

    Coordinate descent with step halving over the n+1 tangent coordinates.
    """
    space = body.space
    pts = embed(space, body.rho, body.grid.directions)
    m = body.n + 1

    def cost(y):
        z = embed(space, np.linalg.norm(y), y / max(np.linalg.norm(y), 1e-300))
        return _distance_from(space, z, pts).max()

    y = np.zeros(m)
    best = cost(y)
    step = 0.25 * float(body.rho.max())
    while step > tol:
        moved = False
        for i in range(m):
            for sgn in (1.0, -1.0):
                trial = y.copy()
                trial[i] += sgn * step
                c = cost(trial)
                if c < best:
                    y, best, moved = trial, c, True
                    break
        if not moved:
            step *= 0.5
    return y, best


def recenter(body: RadialGraphBody, bisect_iters: int = 60) -> RadialGraphBody:
    """Move the minimax centre to the origin and resample on the same grid."""
    space = body.space
    if space is DESITTER:
        raise GeometryError("recenter is not supported in de Sitter space")
    y, _ = minimax_center(body)
    if not np.any(y):
        return body
    M = isometry_to_origin(space, y)
    Minv = np.linalg.inv(M)
    spl = body.grid.interpolant(body.rho)
    dirs = body.grid.directions

    def excess(s):
        q = embed(space, s, dirs) @ Minv.T
        r_old, u_old = unembed(space, q)
        return r_old - spl(u_old)

    lo = np.zeros(dirs.shape[0])
    hi = np.full_like(lo, min(float(body.rho.max()) + float(np.linalg.norm(y)) + 0.1, space.r_max - 1e-9))
    if np.any(excess(hi) <= 0):
        raise GeometryError("recentered body is not star-shaped about the new centre")
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        pos = excess(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    rho = 0.5 * (lo + hi)
    return body.with_rho(rho, recentered_by=y.tolist()).validate()


# serialisation ---------------------------------------------------------------

def body_to_dict(body: RadialGraphBody) -> dict:
    res = list(body.grid.resolution)
    return {
        "space": body.space.name,
        "n": body.n,
        "resolution": res,
        # repr() of a float is the shortest round-tripping decimal (<= 17 digits)
        "rho": [float(repr(float(x))) for x in body.rho],
        "meta": _jsonable(body.meta),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def body_from_dict(data: dict) -> RadialGraphBody:
    if not isinstance(data, dict):
        raise BodyParseError("<root>", "expected a JSON object")
    for key in ("space", "n", "resolution", "rho"):
        if key not in data:
            raise BodyParseError(key, "missing required field")
    try:
        space = space_from_name(data["space"])
    except GeometryError as exc:
        raise BodyParseError("space", str(exc)) from None
    n = data["n"]
    if n not in (1, 2):
        raise BodyParseError("n", f"unsupported dimension {n!r}")
    res = data["resolution"]
    if not isinstance(res, list) or len(res) != n or not all(isinstance(v, int) for v in res):
        raise BodyParseError("resolution", f"expected a list of {n} integers")
    try:
        grid = make_grid(n, res if n == 2 else res[0])
    except GeometryError as exc:
        raise BodyParseError("resolution", str(exc)) from None
    rho = data["rho"]
    if not isinstance(rho, list) or len(rho) != grid.size:
        raise BodyParseError("rho", f"expected a flat list of {grid.size} numbers")
    try:
        rho = np.array(rho, dtype=float)
    except (TypeError, ValueError):
        raise BodyParseError("rho", "non-numeric entries") from None
    meta = data.get("meta", {})
    if not isinstance(meta, dict):
        raise BodyParseError("meta", "expected an object")
    return RadialGraphBody(space, grid, rho, meta)


def save_body(body: RadialGraphBody, path) -> None:
    Path(path).write_text(json.dumps(body_to_dict(body), indent=1, sort_keys=True) + "\n")


def load_body(path, validate: bool = True) -> RadialGraphBody:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise BodyParseError("<root>", f"invalid JSON: {exc}") from None
    body = body_from_dict(data)
    return body.validate() if validate else body
