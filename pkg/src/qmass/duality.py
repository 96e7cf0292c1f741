"""Gauss-map duality between the sphere pair and the hyperbolic / de Sitter pair.

The dual point of a boundary point is its unit normal read as a point of the
dual ambient: for the sphere and hyperbolic space the outward normal, for de
Sitter the future timelike normal.  Radially, every case reduces to a
support-function problem.  With ``T = tan, tanh, coth`` for sphere,
hyperbolic and de Sitter bodies respectively, put

    h(u) = max_theta T(rho(theta)) <theta, u>,

then the dual radial function is ``cot rho* = h`` (sphere, parametrised from
the antipode of the origin), ``tanh rho* = h`` (hyperbolic -> de Sitter) and
``coth rho* = h`` (de Sitter -> hyperbolic).  The maximiser theta(u) is the
Gauss-map preimage of the dual node u.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.signal import resample
from scipy.spatial import cKDTree

from .ambient import DESITTER, HYPERBOLIC, SPHERE, GeometryError, SpaceForm, embed as embed_point, model_inner
from .body import RadialGraphBody
from .curvature import CurvatureField, compute_curvature, curvature_at
from .grid import SphericalGrid

KAPPA_GUARD = 1e-6
FD_STEP = 1e-4
NEWTON_TOL = 1e-13
NEWTON_MAXIT = 30


class PolarError(GeometryError):
    """Dual construction failed (degenerate curvature or a fold in the Gauss map)."""


@dataclass(frozen=True, eq=False)
class AmbientEmbedding:
    space: SpaceForm
    dual_space: SpaceForm
    X: np.ndarray  # (N, n+2) node positions
    Xstar: np.ndarray  # (N, n+2) unit normals, i.e. points of the dual ambient

    @property
    def pair(self) -> str:
        return {SPHERE: "S<->S", HYPERBOLIC: "H->dS", DESITTER: "dS->H"}[self.space]

    def inner(self, x, y):
        return model_inner(self.space, x, y)

    def dual_directions(self) -> np.ndarray:
        """Directions over S^n at which the dual graph passes through Xstar."""
        s = self.Xstar[:, 1:]
        return s / np.linalg.norm(s, axis=1, keepdims=True)


def tangent_frame(grid: SphericalGrid) -> np.ndarray:
    """Orthonormal tangent frame of S^n at every node, shape (N, n, n+1)."""
    if grid.n == 1:
        ph = grid.phi
        return np.stack([-np.sin(ph), np.cos(ph)], axis=-1)[:, None, :]
    th, ph = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    th, ph = th.ravel(), ph.ravel()
    e_t = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1)
    e_p = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=-1)
    return np.stack([e_t, e_p], axis=1)


def embed(body: RadialGraphBody, field: CurvatureField | None = None) -> AmbientEmbedding:
    field = field or compute_curvature(body)
    space, rho, u = body.space, body.rho, body.grid.directions
    grad = np.einsum("ni,nij->nj", field.grad, tangent_frame(body.grid))
    v = field.v[:, None]
    X = embed_point(space, rho, u)
    r = rho[:, None]
    if space is SPHERE:
        head, tail, corr = -np.sin(r), np.cos(r) * u, -grad / np.sin(r)
    elif space is HYPERBOLIC:
        head, tail, corr = np.sinh(r), np.cosh(r) * u, -grad / np.sinh(r)
    else:
        head, tail, corr = np.cosh(r), np.sinh(r) * u, grad / np.cosh(r)
    Xs = np.concatenate([head, tail + corr], axis=1) / v
    return AmbientEmbedding(space, space.dual, X, Xs)


def _radial_of_dual(space: SpaceForm, Xs) -> np.ndarray:
    """Dual radial value of model points Xs (sphere: measured from the antipode)."""
    nrm = np.linalg.norm(Xs[:, 1:], axis=1)
    if space is SPHERE:
        return np.arctan2(nrm, -Xs[:, 0])
    if space is HYPERBOLIC:
        return np.arcsinh(Xs[:, 0])
    return np.arcsinh(nrm)


def _T(space: SpaceForm, r):
    if space is SPHERE:
        return np.tan(r)
    if space is HYPERBOLIC:
        return np.tanh(r)
    return 1.0 / np.tanh(r)


def _dual_radius_from_support(space: SpaceForm, h):
    h = np.asarray(h, dtype=float)
    if space is SPHERE:
        return np.arctan2(1.0, h)
    if space is HYPERBOLIC:
        if np.any(h >= 1):
            raise PolarError("support value >= 1: polar leaves de Sitter space")
        if np.any(h <= 0):
            raise PolarError("polar body leaves the upper branch (origin not interior)")
        return np.arctanh(h)
    if np.any(h <= 1):
        raise PolarError("support value <= 1: polar does not lie in hyperbolic space")
    return np.arctanh(1.0 / h)


def _chart_basis(p: np.ndarray) -> np.ndarray:
    """Orthonormal tangent basis at unit vectors p, shape (N, n, n+1)."""
    if p.shape[1] == 2:
        return np.stack([-p[:, 1], p[:, 0]], axis=-1)[:, None, :]
    a = np.zeros_like(p)
    idx = np.argmin(np.abs(p), axis=1)
    a[np.arange(len(p)), idx] = 1.0
    e1 = np.cross(p, a)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(p, e1)
    return np.stack([e1, e2], axis=1)


def support_solve(body: RadialGraphBody, targets, field: CurvatureField | None = None,
                  emb: AmbientEmbedding | None = None):
    """Maximise T(rho(theta)) <theta, u> over theta for every target direction u.

    Starts from the source node whose Gauss-map image is nearest to u and
    refines with Newton steps in a tangent chart (finite-difference gradient
    and Hessian of the quintic spline of rho).  Returns ``(h, theta_star)``.
    """
    space, grid = body.space, body.grid
    targets = np.asarray(targets, dtype=float)
    field = field or compute_curvature(body)
    if field.kappa.min() < KAPPA_GUARD:
        raise PolarError(f"body is not strictly convex enough for duality (kappa_min = {field.kappa.min():.3e})")
    emb = emb or embed(body, field)
    spl = grid.interpolant(body.rho)
    _, nearest = cKDTree(emb.dual_directions()).query(targets)
    p = grid.directions[nearest].copy()
    n = grid.n
    hs = FD_STEP

    def objective(q, chart=None):
        return _T(space, spl(q, chart=chart)) * np.sum(q * targets, axis=1)

    offsets = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)] if n == 2 else [(i,) for i in (-1, 0, 1)]
    converged = np.zeros(len(p), dtype=bool)
    for _ in range(NEWTON_MAXIT):
        B = _chart_basis(p)
        chart = spl.chart_of(p)  # one spline chart for the whole stencil
        vals = {}
        for off in offsets:
            xi = hs * np.array(off, dtype=float)
            q = p + np.einsum("i,nij->nj", xi, B)
            q /= np.linalg.norm(q, axis=1, keepdims=True)
            vals[off] = objective(q, chart)
        if n == 1:
            g = ((vals[(1,)] - vals[(-1,)]) / (2 * hs))[:, None]
            H = ((vals[(1,)] - 2 * vals[(0,)] + vals[(-1,)]) / hs ** 2)[:, None, None]
        else:
            g = np.stack([vals[(1, 0)] - vals[(-1, 0)], vals[(0, 1)] - vals[(0, -1)]], axis=1) / (2 * hs)
            H = np.empty((len(p), 2, 2))
            H[:, 0, 0] = (vals[(1, 0)] - 2 * vals[(0, 0)] + vals[(-1, 0)]) / hs ** 2
            H[:, 1, 1] = (vals[(0, 1)] - 2 * vals[(0, 0)] + vals[(0, -1)]) / hs ** 2
            H[:, 0, 1] = H[:, 1, 0] = (vals[(1, 1)] - vals[(1, -1)] - vals[(-1, 1)] + vals[(-1, -1)]) / (4 * hs ** 2)
        if np.any(np.linalg.eigvalsh(H)[:, -1] >= 0):
            raise PolarError("support function is not a strict local maximum: the Gauss map folds")
        step = -np.linalg.solve(H, g[..., None])[..., 0]
        size = np.linalg.norm(step, axis=1)
        step *= np.minimum(1.0, 0.25 / np.maximum(size, 1e-300))[:, None]
        p = p + np.einsum("ni,nij->nj", step, B)
        p /= np.linalg.norm(p, axis=1, keepdims=True)
        converged = size < NEWTON_TOL * 1e3
        if converged.all():
            break
    if not converged.all():
        raise PolarError(f"support maximisation did not converge at {int((~converged).sum())} directions")
    return objective(p), p


def polar(body: RadialGraphBody, field: CurvatureField | None = None, grid: SphericalGrid | None = None,
          return_preimages: bool = False):
    """Dual body sampled on ``grid`` (default: the body's grid)."""
    grid = grid or body.grid
    if grid.n != body.n:
        raise GeometryError("target grid has a different dimension")
    field = field or compute_curvature(body)
    h, pre = support_solve(body, grid.directions, field)
    rho_star = _dual_radius_from_support(body.space, h)
    dual = RadialGraphBody(body.space.dual, grid, rho_star, {"kind": "polar", "source_space": body.space.name})
    dual.validate()
    return (dual, pre) if return_preimages else dual


def resampling_error(body: RadialGraphBody, dual: RadialGraphBody, field: CurvatureField | None = None) -> float:
    """max_j |rho*_spline(u_j) - rho*_j| over the Gauss-map images u_j of the source nodes."""
    emb = embed(body, field)
    exact = _radial_of_dual(body.space, emb.Xstar)
    interp = dual.grid.interpolant(dual.rho)(emb.dual_directions())
    return float(np.max(np.abs(interp - exact)))


def dual_curvature_check(body: RadialGraphBody, dual: RadialGraphBody, field: CurvatureField | None = None,
                         dual_field: CurvatureField | None = None) -> float:
    """max |kappa_i(preimage) kappa*_{n+1-i}(node) - 1| over the dual grid nodes."""
    field = field or compute_curvature(body)
    dual_field = dual_field or compute_curvature(dual)
    _, pre = support_solve(body, dual.grid.directions, field)
    kappa, _ = curvature_at(body.space, body.grid.interpolant(body.rho), pre)
    prod = kappa * dual_field.kappa[:, ::-1]
    return float(np.max(np.abs(prod - 1.0)))


def brute_force_polar_radius(body: RadialGraphBody, direction, upsample: int = 16) -> float:
    """Independent oracle for the dual radial value in one direction.

    Densely resamples the boundary (FFT for n=1, spline for n=2), takes the
    sup of the ambient pairing <x, y(s)> over the samples and root-finds in s.
    """
    space, grid = body.space, body.grid
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    if body.n == 1:
        m = upsample * grid.size
        rho = resample(body.rho, m)
        ang = np.arange(m) * 2 * math.pi / m
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        nt, nf = (upsample // 4 * v for v in grid.resolution)
        th = (np.arange(nt) + 0.5) * math.pi / nt
        ph = np.arange(nf) * 2 * math.pi / nf
        T, P = np.meshgrid(th, ph, indexing="ij")
        dirs = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
        rho = grid.interpolant(body.rho)(dirs)
    X = embed_point(space, rho, dirs)

    def y_of(s):
        if space is SPHERE:
            return np.concatenate([[-math.cos(s)], math.sin(s) * u])
        return embed_point(space.dual, np.array(s), u)

    def sup_pairing(s):
        vals = model_inner(space, X, y_of(s)[None, :])
        j = int(np.argmax(vals))
        if body.n == 1:
            a, b, c = vals[j - 1], vals[j], vals[(j + 1) % len(vals)]
            den = a - 2 * b + c
            if den < 0:
                return b - (c - a) ** 2 / (8 * den)
        return vals[j]

    lo, hi = 1e-12, (math.pi / 2 - 1e-12 if space is SPHERE else 1.0)
    f_lo = sup_pairing(lo)
    if space is not SPHERE:
        while np.sign(sup_pairing(hi)) == np.sign(f_lo) and hi < 40:
            hi *= 2
    if np.sign(sup_pairing(hi)) == np.sign(f_lo):
        raise GeometryError("no sign change: direction not in the dual graph domain")
    return float(brentq(sup_pairing, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
