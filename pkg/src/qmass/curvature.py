"""Second fundamental form and principal curvatures of radial graphs.

For a graph ``r = rho(theta)`` in ``sig dr^2 + lam(r)^2 g_S`` write ``D rho``
and ``D^2 rho`` for the gradient and covariant Hessian on the round sphere,
expressed in an orthonormal frame.  Then

    g   = sig D rho (x) D rho + lam^2 I
    v   = sqrt(1 + sig |D rho|^2 / lam^2)
    h   = (lam lam' I + 2 sig (lam'/lam) D rho (x) D rho - sig D^2 rho) / v

with the outward normal in the Riemannian cases and the future-directed
normal in de Sitter.  Geodesic balls get ``kappa = lam'/lam`` (cot, coth,
tanh), which pins the orientation.  The area element is ``lam^n v`` times
the round one.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .ambient import HYPERBOLIC, GeometryError, SpaceForm
from .body import SPACELIKE_MARGIN, RadialGraphBody
from .grid import GridInterpolant

CLASSIFY_TOL = 1e-8


class ImmersionError(GeometryError):
    pass


class SpacelikeError(GeometryError):
    pass


@dataclass(frozen=True, eq=False)
class CurvatureField:
    body: RadialGraphBody
    g: np.ndarray  # (N, n, n) in the orthonormal round frame
    h: np.ndarray  # (N, n, n)
    kappa: np.ndarray  # (N, n), ascending
    E: np.ndarray  # (N, n+1), E[:, 0] == 1
    dmu: np.ndarray  # (N,), quadrature weight times area density
    grad: np.ndarray  # (N, n), D rho in the orthonormal frame
    v: np.ndarray  # (N,)

    @property
    def weingarten(self) -> np.ndarray:
        return np.linalg.solve(self.g, self.h)

    @property
    def area(self) -> float:
        return float(self.dmu.sum())

    def integral(self, values) -> float:
        return float(np.dot(self.dmu, values))

    def curvature_integral(self, k: int) -> float:
        """int E_k dmu."""
        return self.integral(self.E[:, k])


def normalized_symmetric(kappa, k=None):
    """Normalised elementary symmetric functions E_k = e_k(kappa) / C(n, k).

    ``kappa`` has shape (..., n).  Returns E_k for a given ``k`` or the whole
    vector (..., n+1) when ``k`` is None.
    """
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.shape[-1]
    if k is not None and not 0 <= k <= n:
        raise ValueError(f"order k={k} outside 0..{n}")
    e = np.zeros(kappa.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        x = kappa[..., i]
        # descending so each kappa_i enters once
        for j in range(i + 1, 0, -1):
            e[..., j] = e[..., j] + x * e[..., j - 1]
    e /= np.array([comb(n, j) for j in range(n + 1)], dtype=float)
    return e if k is None else e[..., k]


def _graph_kernel(space: SpaceForm, rho, a, H):
    """Metric, second fundamental form and v from rho, gradient a (N,n) and Hessian H (N,n,n)."""
    n = a.shape[-1]
    sig = space.sigma
    lam, lp = space._warp(rho), space._warp_prime(rho)
    aa = a[:, :, None] * a[:, None, :]
    eye = np.eye(n)
    v2 = 1.0 + sig * np.sum(a * a, axis=-1) / lam ** 2
    g = sig * aa + (lam ** 2)[:, None, None] * eye
    with np.errstate(invalid="ignore"):
        v = np.sqrt(v2)
    h = ((lam * lp)[:, None, None] * eye + 2 * sig * (lp / lam)[:, None, None] * aa - sig * H) / v[:, None, None]
    return g, h, v2, v


def _principal(g, h):
    L = np.linalg.cholesky(g)
    X = np.linalg.solve(L, h)
    A = np.linalg.solve(L, np.swapaxes(X, -1, -2))
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    return np.linalg.eigvalsh(A)


def _frame_derivatives(n, theta, d):
    """Gradient and covariant Hessian in the orthonormal frame from coordinate derivatives."""
    if n == 1:
        fp, fpp = d
        return fp[:, None], fpp[:, None, None]
    ft, fp, ftt, ftp, fpp = d
    s, c = np.sin(theta), np.cos(theta)
    a = np.stack([ft, fp / s], axis=-1)
    H = np.empty(ft.shape + (2, 2))
    H[:, 0, 0] = ftt
    H[:, 0, 1] = H[:, 1, 0] = (ftp - c / s * fp) / s
    H[:, 1, 1] = (fpp + s * c * ft) / s ** 2
    return a, H


def _check(space, g, v2, where):
    if space.sigma < 0:
        bad = np.flatnonzero(v2 < SPACELIKE_MARGIN)
        if bad.size:
            j = bad[np.argmin(v2[bad])]
            raise SpacelikeError(f"spacelike condition violated at {where} {j} (v^2 = {v2[j]:.3e})")
    # the metric is positive definite iff v^2 > 0 (Riemannian: always)
    bad = np.flatnonzero(~(v2 > 0) | ~np.isfinite(g).all(axis=(-1, -2)))
    if bad.size:
        raise ImmersionError(f"induced metric not positive definite at {where} {bad[0]}")


def compute_curvature(body: RadialGraphBody) -> CurvatureField:
    grid, space = body.grid, body.space
    rho = body.rho
    d = [x.ravel() for x in grid.derivatives(rho)]
    theta = np.repeat(grid.theta, grid.resolution[1]) if grid.n == 2 else None
    a, H = _frame_derivatives(grid.n, theta, d)
    g, h, v2, v = _graph_kernel(space, rho, a, H)
    _check(space, g, v2, "node")
    kappa = _principal(g, h)
    E = normalized_symmetric(kappa)
    dmu = grid.weights * space._warp(rho) ** grid.n * v
    return CurvatureField(body, g, h, kappa, E, dmu, a, v)


def curvature_at(space: SpaceForm, interp: GridInterpolant, u):
    """Principal curvatures (ascending) of the spline surface at unit directions u.

    Each point is evaluated in the chart of the interpolant that covers it;
    the principal curvatures do not depend on the chart.  Returns ``(kappa, rho)``.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    n = interp.grid.n
    chart = interp.chart_of(u)
    f = lambda a, b: interp(u, a, b, chart=chart)
    rho = f(0, 0)
    if n == 1:
        d = (f(0, 1), f(0, 2))
        th = None
    else:
        th, _ = interp.chart_angles(u, chart)
        d = (f(1, 0), f(0, 1), f(2, 0), f(1, 1), f(0, 2))
    a, H = _frame_derivatives(n, th, d)
    g, h, v2, _ = _graph_kernel(space, rho, a, H)
    _check(space, g, v2, "point")
    return _principal(g, h), rho


@dataclass(frozen=True)
class ConvexityClass:
    strictly_convex: bool
    h_convex: bool
    m_convex: tuple  # m_convex[m-1] is membership of Gamma_m^+
    unit_bounded: bool
    kappa_min: float
    kappa_max: float
    spacelike_margin: float | None = None

    def as_dict(self) -> dict:
        return {
            "strictly_convex": self.strictly_convex,
            "h_convex": self.h_convex,
            "m_convex": list(self.m_convex),
            "unit_bounded": self.unit_bounded,
            "kappa_min": self.kappa_min,
            "kappa_max": self.kappa_max,
            "spacelike_margin": self.spacelike_margin,
        }


def classify(field: CurvatureField, space: SpaceForm | None = None, tol: float = CLASSIFY_TOL) -> ConvexityClass:
    space = space or field.body.space
    kmin, kmax = float(field.kappa.min()), float(field.kappa.max())
    strict = kmin > tol
    n = field.kappa.shape[1]
    pos = [bool(np.all(field.E[:, i] > tol)) for i in range(1, n + 1)]
    m_convex = tuple(all(pos[:m]) for m in range(1, n + 1))
    margin = float((field.v ** 2).min()) if space.sigma < 0 else None
    return ConvexityClass(
        strictly_convex=strict,
        h_convex=bool(space is HYPERBOLIC and strict and kmin >= 1 - tol),
        m_convex=m_convex,
        unit_bounded=bool(strict and kmax <= 1 + tol),
        kappa_min=kmin,
        kappa_max=kmax,
        spacelike_margin=margin,
    )
