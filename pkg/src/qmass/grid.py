"""Equiangular grids on S^1 and S^2 with quadrature and finite differences.

On S^2 the nodes are colatitude cell midpoints ``theta_i = (i + 1/2) pi / N_theta``
and uniform longitudes ``phi_j = 2 pi j / N_phi``; there is no node on a pole.
Stencils that reach across a pole use the symmetric extension
``f(-theta, phi) = f(theta, phi + pi)``.  Latitude weights are Fejer's first
rule, which is exact for polynomials in ``cos theta`` up to degree
``N_theta - 1`` and sums to 2 exactly, so ``sum(weights) = 4 pi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import RectBivariateSpline, make_interp_spline

from .ambient import GeometryError

PAD = 2  # ghost rows for the 5-point stencils
SPLINE_PAD = 8


class UnsupportedDimension(GeometryError):
    pass


def fejer_weights(m: int) -> np.ndarray:
    """Fejer type-1 weights for ``int_0^pi f(theta) sin(theta) d theta`` at cell midpoints."""
    theta = (np.arange(m) + 0.5) * math.pi / m
    j = np.arange(1, m // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, j)) / (4.0 * j ** 2 - 1.0)
    return 2.0 / m * (1.0 - 2.0 * s.sum(axis=1))


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    n: int
    resolution: tuple
    theta: np.ndarray = field(repr=False)  # colatitudes (n=2) or empty
    phi: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)  # flattened, row-major (theta, phi)

    @property
    def shape(self) -> tuple:
        return self.resolution

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def dphi(self) -> float:
        return 2.0 * math.pi / self.phi.size

    @property
    def dtheta(self) -> float:
        return math.pi / self.theta.size if self.n == 2 else self.dphi

    @property
    def spacing(self) -> float:
        """Smallest angular step of the grid."""
        return min(self.dtheta, self.dphi)

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit node directions in R^{n+1}, shape (size, n+1)."""
        if self.n == 1:
            return np.stack([np.cos(self.phi), np.sin(self.phi)], axis=-1)
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)],
                        axis=-1).reshape(-1, 3)

    @cached_property
    def connectivity(self) -> np.ndarray:
        """Triangles (index triples) of the periodic lat-long mesh plus polar caps."""
        if self.n == 1:
            i = np.arange(self.size)
            return np.stack([i, (i + 1) % self.size], axis=-1)
        nt, nf = self.resolution
        idx = np.arange(self.size).reshape(nt, nf)
        a, b = idx[:-1], np.roll(idx[:-1], -1, axis=1)
        c, d = idx[1:], np.roll(idx[1:], -1, axis=1)
        tris = [np.stack([a, b, c], -1).reshape(-1, 3), np.stack([b, d, c], -1).reshape(-1, 3)]
        return np.concatenate(tris)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float).ravel()))

    def as_field(self, values) -> np.ndarray:
        return np.asarray(values, dtype=float).reshape(self.resolution)

    def direction_angles(self, u):
        """(theta, phi) for unit vectors u (n=2), or phi (n=1)."""
        u = np.asarray(u, dtype=float)
        if self.n == 1:
            return np.arctan2(u[..., 1], u[..., 0])
        theta = np.arccos(np.clip(u[..., 2], -1.0, 1.0))
        return theta, np.arctan2(u[..., 1], u[..., 0])

    # finite differences ----------------------------------------------------

    def pad(self, values, width: int = PAD) -> np.ndarray:
        """Extend a node field with ghost cells (periodic in phi, reflected across poles)."""
        f = self.as_field(values)
        if self.n == 1:
            return np.concatenate([f[-width:], f, f[:width]])
        nt, nf = self.resolution
        half = nf // 2
        north = np.roll(f[:width][::-1], half, axis=1)
        south = np.roll(f[-width:][::-1], half, axis=1)
        g = np.concatenate([north, f, south], axis=0)
        return np.concatenate([g[:, -width:], g, g[:, :width]], axis=1)

    def derivatives(self, values):
        """Fourth-order centred first and second derivatives.

        Returns ``(f_phi, f_phiphi)`` for n=1 and
        ``(f_t, f_p, f_tt, f_tp, f_pp)`` for n=2, each shaped like the grid.
        """
        p = self.pad(values)
        if self.n == 1:
            return _d1(p, self.dphi, 0)[PAD:-PAD], _d2(p, self.dphi, 0)[PAD:-PAD]
        inner = (slice(PAD, -PAD), slice(PAD, -PAD))
        ft = _d1(p, self.dtheta, 0)
        fp = _d1(p, self.dphi, 1)
        ftt = _d2(p, self.dtheta, 0)
        fpp = _d2(p, self.dphi, 1)
        # mixed derivative: theta-derivative of the (padded) phi-derivative
        ftp = _d1(fp, self.dtheta, 0)
        return ft[inner], fp[inner], ftt[inner], ftp[inner], fpp[inner]

    # smooth interpolation ----------------------------------------------------

    def interpolant(self, values) -> "GridInterpolant":
        return GridInterpolant(self, values)


def _shift(a, k, axis):
    return np.roll(a, -k, axis=axis)


def _d1(a, h, axis):
    return (8.0 * (_shift(a, 1, axis) - _shift(a, -1, axis))
            - (_shift(a, 2, axis) - _shift(a, -2, axis))) / (12.0 * h)


def _d2(a, h, axis):
    return (-(_shift(a, 2, axis) + _shift(a, -2, axis))
            + 16.0 * (_shift(a, 1, axis) + _shift(a, -1, axis)) - 30.0 * a) / (12.0 * h * h)


# the secondary chart has its poles on the x-axis: local d -> global ROT @ d
ROT = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
CHART_SWITCH = 0.8  # |u_z| above which the secondary chart is used


class GridInterpolant:
    """Quintic spline through node values, evaluable at arbitrary directions.

    The spline lives on the pole-extended, phi-periodic coordinate patch, so it
    is smooth across the seams.  A lat-long spline is not smooth *at* a pole
    (modes with m != 0 need not vanish there), so on S^2 a second spline on a
    rotated grid, whose poles lie on the x-axis, covers the polar caps
    ``|u_z| > 0.8``.  Derivatives are with respect to the angles of the chart.
    """

    def __init__(self, grid: SphericalGrid, values):
        self.grid = grid
        w = SPLINE_PAD
        padded = grid.pad(values, width=w)
        if grid.n == 1:
            x = (np.arange(-w, grid.size + w)) * grid.dphi
            self._spl = make_interp_spline(x, padded, k=5)
            return
        nt, nf = grid.resolution
        t = (np.arange(-w, nt + w) + 0.5) * grid.dtheta
        x = np.arange(-w, nf + w) * grid.dphi
        primary = RectBivariateSpline(t, x, padded, kx=5, ky=5, s=0)
        th, ph = grid.direction_angles(grid.directions @ ROT.T)
        rotated = primary.ev(th, np.mod(ph, 2 * math.pi))
        secondary = RectBivariateSpline(t, x, grid.pad(rotated, width=w), kx=5, ky=5, s=0)
        self._charts = (primary, secondary)

    def chart_of(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.grid.n == 1:
            return np.zeros(u.shape[:-1], dtype=int)
        return (np.abs(u[..., 2]) > CHART_SWITCH).astype(int)

    def chart_angles(self, u, chart):
        """Angles of u in the given chart(s): phi (n=1) or (theta, phi)."""
        u = np.asarray(u, dtype=float)
        if self.grid.n == 1:
            return np.mod(self.grid.direction_angles(u), 2 * math.pi)
        local = np.where(np.asarray(chart)[..., None] == 1, u @ ROT, u)
        th, ph = self.grid.direction_angles(local)
        return th, np.mod(ph, 2 * math.pi)

    def __call__(self, u, dtheta: int = 0, dphi: int = 0, chart=None):
        """Evaluate at unit directions ``u`` (last axis n+1)."""
        u = np.asarray(u, dtype=float)
        if self.grid.n == 1:
            return self._spl(self.chart_angles(u, None), nu=dphi)
        chart = self.chart_of(u) if chart is None else np.broadcast_to(chart, u.shape[:-1])
        th, ph = self.chart_angles(u, chart)
        out = np.empty(th.shape)
        for c, spl in enumerate(self._charts):
            m = chart == c
            if np.any(m):
                out[m] = spl.ev(th[m], ph[m], dx=dtheta, dy=dphi)
        return out

    def at_angles(self, theta, phi=None, dtheta: int = 0, dphi: int = 0):
        """Primary-chart evaluation at coordinate angles."""
        if self.grid.n == 1:
            return self._spl(np.mod(theta, 2 * math.pi), nu=dphi)
        return self._charts[0].ev(theta, np.mod(phi, 2 * math.pi), dx=dtheta, dy=dphi)


def make_grid(n: int, resolution=None) -> SphericalGrid:
    """Equiangular grid on S^n for n in {1, 2}.

    ``resolution`` is ``N`` for the circle or ``(N_theta, N_phi)`` for S^2 with
    even ``N_phi``.  The circle needs 16 nodes; S^2 needs ``N_theta >= 8`` and
    ``N_phi >= 16``.
    """
    if n not in (1, 2):
        raise UnsupportedDimension(f"unsupported base dimension n={n}; only 1 and 2 are implemented")
    if n == 1:
        if resolution is None:
            resolution = 256
        if not np.isscalar(resolution):
            (resolution,) = tuple(resolution)
        m = int(resolution)
        if m < 16:
            raise GeometryError("circle grids need at least 16 nodes")
        phi = np.arange(m) * 2.0 * math.pi / m
        return SphericalGrid(1, (m,), np.empty(0), phi, np.full(m, 2.0 * math.pi / m))
    if resolution is None:
        resolution = (64, 128)
    nt, nf = (int(v) for v in resolution)
    if nt < 8 or nf < 16:
        raise GeometryError("sphere grids need N_theta >= 8 and N_phi >= 16")
    if nf % 2:
        raise GeometryError("N_phi must be even for the pole reflection")
    theta = (np.arange(nt) + 0.5) * math.pi / nt
    phi = np.arange(nf) * 2.0 * math.pi / nf
    w = np.outer(fejer_weights(nt), np.full(nf, 2.0 * math.pi / nf)).ravel()
    return SphericalGrid(2, (nt, nf), theta, phi, w)


def parse_resolution(text: str):
    """'64x128' -> (64, 128); '256' -> 256."""
    parts = [int(p) for p in str(text).lower().split("x")]
    return parts[0] if len(parts) == 1 else tuple(parts)
