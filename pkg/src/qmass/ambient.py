"""Ambient space forms written as warped products over the unit sphere.

Each space carries the metric ``sig * dr^2 + warp(r)^2 g_{S^n}``:

=============  ====  =======  =========  ============
kind           sig   epsilon  warp       interval
=============  ====  =======  =========  ============
sphere         +1    +1       sin r      [0, pi)
hyperbolic     +1    -1       sinh r     [0, inf)
desitter       -1    +1       cosh r     [0, inf)
=============  ====  =======  =========  ============

Only the upper branch of de Sitter space with a positive radial (time)
coordinate is modelled.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Raised when a point, radius or body leaves the valid region."""


class Kind(str, enum.Enum):
    SPHERE = "sphere"
    HYPERBOLIC = "hyperbolic"
    DESITTER = "desitter"


@dataclass(frozen=True)
class SpaceForm:
    kind: Kind
    sigma: int
    epsilon: int
    r_max: float  # open upper end of the radial interval

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def riemannian(self) -> bool:
        return self.sigma == 1

    @property
    def recursion_sign(self) -> int:
        """Coefficient sign of W_{k-1} in the quermassintegral recursion."""
        return self.sigma * self.epsilon

    @property
    def dual(self) -> "SpaceForm":
        return {Kind.SPHERE: SPHERE, Kind.HYPERBOLIC: DESITTER, Kind.DESITTER: HYPERBOLIC}[self.kind]

    @property
    def pair_sign(self) -> int:
        # +1 for the sphere pair, -1 for the hyperbolic/de Sitter pair
        return 1 if self.kind is Kind.SPHERE else -1

    def check_radius(self, r, *, strict_lower: bool = False) -> None:
        r = np.asarray(r, dtype=float)
        bad = ~np.isfinite(r) | (r < 0) | (r >= self.r_max)
        if strict_lower:
            bad |= r <= 0
        if np.any(bad):
            raise GeometryError(
                f"radial value outside the valid interval of {self.name}: "
                f"{np.asarray(r)[bad].ravel()[:3]}")

    def warp(self, r):
        """Warp factor lambda(r)."""
        self.check_radius(r)
        return self._warp(np.asarray(r, dtype=float))

    def warp_prime(self, r):
        """Derivative lambda'(r)."""
        self.check_radius(r)
        return self._warp_prime(np.asarray(r, dtype=float))

    # unchecked versions, used inside vectorised kernels
    def _warp(self, r):
        if self.kind is Kind.SPHERE:
            return np.sin(r)
        if self.kind is Kind.HYPERBOLIC:
            return np.sinh(r)
        return np.cosh(r)

    def _warp_prime(self, r):
        if self.kind is Kind.SPHERE:
            return np.cos(r)
        if self.kind is Kind.HYPERBOLIC:
            return np.cosh(r)
        return np.sinh(r)

    def ball_principal_curvature(self, r):
        """Principal curvature of the coordinate sphere/slice ``{r = const}``.

        cot r on the sphere, coth r in hyperbolic space (outward normal) and
        tanh r for a de Sitter slice (future-directed normal).
        """
        r = np.asarray(r, dtype=float)
        self.check_radius(r)
        if self.riemannian and np.any(r == 0):
            raise GeometryError("geodesic sphere of radius 0 has singular curvature")
        return self._warp_prime(r) / self._warp(r)

    def volume_primitive(self, r, n: int):
        """``int_0^r warp(s)^n ds``: volume of the ball (slice region) per unit solid angle."""
        r = np.asarray(r, dtype=float)
        return _warp_power_integral(self.kind, r, n)

    def __str__(self) -> str:
        return self.name


SPHERE = SpaceForm(Kind.SPHERE, 1, 1, math.pi)
HYPERBOLIC = SpaceForm(Kind.HYPERBOLIC, 1, -1, math.inf)
DESITTER = SpaceForm(Kind.DESITTER, -1, 1, math.inf)

_BY_NAME = {s.name: s for s in (SPHERE, HYPERBOLIC, DESITTER)}


def space_from_name(name) -> SpaceForm:
    if isinstance(name, SpaceForm):
        return name
    try:
        return _BY_NAME[str(name).lower()]
    except KeyError:
        raise GeometryError(f"unknown space {name!r}; expected one of {sorted(_BY_NAME)}") from None


def _warp_power_integral(kind: Kind, r, n: int):
    # reduction formulas:
    #   int sin^n  = -sin^{n-1} cos / n + (n-1)/n int sin^{n-2}
    #   int sinh^n =  sinh^{n-1} cosh / n - (n-1)/n int sinh^{n-2}
    #   int cosh^n =  cosh^{n-1} sinh / n + (n-1)/n int cosh^{n-2}
    if n == 0:
        return r.copy() if isinstance(r, np.ndarray) else r
    if kind is Kind.SPHERE:
        s, c = np.sin(r), np.cos(r)
        if n == 1:
            return 1.0 - c
        return -s ** (n - 1) * c / n + (n - 1) / n * _warp_power_integral(kind, r, n - 2)
    if kind is Kind.HYPERBOLIC:
        s, c = np.sinh(r), np.cosh(r)
        if n == 1:
            return c - 1.0
        return s ** (n - 1) * c / n - (n - 1) / n * _warp_power_integral(kind, r, n - 2)
    s, c = np.sinh(r), np.cosh(r)
    if n == 1:
        return s
    return c ** (n - 1) * s / n + (n - 1) / n * _warp_power_integral(kind, r, n - 2)


def sphere_area(n: int) -> float:
    """omega_n, the area of the unit n-sphere in R^{n+1}."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def embed(space: SpaceForm, r, u) -> np.ndarray:
    """Model coordinates of the point at radial value r in direction u.

    Sphere: (cos r, sin r u) in R^{n+2}; hyperbolic: (cosh r, sinh r u) on the
    upper hyperboloid; de Sitter: (sinh r, cosh r u) on the unit one-sheeted
    hyperboloid.  The last two use the form ``-x0 y0 + sum xi yi``.
    """
    r = np.asarray(r, dtype=float)[..., None]
    u = np.asarray(u, dtype=float)
    if space.kind is Kind.SPHERE:
        head, tail = np.cos(r), np.sin(r)
    elif space.kind is Kind.HYPERBOLIC:
        head, tail = np.cosh(r), np.sinh(r)
    else:
        head, tail = np.sinh(r), np.cosh(r)
    return np.concatenate([head, tail * u], axis=-1)


def unembed(space: SpaceForm, x):
    """Inverse of :func:`embed`: returns (r, u)."""
    x = np.asarray(x, dtype=float)
    x0, xs = x[..., 0], x[..., 1:]
    nrm = np.linalg.norm(xs, axis=-1)
    u = xs / np.maximum(nrm, 1e-300)[..., None]
    if space.kind is Kind.SPHERE:
        r = np.arctan2(nrm, x0)
    elif space.kind is Kind.HYPERBOLIC:
        r = np.arcsinh(nrm)
    else:
        r = np.arcsinh(x0)
    return r, u


def model_inner(space: SpaceForm, x, y):
    """Euclidean (sphere) or Minkowski (hyperbolic, de Sitter) inner product."""
    p = np.sum(np.asarray(x) * np.asarray(y), axis=-1)
    if space.kind is Kind.SPHERE:
        return p
    return p - 2.0 * np.asarray(x)[..., 0] * np.asarray(y)[..., 0]
