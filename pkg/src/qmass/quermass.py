"""Quermassintegrals, ball functions f_k, mean radii and the duality constants.

Notation: ``I_k = int E_k dmu`` are the curvature integrals of the boundary
and ``c = sigma * epsilon`` is the recursion sign (+1 on the sphere, -1 in
hyperbolic and de Sitter space).  Then

    W_0 = Vol,   W_1 = I_0 / (n+1),
    W_{k+1} = I_k / (n+1) + c k / (n+2-k) W_{k-1}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ambient import SPHERE, SpaceForm, space_from_name, sphere_area
from .body import RadialGraphBody
from .curvature import CurvatureField, compute_curvature

INVERT_RTOL = 1e-10


class RangeError(ValueError):
    """A value lies outside the range of a ball function."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


def double_factorial(m: int) -> int:
    """m!! with the convention (-1)!! = 0!! = 1."""
    if m < -1:
        raise ValueError("double factorial defined for m >= -1")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


@dataclass(frozen=True)
class QuermassVector:
    space: SpaceForm
    n: int
    W: np.ndarray  # W_0 .. W_{n+1}
    zeta: np.ndarray  # zeta_0 .. zeta_n, nan where out of range
    method: str
    volume: float
    curvature_integrals: np.ndarray  # I_0 .. I_n
    warnings: tuple = field(default=())

    @property
    def zeta_in_range(self) -> np.ndarray:
        return np.isfinite(self.zeta)

    def as_dict(self) -> dict:
        return {
            "space": self.space.name,
            "n": self.n,
            "method": self.method,
            "W": [float(x) for x in self.W],
            "zeta": [None if not np.isfinite(z) else float(z) for z in self.zeta],
            "volume": self.volume,
            "curvature_integrals": [float(x) for x in self.curvature_integrals],
            "warnings": list(self.warnings),
        }


# W from (Vol, I) ----------------------------------------------------------------

def _recursion(c: int, n: int, vol, I):
    W = [vol, I[0] / (n + 1)]
    for k in range(1, n + 1):
        W.append(I[k] / (n + 1) + c * k / (n + 2 - k) * W[k - 1])
    return W


def _closed_form(c: int, n: int, vol, I):
    """Unrolled recursion with double-factorial coefficients.

    W_m = 1/(n+1) sum_i c^i a_{m,i} I_{m-1-2i}  (+ c^{m/2} a_{m,m/2} Vol for even m),
    a_{m,i} = (m-1)!! (n+1-m)!! / ((m-1-2i)!! (n+1-m+2i)!!).
    """
    df = double_factorial
    W = [vol]
    for m in range(1, n + 2):
        top = df(m - 1) * df(n + 1 - m)
        acc = 0.0
        for i in range((m - 1) // 2 + 1):
            acc = acc + c ** i * top / (df(m - 1 - 2 * i) * df(n + 1 - m + 2 * i)) * I[m - 1 - 2 * i] / (n + 1)
        if m % 2 == 0:
            i = m // 2
            acc = acc + c ** i * top / (df(-1) * df(n + 1)) * vol
        W.append(acc)
    return W


def volume(body: RadialGraphBody) -> float:
    """Enclosed volume (de Sitter: of {0 <= r <= rho}) via the exact radial primitive."""
    return body.grid.integrate(body.space.volume_primitive(body.rho, body.n))


def curvature_integrals(field: CurvatureField) -> np.ndarray:
    return field.dmu @ field.E


def quermassintegrals(body: RadialGraphBody, field: CurvatureField | None = None,
                      method: str = "recursion") -> QuermassVector:
    field = field or compute_curvature(body)
    space, n = body.space, body.n
    vol = volume(body)
    I = curvature_integrals(field)
    if method == "recursion":
        W = _recursion(space.recursion_sign, n, vol, I)
    elif method == "closed_form":
        W = _closed_form(space.recursion_sign, n, vol, I)
    else:
        raise ValueError(f"unknown method {method!r}")
    W = np.asarray(W, dtype=float)
    zeta, warns = mean_radii(space, n, W)
    return QuermassVector(space, n, W, zeta, method, float(vol), np.asarray(I), tuple(warns))


def mean_radii(space: SpaceForm, n: int, W):
    zeta = np.full(n + 1, np.nan)
    warns = []
    for k in range(n + 1):
        try:
            zeta[k] = invert_f(space, n, k, W[k])
        except RangeError as exc:
            warns.append(f"zeta_{k}: {exc}")
    return zeta, warns


# ball functions -----------------------------------------------------------------

def ball_curvature_integral(space, n: int, m: int, r):
    """int E_m dmu over the boundary of the ball (slice region) of radius r."""
    space = space_from_name(space)
    r = np.asarray(r, dtype=float)
    return sphere_area(n) * space._warp(r) ** (n - m) * space._warp_prime(r) ** m


def ball_quermass(space, n: int, r) -> list:
    """[W_0, .., W_{n+1}] of the ball B_r (or {0 <= r' <= r} in de Sitter)."""
    space = space_from_name(space)
    r = np.asarray(r, dtype=float)
    vol = sphere_area(n) * space.volume_primitive(r, n)
    I = [ball_curvature_integral(space, n, m, r) for m in range(n + 1)]
    return _recursion(space.recursion_sign, n, vol, I)


def ball_f(space, n: int, k: int, r):
    """f_k(r) = W_k of the ball of radius r."""
    space = space_from_name(space)
    if not 0 <= k <= n + 1:
        raise ValueError(f"k={k} outside 0..{n + 1}")
    space.check_radius(r)
    return ball_quermass(space, n, r)[k]


def ball_f_prime(space, n: int, k: int, r):
    """f_k'(r) = (n+1-k)/(n+1) * omega_n lam^{n-k} lam'^k."""
    space = space_from_name(space)
    return (n + 1 - k) / (n + 1) * ball_curvature_integral(space, n, k, r)


def f_range(space, n: int, k: int):
    """Closed interval of attainable values of f_k (upper end may be inf)."""
    space = space_from_name(space)
    lo = float(ball_f(space, n, k, 0.0))
    if space is SPHERE:
        return lo, float(ball_f(space, n, k, math.pi / 2))
    return lo, math.inf


def invert_f(space, n: int, k: int, w: float, rtol: float = INVERT_RTOL) -> float:
    """zeta with f_k(zeta) = w, by bisection followed by Newton polishing."""
    space = space_from_name(space)
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    w = float(w)
    lo_v, hi_v = f_range(space, n, k)
    tol = rtol * max(1.0, abs(w))
    if not np.isfinite(w) or w < lo_v - tol or w > hi_v + tol:
        raise RangeError(f"value {w:.12g} outside the range [{lo_v:.12g}, {hi_v:.12g}] of f_{k}", (lo_v, hi_v))
    if abs(w - lo_v) <= tol:
        return 0.0
    f = lambda r: float(ball_f(space, n, k, r))
    a = 0.0
    if space is SPHERE:
        b = math.pi / 2
        if abs(w - hi_v) <= tol:
            return b
    else:
        b = 1.0
        while f(b) < w:
            a, b = b, 2 * b
    for _ in range(200):
        m = 0.5 * (a + b)
        if f(m) < w:
            a = m
        else:
            b = m
        if b - a < 1e-4 * max(1.0, b):
            break
    r = 0.5 * (a + b)
    for _ in range(50):
        res = f(r) - w
        if abs(res) <= 0.01 * tol:
            break
        d = float(ball_f_prime(space, n, k, r))
        step = res / d if d > 0 else 0.0
        r_new = r - step
        if not a <= r_new <= b:  # keep inside the bracket
            r_new = 0.5 * (a + b)
        if f(r_new) < w:
            a = max(a, r_new)
        else:
            b = min(b, r_new)
        if r_new == r:
            break
        r = r_new
    if abs(f(r) - w) > tol:
        raise RangeError(f"inversion of f_{k} did not converge at w={w:.12g}")
    return r


# duality constants -------------------------------------------------------------

def constant_Cnk(space, n: int, k: int) -> float:
    """Value of the conserved duality combination for the pair containing ``space``.

    Sphere pair: (pi/2 if n, k both even else 1) * omega_n/(n+1) * (n-k+1)!!(k+1)!!/n!!.
    Hyperbolic / de Sitter pair: (-1)^((n-k-1)/2) omega_n/(n+1) (n-k+1)!!(k+1)!!/n!!
    when n-k is odd, else 0.
    """
    space = space_from_name(space)
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    df = double_factorial
    base = sphere_area(n) / (n + 1) * df(n - k + 1) * df(k + 1) / df(n)
    if space is SPHERE:
        return (math.pi / 2 if n % 2 == 0 and k % 2 == 0 else 1.0) * base
    if (n - k) % 2 == 0:
        return 0.0
    return (-1) ** ((n - k - 1) // 2) * base


def duality_functional(space, n: int, k: int, W, W_dual) -> float:
    """Conserved combination of W_k(K) and W_{n-k}(K*).

    Sphere:               (k+1) W_k + (n+1-k) W*_{n-k}  = C_{n,k}
    hyperbolic primal:   -(k+1) W_k + (n+1-k) W*_{n-k}  = C_{n,k}
    de Sitter primal:     (k+1) W_k - (n+1-k) W*_{n-k}  = C_{n,n-k}
    """
    space = space_from_name(space)
    a, b = (k + 1) * W[k], (n + 1 - k) * W_dual[n - k]
    if space is SPHERE:
        return float(a + b)
    if space.riemannian:
        return float(b - a)
    return float(a - b)


def duality_constant(space, n: int, k: int) -> float:
    """Target value of :func:`duality_functional`."""
    space = space_from_name(space)
    if space.riemannian:
        return constant_Cnk(space, n, k)
    return constant_Cnk(space, n, n - k)


def variation_rate(field: CurvatureField, k: int, speed) -> float:
    """((n+1-k)/(n+1)) int f E_k dmu for normal speed f (d/dt X = f nu + tangential)."""
    n = field.kappa.shape[1]
    return (n + 1 - k) / (n + 1) * field.integral(np.asarray(speed) * field.E[:, k])
