"""Identity and inequality reports for bodies and their duals.

Inequalities are gated on their hypotheses (strict convexity, h-convexity,
``0 < kappa <= 1``, mean convexity).  Each entry carries a margin that is
non-negative when the inequality holds; margins in ``[-band, 0)`` are
reported as borderline, where ``band`` is 1e-6 on the closed-form (ball)
path and ``max(1e-6, 5 * grid_error)`` on the discrete path, with the grid
error read off from the identity residuals.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .ambient import DESITTER, HYPERBOLIC, SPHERE, GeometryError, space_from_name
from .body import RadialGraphBody, body_to_dict, make_perturbed_ball, random_perturbations
from .curvature import ConvexityClass, classify, compute_curvature
from .duality import PolarError, polar
from .grid import make_grid
from .quermass import (QuermassVector, RangeError, ball_f, ball_quermass, duality_constant, duality_functional,
                       invert_f, mean_radii, quermassintegrals)

SCHEMA = "v1"
CLOSED_FORM_BAND = 1e-6
GRID_ERROR_FACTOR = 5.0


@dataclass
class InequalityResult:
    name: str
    statement: str
    hypothesis: str
    applicable: bool
    lhs: float
    rhs: float
    margin: float
    status: str  # pass | borderline | fail | not_applicable | out_of_range

    @property
    def holds(self) -> bool:
        return self.status in ("pass", "borderline")


def _status(applicable: bool, margin: float, band: float) -> str:
    if not np.isfinite(margin):
        return "out_of_range"
    if not applicable:
        return "not_applicable"
    if margin >= 0:
        return "pass"
    return "borderline" if margin >= -band else "fail"


def _num(x):
    return None if x is None or not np.isfinite(x) else float(x)


# identities ---------------------------------------------------------------------

def identity_products(space, n: int, zeta, zeta_dual) -> np.ndarray:
    """The products that equal 1 for every k.

    sphere:      tan zeta_{n-k}(K) tan zeta_k(K*)
    hyperbolic:  coth zeta_k(K) tanh zeta_{n-k}(K*)
    de Sitter:   coth zeta_k(K*) tanh zeta_{n-k}(K)    (K* hyperbolic)
    """
    space = space_from_name(space)
    z, zd = np.asarray(zeta, dtype=float), np.asarray(zeta_dual, dtype=float)
    ks = np.arange(n + 1)
    if space is SPHERE:
        return np.tan(z[n - ks]) * np.tan(zd[ks])
    if space is HYPERBOLIC:
        return np.tanh(zd[n - ks]) / np.tanh(z[ks])
    return np.tanh(z[n - ks]) / np.tanh(zd[ks])


def identity_report(space, n: int, q: QuermassVector, qd: QuermassVector) -> list:
    prods = identity_products(space, n, q.zeta, qd.zeta)
    out = []
    for k in range(n + 1):
        J = duality_functional(space, n, k, q.W, qd.W)
        C = duality_constant(space, n, k)
        out.append({
            "k": k,
            "product": _num(prods[k]),
            "residual": _num(abs(prods[k] - 1.0)),
            "linear_value": J,
            "constant": C,
            "linear_residual": abs(J - C),
        })
    return out


def ball_dual_radius(space, r: float) -> float:
    space = space_from_name(space)
    return math.pi / 2 - r if space is SPHERE else r


def ball_quermass_vectors(space, n: int, r: float):
    """Closed-form quermass vectors of the ball B_r and of its dual."""
    space = space_from_name(space)
    out = []
    for sp, rr in ((space, r), (space.dual, ball_dual_radius(space, r))):
        W = np.array(ball_quermass(sp, n, rr), dtype=float)
        zeta, warns = mean_radii(sp, n, W)
        I = np.array([0.0] * (n + 1))
        out.append(QuermassVector(sp, n, W, zeta, "closed_form", float(W[0]), I, tuple(warns)))
    return out


def ball_identity_report(space, n: int, r: float) -> list:
    q, qd = ball_quermass_vectors(space, n, r)
    return identity_report(space, n, q, qd)


# inequalities -------------------------------------------------------------------

class _Catalog:
    def __init__(self, space, n, q, qd, cls: ConvexityClass, band):
        self.space, self.n, self.q, self.qd, self.cls, self.band = space, n, q, qd, cls, band
        self.items = []

    def product(self, name, statement, hypothesis, ok, a_fun, ia, b_fun, ib, sense):
        """Inequality on fa(zeta_ia(K)) * fb(zeta_ib(K*)) against 1."""
        za = self.q.zeta[ia]
        zb = self.qd.zeta[ib] if self.qd is not None else math.nan
        lhs = float(a_fun(za) * b_fun(zb))
        margin = lhs - 1.0 if sense == ">=" else 1.0 - lhs
        self.items.append(InequalityResult(name, statement, hypothesis, bool(ok), lhs, 1.0, margin,
                                           _status(ok, margin, self.band)))

    def quermass(self, name, hypothesis, ok, a, b, sense):
        """W_a(K) sense f_a(f_b^{-1}(W_b(K)))."""
        space, n, W = self.space, self.n, self.q.W
        statement = f"W_{a} {sense} f_{a}(f_{b}^-1(W_{b}))"
        lhs = float(W[a])
        try:
            rhs = float(ball_f(space, n, a, invert_f(space, n, b, W[b])))
        except RangeError:
            rhs = math.nan
        scale = max(1.0, abs(rhs)) if np.isfinite(rhs) else 1.0
        margin = (lhs - rhs) / scale if sense == ">=" else (rhs - lhs) / scale
        self.items.append(InequalityResult(name, statement, hypothesis, bool(ok), lhs, rhs, margin,
                                           _status(ok, margin, self.band)))


def inequality_report(body: RadialGraphBody, q: QuermassVector, qd: QuermassVector | None,
                      cls: ConvexityClass, band: float) -> list:
    space, n = body.space, body.n
    cat = _Catalog(space, n, q, qd, cls, band)
    strict = cls.strictly_convex
    tan, tanh = np.tan, np.tanh
    coth = lambda x: 1.0 / np.tanh(x)
    if space is SPHERE:
        hyp = "strictly convex"
        for k in range(1, n + 1):
            cat.product("sphere-bs-i-a", f"tan z_{n}(K) tan z_{k}(K*) >= 1", hyp, strict, tan, n, tan, k, ">=")
            cat.product("sphere-bs-i-b", f"tan z_{n - k}(K) tan z_0(K*) <= 1", hyp, strict, tan, n - k, tan, 0, "<=")
        for l in range(n + 1):
            for i in range(1, l // 2 + 1):
                cat.product("sphere-bs-ii-a", f"tan z_{n - l + 2 * i}(K) tan z_{l}(K*) >= 1", hyp, strict,
                            tan, n - l + 2 * i, tan, l, ">=")
            for j in range(1, (n - l) // 2 + 1):
                cat.product("sphere-bs-ii-b", f"tan z_{n - l - 2 * j}(K) tan z_{l}(K*) <= 1", hyp, strict,
                            tan, n - l - 2 * j, tan, l, "<=")
        for l in range(n):
            cat.quermass("sphere-qm-top", hyp, strict, n, l, ">=")
        for k in range(1, n):
            cat.quermass("sphere-qm-vol", hyp, strict, k, 0, ">=")
        for m in range(1, n):
            cat.quermass("sphere-qm-step2", hyp, strict, m + 1, m - 1, ">=")
    elif space is HYPERBOLIC:
        hc = cls.h_convex
        for k in range(n + 1):
            for l in range(n + 1):
                if k + l < n:
                    cat.product("hyp-bs-hconvex-lower", f"coth z_{k}(K) tanh z_{l}(K*) >= 1", "h-convex", hc,
                                coth, k, tanh, l, ">=")
                elif k + l > n:
                    cat.product("hyp-bs-hconvex-upper", f"coth z_{k}(K) tanh z_{l}(K*) <= 1", "h-convex", hc,
                                coth, k, tanh, l, "<=")
        for l in range(n - 1):
            cat.quermass("hyp-qm-n-1", "strictly convex", strict, n - 1, l, ">=")
            cat.product("hyp-bs-strict-1", f"coth z_{l}(K) tanh z_1(K*) >= 1", "strictly convex", strict,
                        coth, l, tanh, 1, ">=")
        for k in range(n):
            cat.product("hyp-bs-strict-0", f"coth z_{k}(K) tanh z_0(K*) >= 1", "strictly convex", strict,
                        coth, k, tanh, 0, ">=")
        for k in range(1, n + 1):
            for l in range(k):
                cat.quermass("hyp-qm-hconvex", "h-convex", hc, k, l, ">=")
        for l in range(n):
            cat.quermass("hyp-qm-top", "strictly convex", strict, n, l, ">=")
        for i in range(1, n):
            if 0 < 2 * i < n:
                cat.quermass("hyp-qm-n-1-parity", "strictly convex", strict, n - 1, n - 1 - 2 * i, ">=")
        if n >= 2:
            cat.quermass("hyp-qm-mean-convex", "mean convex", cls.m_convex[0], 2, 1, ">=")
        if n >= 3:
            cat.quermass("hyp-qm-2-convex", "2-convex", cls.m_convex[1], 3, 1, ">=")
    else:
        ub = strict and cls.unit_bounded
        for k in range(1, n + 1):
            for l in range(k):
                cat.quermass("ds-qm-unit", "0 < kappa <= 1", ub, k, l, "<=")
        for k in range(2, n + 1):
            cat.quermass("ds-qm-strict-1", "strictly convex", strict, k, 1, "<=")
        for lower in (n - 2, n - 3):
            if 0 <= lower < n - 1:
                cat.quermass("ds-qm-strict-n-1", "strictly convex", strict, n - 1, lower, "<=")
        cat.quermass("ds-isoperimetric", "spacelike", True, 1, 0, "<=")
        if n >= 2:
            cat.quermass("ds-qm-mean-convex", "mean convex", cls.m_convex[0], 2, 1, "<=")
    return cat.items


# full report --------------------------------------------------------------------

def build_report(body: RadialGraphBody, band: float | None = None, timing: bool = False,
                 config: dict | None = None) -> dict:
    t0 = time.perf_counter()
    space, n = body.space, body.n
    field = compute_curvature(body)
    cls = classify(field)
    closed = bool(np.ptp(body.rho) == 0.0)
    if closed:
        q, qd = ball_quermass_vectors(space, n, float(body.rho[0]))
        dual_error = None
    else:
        q = quermassintegrals(body, field)
        qd, dual_error = None, None
        try:
            qd = quermassintegrals(polar(body, field))
        except (PolarError, GeometryError) as exc:
            dual_error = str(exc)
    identities = identity_report(space, n, q, qd) if qd is not None else []
    res = [r["residual"] for r in identities if r["residual"] is not None]
    grid_error = 0.0 if closed else (max(res) if res else math.nan)
    if band is None:
        if closed:
            band = CLOSED_FORM_BAND
        elif np.isfinite(grid_error):
            band = max(CLOSED_FORM_BAND, GRID_ERROR_FACTOR * grid_error)
        else:
            band = CLOSED_FORM_BAND
    ineq = inequality_report(body, q, qd, cls, band)
    constants = [{"k": r["k"], "constant": r["constant"], "value": r["linear_value"],
                  "residual": r["linear_residual"]} for r in identities]
    meta = {
        "path": "closed_form" if closed else "discrete",
        "resolution": list(body.grid.resolution),
        "band": band,
        "grid_error": _num(grid_error),
        "classify_tol": 1e-8,
        "config": config or {},
    }
    if dual_error:
        meta["dual_error"] = dual_error
    if timing:
        meta["runtime_s"] = time.perf_counter() - t0
    return {
        "schema": SCHEMA,
        "body": {"space": space.name, "n": n, "resolution": list(body.grid.resolution),
                 "meta": body_to_dict(body)["meta"]},
        "class": cls.as_dict(),
        "quermass": q.as_dict(),
        "dual_quermass": qd.as_dict() if qd is not None else None,
        "identities": identities,
        "inequalities": [asdict(i) for i in ineq],
        "constants": constants,
        "meta": meta,
    }


def report_ok(report: dict) -> bool:
    """True when no applicable inequality fails."""
    return not any(i["status"] == "fail" for i in report["inequalities"])


# conjecture probe -----------------------------------------------------------------

@dataclass
class ProbeSpec:
    """Generator of random spacelike de Sitter bodies (perturbed slices)."""
    n: int = 2
    resolution: tuple = (32, 64)
    r_min: float = 0.3
    r_max: float = 1.2
    degrees: tuple = (2, 3, 4)
    count: int = 3
    rel_amplitude: float = 0.15


def _probe_body(spec: ProbeSpec, rng, resolution):
    r = float(rng.uniform(spec.r_min, spec.r_max))
    perts = random_perturbations(rng, spec.n, r, spec.count, spec.degrees, spec.rel_amplitude)
    grid = make_grid(spec.n, resolution if spec.n == 2 else resolution[0])
    return r, perts, make_perturbed_ball(DESITTER, r, perts, grid)


def conjecture_probe(spec: ProbeSpec | None, trials: int, seed: int = 0) -> dict:
    """EXPERIMENTAL numerical probe of W_k <= f_k(f_l^{-1}(W_l)) on (k-1)-convex de Sitter bodies.

    The grid error of each trial is estimated by comparing W at the given
    resolution with a half-resolution copy of the same body.  A violation
    beyond the band is recorded as a candidate; the probe does not decide
    whether it is discretisation error or a genuine counterexample.
    """
    summary = {"label": "EXPERIMENTAL", "trials": trials, "seed": seed, "holds": 0, "borderline": 0,
               "violations": 0, "not_applicable": 0, "errors": [], "min_margin": None, "max_margin": None,
               "offenders": [], "by_pair": {}}
    if spec is None or trials <= 0:
        summary["trials"] = 0
        return summary
    n = spec.n
    rng = np.random.default_rng(seed)
    margins = []
    for t in range(trials):
        state = rng.bit_generator.state
        try:
            r, perts, body = _probe_body(spec, rng, spec.resolution)
            coarse_res = tuple(max(v // 2, 16 if i else 8) for i, v in enumerate(spec.resolution))
            coarse = make_perturbed_ball(DESITTER, r, perts, make_grid(n, coarse_res if n == 2 else coarse_res[0]))
            field = compute_curvature(body)
            cls = classify(field)
            q = quermassintegrals(body, field)
            qc = quermassintegrals(coarse)
        except GeometryError as exc:
            summary["errors"].append({"trial": t, "error": str(exc)})
            continue
        grid_error = float(np.max(np.abs(q.W - qc.W) / np.maximum(1.0, np.abs(q.W))))
        band = max(CLOSED_FORM_BAND, GRID_ERROR_FACTOR * grid_error)
        for k in range(1, n + 1):
            ok = True if k == 1 else bool(cls.m_convex[k - 2])
            for l in range(k):
                cat = _Catalog(DESITTER, n, q, None, cls, band)
                cat.quermass("conjecture", f"{k - 1}-convex", ok, k, l, "<=")
                item = cat.items[0]
                key = f"k={k},l={l}"
                bucket = summary["by_pair"].setdefault(key, {"holds": 0, "borderline": 0, "violations": 0,
                                                             "not_applicable": 0})
                if item.status in ("not_applicable", "out_of_range"):
                    summary["not_applicable"] += 1
                    bucket["not_applicable"] += 1
                    continue
                margins.append(item.margin)
                if item.status == "pass":
                    summary["holds"] += 1
                    bucket["holds"] += 1
                elif item.status == "borderline":
                    summary["borderline"] += 1
                    bucket["borderline"] += 1
                else:
                    summary["violations"] += 1
                    bucket["violations"] += 1
                    summary["offenders"].append({
                        "trial": t, "k": k, "l": l, "margin": item.margin, "band": band,
                        "body": {"space": "desitter", "n": n, "r": r, "perturbations": perts,
                                 "resolution": list(spec.resolution)},
                        "unit_bounded": cls.unit_bounded, "rng_state": str(state["state"]["state"]),
                    })
    if margins:
        summary["min_margin"] = float(min(margins))
        summary["max_margin"] = float(max(margins))
    return summary
