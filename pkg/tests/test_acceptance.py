"""Acceptance criteria.  Each test prints one ``PASS``/``FAIL`` line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""
import math
import sys
import time

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from qmass.ambient import DESITTER, HYPERBOLIC, SPHERE, sphere_area
from qmass.body import make_ball, make_perturbed_ball, random_perturbations
from qmass.curvature import classify, compute_curvature
from qmass.duality import brute_force_polar_radius, dual_curvature_check, polar, resampling_error
from qmass.flow import FlowConfig, ball_extinction_time, extinction_estimate, run
from qmass.grid import make_grid
from qmass.quermass import (ball_quermass, constant_Cnk, duality_constant, duality_functional,
                            quermassintegrals, variation_rate)
from qmass.verify import ball_dual_radius, build_report, identity_products

COARSE, FINE = (64, 128), (128, 256)


RESULTS = {}


@pytest.fixture(autouse=True)
def _terminal(capsys, request):
    request.module._capsys = capsys
    yield


def report(num, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}"
    RESULTS[num] = line
    cap = globals().get("_capsys")
    if cap is not None:
        with cap.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


KAPPA_MARGIN = 0.1  # identity/duality bodies: kappa_min >= 0.1, so the dual has kappa* <= 10


def random_bodies(space, count, seed, r_range, rel_amplitude, grid, degrees=(2, 3, 4), accept=None):
    """Random strictly convex perturbed balls (rejection sampled); returns (r, perturbations, body)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        r = float(rng.uniform(*r_range))
        perts = random_perturbations(rng, grid.n, r, 3, degrees, rel_amplitude)
        try:
            b = make_perturbed_ball(space, r, perts, grid)
            cls = classify(compute_curvature(b))
        except Exception:
            continue
        if cls.strictly_convex and (accept is None or accept(cls)):
            out.append((r, perts, b))
    return out


def identity_residual(body):
    q = quermassintegrals(body)
    qd = quermassintegrals(polar(body))
    return float(np.max(np.abs(identity_products(body.space, body.n, q.zeta, qd.zeta) - 1.0)))


def identity_protocol(space, seed):
    t0 = time.perf_counter()
    coarse_grid, fine_grid = make_grid(2, COARSE), make_grid(2, FINE)
    r_range = (0.3, 1.0) if space is SPHERE else (0.4, 1.2)
    bodies = random_bodies(space, 20, seed, r_range, 0.05, coarse_grid,
                           accept=lambda c: c.kappa_min >= KAPPA_MARGIN)
    coarse, fine = [], []
    for r, perts, b in bodies:
        coarse.append(identity_residual(b))
        fine.append(identity_residual(make_perturbed_ball(space, r, perts, fine_grid)))
    coarse, fine = np.array(coarse), np.array(fine)
    ratio = coarse.max() / fine.max()
    return coarse, fine, ratio, time.perf_counter() - t0


# 1 ------------------------------------------------------------------------------

def test_criterion_1_sphere_identity():
    coarse, fine, ratio, dt = identity_protocol(SPHERE, 101)
    ok = coarse.max() <= 5e-3 and ratio >= 3 and dt <= 120
    report(1, ok, f"sphere n=2, 20 bodies: max residual {coarse.max():.2e} at {COARSE}, "
                  f"{fine.max():.2e} at {FINE}, ratio {ratio:.1f} (per-body min {np.min(coarse / fine):.1f}), "
                  f"{dt:.0f}s")


# 2 ------------------------------------------------------------------------------

def test_criterion_2_hyperbolic_de_sitter_identity():
    parts, ok = [], True
    for space, seed in ((HYPERBOLIC, 202), (DESITTER, 203)):
        coarse, fine, ratio, dt = identity_protocol(space, seed)
        ok &= coarse.max() <= 5e-3 and ratio >= 3 and dt <= 120
        parts.append(f"from {space.name}: {coarse.max():.2e} -> {fine.max():.2e}, ratio {ratio:.1f}, {dt:.0f}s")
    report(2, ok, "; ".join(parts))


# 3 ------------------------------------------------------------------------------

def test_criterion_3_duality_constants():
    worst = 0.0
    for space in (SPHERE, HYPERBOLIC, DESITTER):
        for n in (1, 2):
            for k in range(n + 1):
                C = duality_constant(space, n, k)
                vals = []
                for r in np.linspace(0.1, 1.45, 10):
                    W = ball_quermass(space, n, r)
                    Wd = ball_quermass(space.dual, n, ball_dual_radius(space, r))
                    vals.append(duality_functional(space, n, k, W, Wd))
                vals = np.array(vals)
                scale = max(abs(C), np.abs(vals).max(), 1.0)
                worst = max(worst, np.ptp(vals) / scale, np.abs(vals - C).max() / scale)
    pi2 = abs(constant_Cnk(SPHERE, 2, 0) - math.pi ** 2)
    report(3, worst <= 1e-8 and pi2 <= 1e-8,
           f"max relative spread/mismatch {worst:.1e} over 3 spaces, n in {{1,2}}; |C_2,0 - pi^2| = {pi2:.1e}")


# 4 ------------------------------------------------------------------------------

def test_criterion_4_conservation():
    t0 = time.perf_counter()
    body = make_perturbed_ball(HYPERBOLIC, 1.0, [(2, 0.03, [1.0, 1.0, 1.0])], make_grid(2, COARSE))
    res = run(body, config=FlowConfig(t_max=10.0, stop_volume_fraction=0.5, sample_dt=0.01))
    dt = time.perf_counter() - t0
    drift = res.max_J_drift
    ok = res.stop_reason == "volume" and drift <= 1e-3 and dt <= 300
    report(4, ok, f"hyperbolic HMCF to half volume (t={res.final.t:.4f}, {res.final.steps} steps, "
                  f"stop={res.stop_reason}): max relative J drift {drift:.2e}, {dt:.0f}s")


# 5 ------------------------------------------------------------------------------

def test_criterion_5_ball_extinction():
    grid = make_grid(2, (16, 32))
    errs, ok = [], True
    for space in (HYPERBOLIC, SPHERE):
        for r0 in (0.5, 1.0):
            res = run(make_ball(space, r0, grid=grid), config=FlowConfig(t_max=20.0, rho_stop=0.05, sample_dt=0.05,
                                                                          track_polar=False))
            exact = ball_extinction_time(space, r0)
            rel = abs(extinction_estimate(res) - exact) / exact
            ok &= rel <= 0.02
            errs.append(f"{space.name} r0={r0}: {rel:.2%}")
    report(5, ok, "extinction estimate error " + ", ".join(errs))


# 6 ------------------------------------------------------------------------------

def _rate_fd(body, eta, k, delta):
    Wp = quermassintegrals(body.with_rho(body.rho + delta * eta)).W[k]
    Wm = quermassintegrals(body.with_rho(body.rho - delta * eta)).W[k]
    return (Wp - Wm) / (2 * delta)


def test_criterion_6_variational_formula():
    grid, half = make_grid(2, COARSE), make_grid(2, (32, 64))
    rng = np.random.default_rng(606)
    worst_excess, worst_resid, orders, count = -np.inf, 0.0, [], 0
    for space in (SPHERE, HYPERBOLIC, DESITTER):
        for r, perts, body in random_bodies(space, 5, int(rng.integers(1 << 30)), (0.4, 1.0), 0.04, grid):
            c = rng.normal(size=3)
            speed = lambda g: 1.0 + 0.2 * g.directions @ c / np.linalg.norm(c)  # normal speed f
            coarse_body = make_perturbed_ball(space, r, perts, half)
            f, fc = compute_curvature(body), compute_curvature(coarse_body)
            eta = speed(grid) * f.v  # radial velocity that realises normal speed f
            for k in range(3):
                formula = variation_rate(f, k, speed(grid))
                grid_err = abs(formula - variation_rate(fc, k, speed(half)))
                # O(delta^2) from step halving; residual at a step where truncation is negligible
                fds = [_rate_fd(body, eta, k, d) for d in (4e-3, 2e-3, 1e-3, 1e-4)]
                resid = abs(fds[3] - formula)
                worst_excess = max(worst_excess, resid - (1e-6 + 10 * grid_err))
                orders.append(abs(fds[0] - fds[1]) / abs(fds[1] - fds[2]))
                worst_resid = max(worst_resid, resid)
                count += 1
    orders = np.array(orders)
    ok = worst_excess <= 0 and np.all((orders > 3.0) & (orders < 5.0))
    report(6, ok, f"{count} (body, k) cases at delta=1e-4: max residual {worst_resid:.1e}, "
                  f"max(residual - (1e-6 + 10 grid_err)) = {worst_excess:.1e}; "
                  f"FD step-halving ratios in [{orders.min():.2f}, {orders.max():.2f}] (O(delta^2) -> 4)")


# 7 ------------------------------------------------------------------------------

def test_criterion_7_pointwise_duality():
    coarse_g, fine_g = make_grid(2, COARSE), make_grid(2, FINE)
    ok, parts = True, []
    for space, seed in ((SPHERE, 71), (HYPERBOLIC, 72), (DESITTER, 73)):
        for r, perts, b in random_bodies(space, 2, seed, (0.5, 1.0), 0.05, coarse_g,
                                         accept=lambda c: c.kappa_min >= KAPPA_MARGIN):
            d = polar(b)
            kc = dual_curvature_check(b, d)
            bf = make_perturbed_ball(space, r, perts, fine_g)
            kf = dual_curvature_check(bf, polar(bf))
            inv = float(np.abs(polar(d).rho - b.rho).max())
            rs = resampling_error(b, d)
            good = kc <= 5e-3 and kc / kf >= 3 and inv <= 2 * rs
            ok &= good
            parts.append(f"{space.name[:3]} {kc:.1e}/{kf:.1e} inv {inv:.1e}<=2x{rs:.1e}")
    report(7, ok, "kappa*kappa* residual coarse/fine, involution: " + "; ".join(parts))


# 8 ------------------------------------------------------------------------------

def _curve_oracle(space, r, perts):
    """Area, length and total geodesic curvature of rho(phi) = r + sum a cos(l (phi - phi0)) by quadrature."""
    modes = [(l, a, math.atan2(ax[1], ax[0])) for l, a, ax in perts]
    rho = lambda p: r + sum(a * math.cos(l * (p - p0)) for l, a, p0 in modes)
    d1 = lambda p: -sum(a * l * math.sin(l * (p - p0)) for l, a, p0 in modes)
    d2 = lambda p: -sum(a * l * l * math.cos(l * (p - p0)) for l, a, p0 in modes)
    eta = np.diag([1.0, 1, 1]) if space is SPHERE else np.diag([-1.0, 1, 1])
    hd = (lambda s: (math.cos(s), -math.sin(s), -math.cos(s))) if space is SPHERE else \
        (lambda s: (math.cosh(s), math.sinh(s), math.cosh(s)))
    tl = (lambda s: (math.sin(s), math.cos(s), -math.sin(s))) if space is SPHERE else \
        (lambda s: (math.sinh(s), math.cosh(s), math.sinh(s)))

    def frame(p):
        s, s1, s2 = rho(p), d1(p), d2(p)
        h, h1, h2 = hd(s)
        t, t1, t2 = tl(s)
        u, up = np.array([math.cos(p), math.sin(p)]), np.array([-math.sin(p), math.cos(p)])
        X = np.concatenate([[h], t * u])
        X1 = np.concatenate([[h1 * s1], t1 * s1 * u + t * up])
        X2 = np.concatenate([[h2 * s1 ** 2 + h1 * s2], (t2 * s1 ** 2 + t1 * s2) * u + 2 * t1 * s1 * up - t * u])
        radial = np.concatenate([[h1], t1 * u])
        N = np.cross(eta @ X, eta @ X1)
        N /= math.sqrt(abs(N @ eta @ N))
        if N @ eta @ radial < 0:
            N = -N
        g = X1 @ eta @ X1
        return g, -(X2 @ eta @ N) / g

    length = quad(lambda p: math.sqrt(frame(p)[0]), 0, 2 * math.pi, epsabs=1e-13, limit=200)[0]
    turning = quad(lambda p: frame(p)[1] * math.sqrt(frame(p)[0]), 0, 2 * math.pi, epsabs=1e-13, limit=200)[0]
    warp = math.sin if space is SPHERE else math.sinh
    area = dblquad(lambda s, p: warp(s), 0, 2 * math.pi, 0, rho, epsabs=1e-13)[0]
    return area, length, turning


def test_criterion_8_curve_oracle():
    grid = make_grid(1, 1024)
    rng = np.random.default_rng(808)
    polar_err, quer_err = 0.0, 0.0
    spaces = [SPHERE] * 4 + [HYPERBOLIC] * 3 + [DESITTER] * 3
    for i, space in enumerate(spaces):
        (r, perts, b), = random_bodies(space, 1, int(rng.integers(1 << 30)), (0.4, 1.0), 0.06, grid, (2, 3, 4))
        d = polar(b)
        for j in rng.choice(grid.size, 24, replace=False):
            polar_err = max(polar_err, abs(brute_force_polar_radius(b, grid.directions[j]) - d.rho[j]))
        if space is DESITTER:
            continue
        area, length, turning = _curve_oracle(space, r, perts)
        c = space.recursion_sign
        direct = np.array([area, length / 2, (turning + c * area) / 2])
        W = quermassintegrals(b).W
        quer_err = max(quer_err, float(np.max(np.abs(W - direct) / np.maximum(1.0, np.abs(direct)))))
    report(8, polar_err <= 1e-4 and quer_err <= 1e-8,
           f"10 curves at 1024 samples: max |polar - brute force| = {polar_err:.1e}; "
           f"max rel. quermass vs direct arc-length/turning = {quer_err:.1e}")


# 9 ------------------------------------------------------------------------------

REGIMES = {
    # name: (space, radius range, relative amplitude, hypothesis filter, inequality name prefixes)
    "sphere strictly convex": (SPHERE, (0.3, 1.1), 0.06, None, ("sphere-bs", "sphere-qm")),
    "hyperbolic h-convex": (HYPERBOLIC, (0.3, 0.9), 0.05, lambda c: c.h_convex, ("hyp-bs-hconvex", "hyp-qm-hconvex")),
    "hyperbolic strictly convex": (HYPERBOLIC, (0.5, 2.0), 0.05, None,
                                   ("hyp-qm-n-1", "hyp-qm-top", "hyp-bs-strict", "hyp-qm-mean-convex")),
    "de Sitter 0<kappa<=1": (DESITTER, (0.3, 1.2), 0.05, lambda c: c.unit_bounded, ("ds-qm-unit",)),
    "de Sitter strictly convex": (DESITTER, (0.3, 1.5), 0.08, None,
                                  ("ds-qm-strict", "ds-isoperimetric", "ds-qm-mean-convex")),
}


def test_criterion_9_inequality_suite():
    grid = make_grid(2, (32, 64))
    ok, parts = True, []
    for i, (name, (space, rr, amp, accept, prefixes)) in enumerate(REGIMES.items()):
        bodies = random_bodies(space, 50, 900 + i, rr, amp, grid, accept=accept)
        applicable, fails, best = 0, 0, -np.inf
        for _, _, b in bodies:
            for item in build_report(b)["inequalities"]:
                if not item["name"].startswith(prefixes) or not item["applicable"]:
                    continue
                applicable += 1
                fails += item["status"] not in ("pass", "borderline")
                best = max(best, item["margin"])
        ball_margins = [abs(item["margin"])
                        for r in (0.35, 0.7, 1.0)
                        for item in build_report(make_ball(space, r, grid=grid))["inequalities"]
                        if item["name"].startswith(prefixes) and item["applicable"]]
        ball_worst = max(ball_margins) if ball_margins else math.nan
        good = applicable > 0 and fails == 0 and best > 1e-4 and ball_worst <= 1e-6
        ok &= good
        parts.append(f"{name}: {applicable} checks, {fails} fail, max margin {best:.1e}, ball |margin| {ball_worst:.0e}")
    report(9, ok, "; ".join(parts))


# 10 -----------------------------------------------------------------------------

def test_criterion_10_gauss_bonnet():
    grid = make_grid(2, COARSE)
    target = sphere_area(2) / 3
    errs = [abs(quermassintegrals(b).W[3] - target) / target
            for _, _, b in random_bodies(HYPERBOLIC, 10, 1010, (0.3, 1.5), 0.06, grid)]
    report(10, max(errs) <= 1e-4, f"10 hyperbolic bodies: max |W_3 - omega_2/3| / (omega_2/3) = {max(errs):.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
