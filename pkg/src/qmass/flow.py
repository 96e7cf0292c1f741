"""Curvature flows ``dX/dt = -sigma F nu`` on radial graphs.

The flow is reduced to the scalar equation ``d rho/dt = f v`` with normal
speed ``f = -sigma F``; tangential terms only reparametrise and are dropped.
Time stepping is explicit Euler with ``dt = cfl * h^2 / max|F|`` where ``h``
is the smallest physical node spacing along a meridian.  On S^2 the tendency
is low-pass filtered in longitude near the poles (row i keeps Fourier modes
``|m| <= N_theta sin(theta_i)``), so that the step is not dictated by the
tiny longitudinal spacing there.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ambient import HYPERBOLIC, SPHERE, GeometryError, sphere_area
from .body import RadialGraphBody
from .curvature import CurvatureField, compute_curvature
from .duality import PolarError, polar
from .quermass import (duality_constant, duality_functional, mean_radii, quermassintegrals,
                       volume)


class StepRejected(GeometryError):
    pass


class FlowStalled(GeometryError):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class SpeedFunction:
    """Curvature function F(kappa); ``kind`` is harmonic, power or custom."""
    kind: str = "harmonic"
    alpha: float = 0.5
    func: Callable | None = None

    def __call__(self, field: CurvatureField) -> np.ndarray:
        n = field.kappa.shape[1]
        if self.kind == "harmonic":
            return field.E[:, n] / field.E[:, n - 1]
        if self.kind == "power":
            return np.power(field.E[:, n], self.alpha)
        if self.kind == "custom":
            return np.asarray(self.func(field.kappa), dtype=float) * np.ones(len(field.kappa))
        raise ValueError(f"unknown speed {self.kind!r}")

    @property
    def label(self) -> str:
        return f"power({self.alpha})" if self.kind == "power" else self.kind


HARMONIC = SpeedFunction("harmonic")


def speed_from_name(name: str) -> SpeedFunction:
    name = name.lower()
    if name in ("harmonic", "hmcf"):
        return HARMONIC
    if name.startswith("power"):
        # power or power:0.25
        alpha = float(name.split(":", 1)[1]) if ":" in name else 0.5
        return SpeedFunction("power", alpha)
    raise ValueError(f"unknown speed {name!r}; expected harmonic or power[:alpha]")


@dataclass
class FlowConfig:
    t_max: float = 1.0
    cfl: float = 0.2
    dt_max: float = 0.05
    sample_dt: float = 0.01
    rho_stop: float = 0.05
    kappa_cap: float = 1e3
    stop_volume_fraction: float | None = None
    track_k: tuple | None = None  # None: all k
    track_polar: bool = True
    max_halvings: int = 8
    max_steps: int = 1_000_000
    pole_filter: bool = True


@dataclass
class FlowState:
    t: float
    body: RadialGraphBody
    field: CurvatureField
    speed: np.ndarray
    dt_last: float = 0.0
    steps: int = 0

    @property
    def min_kappa(self) -> float:
        return float(self.field.kappa.min())

    @property
    def max_kappa(self) -> float:
        return float(self.field.kappa.max())

    @property
    def min_rho(self) -> float:
        return float(self.body.rho.min())


@dataclass
class FlowResult:
    records: list
    final: FlowState
    stop_reason: str
    config: FlowConfig
    J0: np.ndarray | None = None
    J_scale: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records], dtype=float)

    @property
    def max_J_drift(self) -> float:
        if not self.records or "J_drift" not in self.records[0]:
            return math.nan
        return float(np.nanmax(self.column("J_drift")))


def initial_state(body: RadialGraphBody, speed: SpeedFunction = HARMONIC) -> FlowState:
    f = compute_curvature(body)
    return FlowState(0.0, body, f, speed(f))


def physical_spacing(body: RadialGraphBody) -> float:
    lam = body.space._warp(body.rho)
    return float(lam.min() * body.grid.dtheta)


def _pole_filter(grid, values):
    if grid.n == 1:
        return values
    nt, nf = grid.resolution
    spec = np.fft.rfft(values.reshape(nt, nf), axis=1)
    keep = np.floor(nt * np.sin(grid.theta)).astype(int)
    m = np.arange(spec.shape[1])
    spec[m[None, :] > keep[:, None]] = 0.0
    return np.fft.irfft(spec, n=nf, axis=1).ravel()


def tendency(state: FlowState, pole_filter: bool = True) -> np.ndarray:
    """d rho / dt = -sigma F v."""
    body = state.body
    r = -body.space.sigma * state.speed * state.field.v
    return _pole_filter(body.grid, r) if pole_filter else r


def step(state: FlowState, speed: SpeedFunction, dt: float, pole_filter: bool = True) -> FlowState:
    """One explicit Euler step; raises StepRejected if the result is not a valid convex body."""
    rho = state.body.rho + dt * tendency(state, pole_filter)
    if not np.all(np.isfinite(rho)):
        raise StepRejected("non-finite radial values")
    try:
        body = state.body.with_rho(rho).validate()
        f = compute_curvature(body)
    except GeometryError as exc:
        raise StepRejected(str(exc)) from None
    if f.kappa.min() <= 0:
        raise StepRejected(f"convexity lost (kappa_min = {f.kappa.min():.3e})")
    F = speed(f)
    if not np.all(np.isfinite(F)):
        raise StepRejected("speed not finite")
    return FlowState(state.t + dt, body, f, F, dt, state.steps + 1)


def stable_dt(state: FlowState, cfl: float, dt_max: float) -> float:
    fmax = float(np.max(np.abs(state.speed)))
    if fmax == 0:
        return dt_max
    return min(dt_max, cfl * physical_spacing(state.body) ** 2 / fmax)


def sample(state: FlowState, track_polar: bool, ks) -> dict:
    body, f = state.body, state.field
    n = body.n
    q = quermassintegrals(body, f)
    rec = {"t": state.t, "dt": state.dt_last}
    for k in range(n + 2):
        rec[f"W_{k}"] = float(q.W[k])
    for k in range(n + 1):
        rec[f"zeta_{k}"] = float(q.zeta[k])
    # rate integrals int F E_k dmu, used by the dual-flow consistency check
    for k in range(n + 1):
        rec[f"P_{k}"] = f.integral(state.speed * f.E[:, k])
    if track_polar:
        try:
            d = polar(body, f)
            qd = quermassintegrals(d)
            for k in range(n + 2):
                rec[f"Wstar_{k}"] = float(qd.W[k])
            for k in ks:
                rec[f"J_{k}"] = duality_functional(body.space, n, k, q.W, qd.W)
        except (PolarError, GeometryError):
            for k in range(n + 2):
                rec[f"Wstar_{k}"] = math.nan
            for k in ks:
                rec[f"J_{k}"] = math.nan
    rec["min_kappa"] = state.min_kappa
    rec["max_kappa"] = state.max_kappa
    rec["min_rho"] = state.min_rho
    rec["volume"] = q.volume
    return rec


def run(body: RadialGraphBody, speed: SpeedFunction = HARMONIC, config: FlowConfig | None = None,
        progress: Callable | None = None) -> FlowResult:
    cfg = config or FlowConfig()
    n = body.n
    ks = tuple(range(n + 1)) if cfg.track_k is None else tuple(cfg.track_k)
    state = initial_state(body, speed)
    if state.min_kappa <= 0:
        raise GeometryError("initial body is not strictly convex")
    records = []
    J0 = scale = None

    def log(st):
        nonlocal J0, scale
        rec = sample(st, cfg.track_polar, ks)
        if cfg.track_polar:
            J = np.array([rec[f"J_{k}"] for k in ks])
            if J0 is None:
                J0 = J
                # size of the two terms at t=0; C_{n,k} may vanish
                scale = np.array([(k + 1) * abs(rec[f"W_{k}"]) + (n + 1 - k) * abs(rec[f"Wstar_{n - k}"])
                                  for k in ks])
            rec["J_drift"] = float(np.max(np.abs(J - J0) / scale))
        records.append(rec)
        if progress:
            progress(rec)

    log(state)
    v0 = volume(body)
    next_sample = cfg.sample_dt
    reason = "t_max"
    while True:
        if state.t >= cfg.t_max - 1e-15:
            reason = "t_max"
            break
        if state.min_rho < cfg.rho_stop:
            reason = "rho_stop"
            break
        if state.max_kappa > cfg.kappa_cap:
            reason = "kappa_cap"
            break
        if cfg.stop_volume_fraction is not None and volume(state.body) <= cfg.stop_volume_fraction * v0:
            reason = "volume"
            break
        if state.steps >= cfg.max_steps:
            reason = "max_steps"
            break
        dt = min(stable_dt(state, cfg.cfl, cfg.dt_max), cfg.t_max - state.t)
        for _ in range(cfg.max_halvings + 1):
            try:
                new = step(state, speed, dt, cfg.pole_filter)
                break
            except StepRejected:
                dt *= 0.5
        else:
            raise FlowStalled(f"step rejected {cfg.max_halvings} times at t={state.t:.6g}", state)
        state = new
        if state.t >= next_sample - 1e-15:
            log(state)
            while next_sample <= state.t + 1e-15:
                next_sample += cfg.sample_dt
    if records[-1]["t"] != state.t:
        log(state)
    return FlowResult(records, state, reason, cfg, J0, scale)


# diagnostics ------------------------------------------------------------------

def ball_extinction_time(space, r: float) -> float:
    """Exact extinction time of a ball under harmonic mean curvature flow."""
    if space is HYPERBOLIC:
        return math.log(math.cosh(r))
    if space is SPHERE:
        return -math.log(math.cos(r))
    raise GeometryError("extinction time is only defined for contracting Riemannian flows")


def extinction_estimate(result: FlowResult) -> float:
    """Stopping time plus the exact ball ODE time from the current volume radius."""
    last = result.records[-1]
    return last["t"] + ball_extinction_time(result.final.body.space, last["zeta_0"])


def dual_flow_consistency(result: FlowResult) -> float:
    """Max |dW*_{n-k}/dt - predicted| over sample intervals and k, relative to max |predicted|.

    The predicted dual rate is ``-s ((k+1)/(n+1)) int f E_k dmu`` with normal
    speed ``f = -sigma F`` and pair sign ``s`` (+1 sphere, -1 otherwise).
    Finite differences between samples make this O(sample_dt^2).
    """
    recs = result.records
    body = result.final.body
    n, space = body.n, body.space
    coef = space.pair_sign * space.sigma
    worst, scale = 0.0, 0.0
    for a, b in zip(recs[:-1], recs[1:]):
        h = b["t"] - a["t"]
        if h <= 0:
            continue
        for k in range(n + 1):
            fd = (b[f"Wstar_{n - k}"] - a[f"Wstar_{n - k}"]) / h
            pred = coef * (k + 1) / (n + 1) * 0.5 * (a[f"P_{k}"] + b[f"P_{k}"])
            worst = max(worst, abs(fd - pred))
            scale = max(scale, abs(pred))
    return worst / scale if scale > 0 else worst


def wn1_ode_residual(result: FlowResult) -> float:
    """Max |dW_{n-1}/dt + 2/(n+1) omega_n cosh^n zeta_{n-1}| relative to the rate, for hyperbolic harmonic flows."""
    recs = result.records
    n = result.final.body.n
    worst, scale = 0.0, 0.0
    for a, b in zip(recs[:-1], recs[1:]):
        h = b["t"] - a["t"]
        if h <= 0:
            continue
        fd = (b[f"W_{n - 1}"] - a[f"W_{n - 1}"]) / h
        rate = 0.5 * sum(-2.0 / (n + 1) * sphere_area(n) * math.cosh(r[f"zeta_{n - 1}"]) ** n for r in (a, b))
        worst = max(worst, abs(fd - rate))
        scale = max(scale, abs(rate))
    return worst / scale if scale > 0 else worst


def write_csv(result: FlowResult, path, comment: str | None = None) -> None:
    """One row per sample; an optional ``# comment`` first line (gnuplot/pandas ``comment='#'``)."""
    keys = list(result.records[0].keys())
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write("# " + comment.replace("\n", " ") + "\n")
        w = csv.writer(fh)
        w.writerow(keys)
        for r in result.records:
            w.writerow([repr(float(r[k])) for k in keys])
