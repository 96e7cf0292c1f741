"""Command line interface: ``qmass {gen,quermass,dual,verify,flow,probe}``.

Exit codes: 0 success, 1 internal error, 2 validation or hypothesis failure,
64 usage error (unknown flags, malformed arguments).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from .ambient import GeometryError, space_from_name
from .body import (BodyParseError, body_to_dict, load_body, make_ball, make_perturbed_ball, random_perturbations,
                   recenter, save_body)
from .curvature import classify, compute_curvature
from .duality import polar
from .flow import FlowConfig, run, speed_from_name, write_csv
from .grid import make_grid, parse_resolution
from .quermass import RangeError, quermassintegrals
from .verify import ProbeSpec, build_report, conjecture_probe, report_ok

EX_OK, EX_INTERNAL, EX_INVALID, EX_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EX_USAGE)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QMASS_THREADS", "1")))
    except ValueError:
        return 1


def _dump(obj, path=None, stream=None):
    text = json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        (stream or sys.stdout).write(text)


def _config(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func",):
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


def _vec(text):
    return [float(x) for x in text.split(",")]


def _perturbation(text):
    # degree:amplitude[:x,y,z]
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("expected degree:amplitude[:axis]")
    out = (int(parts[0]), float(parts[1]))
    return out + ((_vec(parts[2]),) if len(parts) == 3 else ())


def _grid(args):
    res = parse_resolution(args.res) if args.res else None
    return make_grid(args.n, res)


# subcommands ----------------------------------------------------------------------

def cmd_gen(args):
    grid = _grid(args)
    space = space_from_name(args.space)
    if args.ball is not None:
        body = make_ball(space, args.ball, args.offset, _vec(args.dir) if args.dir else None, grid)
    else:
        perts = list(args.perturb or [])
        if args.random:
            rng = np.random.default_rng(args.seed)
            perts += random_perturbations(rng, args.n, args.radius, args.random, rel_amplitude=args.rel_amplitude)
        body = make_perturbed_ball(space, args.radius, perts, grid)
        cls = classify(compute_curvature(body))
        if not cls.strictly_convex and not args.allow_nonconvex:
            raise GeometryError(f"generated body is not strictly convex (kappa_min = {cls.kappa_min:.3e})")
    body = body.with_rho(body.rho, config=_config(args))
    if args.output:
        save_body(body, args.output)
    else:
        _dump(body_to_dict(body))
    return EX_OK


def cmd_quermass(args):
    body = load_body(args.body)
    q = quermassintegrals(body, method=args.method)
    out = q.as_dict()
    out["config"] = _config(args)
    _dump(out, args.output)
    return EX_OK


def cmd_dual(args):
    body = load_body(args.body)
    if args.recenter:
        body = recenter(body)
    d = polar(body)
    d = d.with_rho(d.rho, config=_config(args))
    if args.output:
        save_body(d, args.output)
    else:
        _dump(body_to_dict(d))
    return EX_OK


def cmd_verify(args):
    def one(path):
        body = load_body(path)
        return build_report(body, band=args.band, timing=args.timing, config=_config(args))

    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        reports = list(ex.map(one, args.bodies))
    _dump(reports[0] if len(reports) == 1 else reports, args.output)
    ok = all(report_ok(r) for r in reports)
    if args.identity_tol is not None:
        ok &= all(i["residual"] is not None and i["residual"] <= args.identity_tol
                  for r in reports for i in r["identities"])
    return EX_OK if ok else EX_INVALID


def cmd_flow(args):
    body = load_body(args.body)
    speed = speed_from_name(args.speed)
    track = None if args.track_k == "all" else tuple(int(k) for k in args.track_k.split(","))
    cfg = FlowConfig(t_max=args.t_max, sample_dt=args.sample_dt, cfl=args.cfl,
                     stop_volume_fraction=args.stop_volume, track_k=track, track_polar=not args.no_polar)
    res = run(body, speed, cfg)
    meta = {"config": _config(args), "flow_config": asdict(cfg), "stop_reason": res.stop_reason,
            "steps": res.final.steps, "max_J_drift": res.max_J_drift}
    if args.output:
        write_csv(res, args.output, comment=json.dumps(meta, sort_keys=True))
    report = build_report(res.final.body, timing=args.timing, config=_config(args))
    report["flow"] = meta
    _dump(report, args.report)
    if args.max_drift is not None and not res.max_J_drift <= args.max_drift:
        return EX_INVALID
    return EX_OK


def cmd_probe(args):
    res = parse_resolution(args.res) if args.res else (32, 64)
    res = tuple(res) if isinstance(res, tuple) else (res,)
    spec = ProbeSpec(n=args.n, resolution=res, rel_amplitude=args.rel_amplitude)
    out = conjecture_probe(spec, args.trials, args.seed)
    out["config"] = _config(args)
    _dump(out, args.output)
    return EX_OK


# parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmass", description="Quermassintegrals, duality and curvature flows in space forms.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a body JSON")
    g.add_argument("--space", required=True, choices=["sphere", "hyperbolic", "desitter"])
    g.add_argument("--n", type=int, default=2)
    g.add_argument("--res", help="N (n=1) or NTHETAxNPHI (n=2)")
    g.add_argument("--ball", type=float, help="ball radius")
    g.add_argument("--offset", type=float, default=0.0, help="centre offset d")
    g.add_argument("--dir", help="offset direction, comma separated")
    g.add_argument("--radius", type=float, default=0.7, help="base radius of a perturbed ball")
    g.add_argument("--perturb", type=_perturbation, action="append", help="degree:amplitude[:axis]")
    g.add_argument("--random", type=int, default=0, help="number of random perturbation modes")
    g.add_argument("--rel-amplitude", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--allow-nonconvex", action="store_true")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    q = sub.add_parser("quermass", help="quermassintegrals of a body")
    q.add_argument("body")
    q.add_argument("--method", choices=["recursion", "closed_form"], default="recursion")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_quermass)

    d = sub.add_parser("dual", help="polar body")
    d.add_argument("body")
    d.add_argument("--recenter", action="store_true")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_dual)

    v = sub.add_parser("verify", help="identity and inequality report")
    v.add_argument("bodies", nargs="+")
    v.add_argument("--band", type=float, help="override the borderline band")
    v.add_argument("--identity-tol", type=float, help="fail (exit 2) if an identity residual exceeds this")
    v.add_argument("--timing", action="store_true", help="include runtimes (non-deterministic)")
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("flow", help="run a curvature flow")
    f.add_argument("body")
    f.add_argument("--speed", default="harmonic", help="harmonic or power[:alpha]")
    f.add_argument("--track-k", default="all", help="'all' or comma separated k values")
    f.add_argument("--t-max", type=float, default=1.0)
    f.add_argument("--sample-dt", type=float, default=0.01)
    f.add_argument("--cfl", type=float, default=0.2)
    f.add_argument("--stop-volume", type=float, help="stop when the volume falls below this fraction")
    f.add_argument("--no-polar", action="store_true", help="skip dual tracking")
    f.add_argument("--max-drift", type=float, help="exit 2 if the J drift exceeds this")
    f.add_argument("--timing", action="store_true")
    f.add_argument("-o", "--output", help="CSV time series")
    f.add_argument("--report", help="final report JSON (default: stdout)")
    f.set_defaults(func=cmd_flow)

    pr = sub.add_parser("probe", help="EXPERIMENTAL de Sitter conjecture probe")
    pr.add_argument("--trials", type=int, default=20)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--n", type=int, default=2)
    pr.add_argument("--res", default="32x64")
    pr.add_argument("--rel-amplitude", type=float, default=0.15)
    pr.add_argument("-o", "--output")
    pr.set_defaults(func=cmd_probe)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EX_USAGE
    try:
        return args.func(args)
    except (GeometryError, BodyParseError, RangeError, FileNotFoundError) as exc:
        sys.stderr.write(f"qmass: {exc}\n")
        return EX_INVALID
    except Exception as exc:  # pragma: no cover - reported as internal error
        sys.stderr.write(f"qmass: internal error: {type(exc).__name__}: {exc}\n")
        return EX_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
