"""EXPERIMENTAL: probe the de Sitter quermassintegral inequalities beyond the unit-bounded case.

    python3 scripts/conjecture_probe.py --trials 50 -o probe.json

Random perturbed slices are generated with amplitudes large enough that
many violate kappa <= 1.  Counts, extremal margins and any offending body
specs are written out; violations beyond the grid-error band are
candidates only, never conclusions.
"""
import argparse
import json

from qmass.verify import ProbeSpec, conjecture_probe


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rel-amplitude", type=float, default=0.15)
    p.add_argument("--res", default="32x64")
    p.add_argument("-o", "--output")
    args = p.parse_args(argv)
    spec = ProbeSpec(resolution=tuple(int(v) for v in args.res.split("x")), rel_amplitude=args.rel_amplitude)
    out = conjecture_probe(spec, args.trials, args.seed)
    out["config"] = vars(args)
    text = json.dumps(out, indent=1, sort_keys=True)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    summary = {k: out[k] for k in ("label", "trials", "holds", "borderline", "violations", "not_applicable",
                                   "min_margin", "max_margin")}
    summary["errors"] = len(out["errors"])
    print(json.dumps(summary, indent=1))


if __name__ == "__main__":
    main()
