"""Command-line entry point: ``kronmle {sample,fit,eval,bench,scale,diagnose}``.

Modes are 0-based everywhere. Exit codes: 0 success, 2 invalid input,
3 solver did not converge (``fit`` only).
"""
import argparse
import json
import sys

from . import data as tdata
from .bench.config import load_config, spec_from_dict
from .bench.experiment import run_experiment, scaling_study
from .bench.generators import KINDS, FactorSpec, GeneratorSpec, generate
from .cpmap import diagnostics
from .errors import InvalidInput, KronMLEError
from .manifold import KronPoint
from .metrics import factor_errors
from .solvers import SolverConfig, fit

EXIT_INVALID = 2
EXIT_SOLVER = 3


def _int_list(s):
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _float_list(s):
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _add_generator_args(p, required_dims=True):
    p.add_argument("--dims", type=_int_list, required=required_dims, help="e.g. 4,4")
    p.add_argument("--generator", choices=KINDS, default="identity")
    p.add_argument("--strength", type=float, default=10.0, help="spike strength")
    p.add_argument("--edge-factor", type=float, default=0.4)
    p.add_argument("--rank", type=int, default=None, help="wishart rank")


def _generator(args):
    f = FactorSpec(args.generator, strength=args.strength, edge_factor=args.edge_factor, rank=args.rank)
    return GeneratorSpec(tuple(args.dims), (f,))


def _dump(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_sample(args):
    seed = tdata.Seed(args.seed, args.stream)
    truth = generate(_generator(args), seed.child(0))
    x = tdata.sample_model(truth, args.n, seed.child(1, args.n))
    tdata.save(x, args.out)
    if args.truth:
        _dump(truth.to_json(), args.truth)
    return 0


def cmd_fit(args):
    x = tdata.load(args.data)
    cfg = SolverConfig(delta=args.delta, max_iters=args.max_iters, alpha=args.alpha,
                       skip_first_stop_check=args.skip_first_stop_check)
    est = fit(x, cfg)
    summary = est.summary()
    if args.out:
        _dump(est.point.to_json(), args.out)
    print(json.dumps(summary, sort_keys=True))
    return 0 if est.converged else EXIT_SOLVER


def _load_point(path):
    with open(path) as fh:
        return KronPoint.from_json(json.load(fh))


def cmd_eval(args):
    rep = factor_errors(_load_point(args.estimate), _load_point(args.truth))
    print(json.dumps(rep.as_dict(), sort_keys=True))
    return 0


def cmd_bench(args):
    doc = load_config(args.config) if args.config else {}
    if args.dims:
        doc["generator"] = _generator(args).to_dict()
    if args.alphas:
        doc["sweep"] = {"alpha": args.alphas}
    spec = spec_from_dict(
        doc,
        seed=args.seed,
        trials=args.trials,
        n_list=args.n_list,
        csv_path=args.csv,
        svg_path=args.svg,
        jobs=args.jobs,
        record_runtime=True if args.record_runtime else None,
    )
    text = run_experiment(spec)
    if not spec.csv_path:
        sys.stdout.write(text)
    return 0


def cmd_scale(args):
    res = scaling_study(_generator(args), args.n_list, args.trials, args.seed, delta=args.delta,
                        csv_path=args.csv, svg_path=args.svg, jobs=args.jobs)
    if not args.csv:
        sys.stdout.write(res.to_csv())
    print(json.dumps({"loglog_slope": res.slope}), file=sys.stderr)
    return 0


def cmd_diagnose(args):
    x = tdata.load(args.data)
    pairs = []
    if args.modes:
        m = args.modes
        if len(m) % 2:
            raise InvalidInput("--modes needs pairs a,b[,a,b...]")
        pairs = list(zip(m[0::2], m[1::2]))
    else:
        pairs = [(a, b) for a in range(x.k) for b in range(x.k) if a != b]
    for a, b in pairs:
        rec = diagnostics(x, a, b, with_gap=not args.no_gap)
        print(json.dumps({k: (float(v) if not isinstance(v, list) else v) for k, v in rec.items()},
                         sort_keys=True))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="kronmle", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw a dataset from a generated model, write TNDATA01")
    _add_generator_args(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--truth", help="also write the true point as JSON")
    s.set_defaults(func=cmd_sample)

    f = sub.add_parser("fit", help="run flip-flop (alpha=0) or ShrinkFlop on a dataset")
    f.add_argument("data")
    f.add_argument("--alpha", type=float, default=0.0)
    f.add_argument("--delta", type=float, default=1e-8)
    f.add_argument("--max-iters", type=int, default=None)
    f.add_argument("--skip-first-stop-check", action="store_true")
    f.add_argument("--out", help="write the estimate as KronPoint JSON")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="error metrics between two KronPoint JSON files")
    e.add_argument("estimate")
    e.add_argument("truth")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="seeded multi-trial experiment to CSV (+ SVG)")
    b.add_argument("--config")
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--trials", type=int)
    b.add_argument("--n-list", type=_int_list)
    _add_generator_args(b, required_dims=False)
    b.add_argument("--alphas", type=_float_list, help="ShrinkFlop alpha sweep, e.g. 0,0.5,1")
    b.add_argument("--csv")
    b.add_argument("--svg")
    b.add_argument("--jobs", type=int)
    b.add_argument("--record-runtime", action="store_true",
                   help="fill runtime_ms (makes the CSV non-reproducible)")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("scale", help="median error versus n with log-log slope")
    _add_generator_args(c)
    c.add_argument("--n-list", type=_int_list, required=True)
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--delta", type=float, default=1e-8)
    c.add_argument("--csv")
    c.add_argument("--svg")
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_scale)

    d = sub.add_parser("diagnose", help="balance, expansion and spectral-gap diagnostics")
    d.add_argument("data")
    d.add_argument("--modes", type=_int_list, help="pairs a,b (0-based), e.g. 0,1")
    d.add_argument("--no-gap", action="store_true", help="skip the spectral gap")
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (KronMLEError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
