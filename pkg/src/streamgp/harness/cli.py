"""``streamgp`` command line: run, synth, eval-equivalence."""
import argparse
import logging
import sys

import numpy as np

from ..errors import ContractError
from ..kernel import Hyperparams
from ..optimizer import OptimConfig
from .data import interleave_split, load_csv, scale_inputs, synth_gp_stream, write_csv
from .runner import METHODS, ModelParams, StreamAborted, StreamPlan, run_stream

SYNTH_KEYS = {"n": int, "dim": int, "lengthscale": float, "signal_var": float, "noise_var": float, "seed": int}
SYNTH_DEFAULTS = {"n": 1000, "dim": 1, "lengthscale": 0.8, "signal_var": 1.0, "noise_var": 0.1, "seed": 0}


def parse_synthetic(text):
    """``"n=2000,lengthscale=0.5,seed=3"`` -> dict with defaults filled in."""
    out = dict(SYNTH_DEFAULTS)
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, val = part.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in SYNTH_KEYS:
            raise ContractError(f"bad --synthetic entry {part!r}; keys: {', '.join(SYNTH_KEYS)}")
        out[key] = SYNTH_KEYS[key](val)
    return out


def _synth_theta(s):
    return Hyperparams.from_values([s["lengthscale"]] * s["dim"], s["signal_var"], s["noise_var"])


def build_parser():
    ap = argparse.ArgumentParser(prog="streamgp", description="Streaming sparse GP regression experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replay a dataset as a mini-batch stream")
    run.add_argument("--method", required=True, help=f"one of {', '.join(METHODS)}")
    run.add_argument("--alpha", type=float, default=0.5, help="Power-EP alpha for ssgp-pep")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="input CSV with a header row")
    src.add_argument("--synthetic", help="e.g. 'n=2000,dim=1,lengthscale=0.8,noise_var=0.1,seed=0'")
    run.add_argument("--x-cols", default="x0", help="comma separated input columns")
    run.add_argument("--y-col", default="y")
    run.add_argument("--batch-size", type=int, default=100)
    run.add_argument("--initial-train", type=int, default=0)
    run.add_argument("--num-pseudo", type=int, default=20)
    run.add_argument("--window", type=int, default=None, help="window size for the windowed baselines")
    run.add_argument("--fix-hypers", action="store_true")
    run.add_argument("--fix-pseudo", action="store_true")
    run.add_argument("--opt-iters", type=int, default=30)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--order", choices=("as-given", "random"), default="as-given")
    run.add_argument("--test-stride", type=int, default=2)
    run.add_argument("--scale-inputs", action="store_true", help="map each input column to [0, 10]")
    run.add_argument("--init-lengthscale", type=float, default=1.0)
    run.add_argument("--init-signal-var", type=float, default=1.0)
    run.add_argument("--init-noise-var", type=float, default=0.1)
    run.add_argument("--out", required=True)

    syn = sub.add_parser("synth", help="sample a synthetic GP dataset")
    syn.add_argument("--dim", type=int, default=1)
    syn.add_argument("--n", type=int, default=1000)
    syn.add_argument("--lengthscale", type=float, default=0.8)
    syn.add_argument("--signal-var", type=float, default=1.0)
    syn.add_argument("--noise-var", type=float, default=0.1)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--out", required=True)

    sub.add_parser("eval-equivalence", help="check the streaming updates against batch references")
    return ap


def cmd_run(args):
    if args.data:
        X, y = load_csv(args.data, args.x_cols, args.y_col)
    else:
        s = parse_synthetic(args.synthetic)
        X, y = synth_gp_stream(s["dim"], s["n"], _synth_theta(s), s["seed"])
    if args.scale_inputs:
        X, _ = scale_inputs(X)
    n, D = X.shape
    plan = StreamPlan(
        args.batch_size,
        tuple(range(1, n, args.test_stride)),
        args.initial_train,
        args.order,
        args.seed,
        args.window,
    )
    optim = OptimConfig(
        max_iters=args.opt_iters,
        optimize_pseudo=not args.fix_pseudo,
        optimize_hypers=not args.fix_hypers,
        seed=args.seed,
    )
    theta0 = Hyperparams.from_values([args.init_lengthscale] * D, args.init_signal_var, args.init_noise_var)
    params = ModelParams(theta0, args.num_pseudo, args.alpha, optim)
    recs = run_stream(args.method, plan, params, X, y, out=args.out)
    last = recs[-1]
    print(f"{args.method}: {len(recs)} batches, final mll={last.mll:.4f} rmse={last.rmse:.4f} -> {args.out}")
    return 0


def cmd_synth(args):
    theta = Hyperparams.from_values([args.lengthscale] * args.dim, args.signal_var, args.noise_var)
    X, y = synth_gp_stream(args.dim, args.n, theta, args.seed)
    write_csv(args.out, X, y)
    print(f"wrote {args.n} rows to {args.out}")
    return 0


def cmd_equivalence(args):
    from .equivalence import run_all

    results = run_all()
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    np.seterr(all="ignore")
    handler = {"run": cmd_run, "synth": cmd_synth, "eval-equivalence": cmd_equivalence}[args.command]
    try:
        return handler(args)
    except StreamAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ContractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
