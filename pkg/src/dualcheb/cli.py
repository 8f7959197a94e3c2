"""Command-line entry point: ``python -m dualcheb <command>``.

Exit codes: 0 success, 1 verification or run failure, 2 usage/config error.
"""

import argparse
import glob
import math
import sys
from pathlib import Path

from . import suites, toy
from .errors import ConfigError, NonFiniteError
from .train import METHODS, TrainConfig, ablate_p, compare, train, write_rows


def _p_value(s):
    return math.inf if s.lower() in ("inf", "infinity") else float(s)


def _parser():
    ap = argparse.ArgumentParser(prog="dualcheb", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run one training job from a TOML config")
    t.add_argument("config")
    t.add_argument("--method", help=f"override the method ({', '.join(METHODS)})")
    t.add_argument("--seed", type=int)
    t.add_argument("--steps", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--p", type=_p_value)
    t.add_argument("--output")
    t.add_argument("--plain-sgd", action="store_true", help="theta <- theta - lr * d instead of Adam")

    sub.add_parser("toy", help="print the three-loss comparison tables and check the closed forms")

    v = sub.add_parser("verify", help="run the oracle suites")
    v.add_argument("--quick", action="store_true", help="smaller instance counts")

    c = sub.add_parser("compare", help="aggregate final metrics over configs matching a glob")
    c.add_argument("pattern")
    c.add_argument("--output", default="compare.csv")
    c.add_argument("--jobs", type=int, default=1)

    a = sub.add_parser("ablate-p", help="sweep the norm parameter for method=ours")
    a.add_argument("config")
    a.add_argument("--p", dest="p_values", type=_p_value, nargs="+", default=[1.5, 2.0, 3.0])
    a.add_argument("--steps", type=int)
    a.add_argument("--output", default="ablate_p.csv")
    return ap


def _load(path, **overrides):
    cfg = TrainConfig.from_toml(path)
    changes = {k: v for k, v in overrides.items() if v is not None}
    return cfg.replace(**changes) if changes else cfg


def _cmd_train(args):
    cfg = _load(args.config, method=args.method, seed=args.seed, steps=args.steps, lr=args.lr, p=args.p,
                output=args.output, plain_sgd=True if args.plain_sgd else None)
    res = train(cfg)
    fin = res.final
    print(f"{cfg.problem} {cfg.method} seed={cfg.seed}: steps={res.steps_run} terminated={res.terminated} "
          f"rel_l2={fin.rel_l2:.6g}")
    if cfg.output:
        print(f"wrote {cfg.output}")
    return 0


def _cmd_toy(args):
    blocks = [("three losses, gradients (5,0,0), (0,3,0), (1/5, 14/15, 2 sqrt5/15)", toy.triple_checks()),
              ("unit gradients e1, e2, (2,2,1)/3", toy.corner_checks())]
    ok = True
    for title, checks in blocks:
        print(toy.format_table(title, checks))
        print()
        ok &= all(ch.ok for ch in checks)
    print("all values match" if ok else "MISMATCH")
    return 0 if ok else 1


def _cmd_verify(args):
    results = suites.all_suites(quick=args.quick)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'pass' if r.passed else 'FAIL'}  n={r.count:<4} {r.detail}")
    ok = all(r.passed for r in results)
    print("verify: all suites passed" if ok else "verify: FAILURES")
    return 0 if ok else 1


def _cmd_compare(args):
    paths = sorted(glob.glob(args.pattern))
    if not paths:
        raise ConfigError(f"no config files match {args.pattern!r}")
    rows = compare([TrainConfig.from_toml(p) for p in paths], jobs=args.jobs)
    write_rows(rows, args.output)
    for r in rows:
        print(f"{r['problem']} {r['method']} p={r['p']}: rel_l2 {r['rel_l2_mean']:.4g} +- {r['rel_l2_std']:.2g} "
              f"({r['runs']} runs)")
    print(f"wrote {args.output}")
    return 0


def _cmd_ablate(args):
    cfg = _load(args.config, steps=args.steps)
    rows = ablate_p(cfg, args.p_values)
    write_rows(rows, args.output)
    for r in rows:
        print(f"p={r['p']}: rel_l2={r['rel_l2']:.6g} steps={r['steps_run']} terminated={r['terminated']}")
    print(f"wrote {args.output}")
    return 0


COMMANDS = {"train": _cmd_train, "toy": _cmd_toy, "verify": _cmd_verify, "compare": _cmd_compare,
            "ablate-p": _cmd_ablate}


def main(argv=None):
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
