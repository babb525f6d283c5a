"""Command-line entry point.

Examples::

    ocolab exp2 --T 1000 --k 250 --seeds 100 --algos ogd,metagrad,hybrid_s2_empty --out r.csv
    ocolab adversary --T 2000 --algos ons
    ocolab certify --instance exp3 --seed 0
    ocolab selftest
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .harness import ALGORITHMS, ExperimentConfig, emit_csv, run_grid, write_svg
from .instances import certify_exp_concave, make_exp1, make_exp2, make_exp3

DEFAULT_ALGOS = {
    "exp1": "ogd,ons,metagrad,con_ons",
    "exp2": "ogd,metagrad,hybrid_s2_empty",
    "exp3": "ogd,ons,metagrad,hybrid_s1_empty,hybrid_s2_empty",
    "adversary": "ons",
}

# config keys and how to parse them
_KEYS = {
    "T": int,
    "k": int,
    "n": int,
    "d": int,
    "seeds": str,
    "seed": int,
    "algos": str,
    "stride": int,
    "out": str,
    "summary": str,
    "svg": str,
    "workers": int,
    "gamma": float,
    "G": float,
    "D": float,
    "instance": str,
    "samples": int,
}

_DEFAULTS = {
    "T": 1000,
    "k": 250,
    "n": 10,
    "d": 5,
    "seeds": "100",
    "seed": 0,
    "stride": 25,
    "workers": 1,
    "gamma": 0.005,
    "G": 100.0,
    "D": 1.0,
    "instance": "exp1",
    "samples": 32,
}


class UsageError(Exception):
    pass


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _KEYS[key](value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def parse_seeds(text: str):
    text = str(text).strip()
    if "," in text:
        return tuple(int(s) for s in text.split(",") if s.strip())
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocolab", description="Contaminated online convex optimization experiments.")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        for key in ("T", "k", "stride", "workers"):
            p.add_argument(f"--{key}", type=int, default=None)
        p.add_argument("--seeds", default=None, help="number of seeds or a comma-separated list")
        p.add_argument("--algos", default=None, help=f"comma-separated subset of {','.join(ALGORITHMS)}")
        p.add_argument("--out", default=None, help="per-run CSV path")
        p.add_argument("--summary", default=None, help="aggregate CSV path")
        p.add_argument("--svg", default=None, help="plot of mean regret with std error bars")
        p.add_argument("--config", default=None, help="key = value file; flags override it")

    for name in ("exp1", "exp2"):
        common(sub.add_parser(name, help=f"run {name}"))
    p3 = sub.add_parser("exp3", help="mini-batch least squares")
    common(p3)
    p3.add_argument("--n", type=int, default=None)
    p3.add_argument("--d", type=int, default=None)
    pa = sub.add_parser("adversary", help="adaptive linear adversary against ONS")
    common(pa)
    for key in ("gamma", "G", "D"):
        pa.add_argument(f"--{key}", type=float, default=None)

    pc = sub.add_parser("certify", help="certify exp-concavity of every clean round of an instance")
    pc.add_argument("--instance", choices=("exp1", "exp2", "exp3"), default=None)
    for key in ("T", "k", "n", "d", "seed", "samples"):
        pc.add_argument(f"--{key}", type=int, default=None)
    pc.add_argument("--config", default=None)

    sub.add_parser("selftest", help="run the invariant checks")
    return parser


def _merge(args) -> dict:
    opts = dict(_DEFAULTS)
    if getattr(args, "config", None):
        opts.update(read_config(args.config))
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config"):
            opts[key] = value
    return opts


def _run_experiment(command: str, opts: dict, out) -> int:
    algos = tuple(a.strip() for a in opts.get("algos", DEFAULT_ALGOS[command]).split(",") if a.strip())
    try:
        cfg = ExperimentConfig(
            experiment=command,
            T=opts["T"],
            k=opts["k"],
            n=opts["n"],
            d=opts["d"],
            seeds=parse_seeds(opts["seeds"]),
            algorithms=algos,
            stride=opts["stride"],
            out=opts.get("out"),
            gamma=opts["gamma"],
            G=opts["G"],
            D=opts["D"],
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    result = run_grid(cfg, workers=opts["workers"])
    if cfg.out:
        emit_csv(result, cfg.out)
    if opts.get("summary"):
        emit_csv(result.summary, opts["summary"])
    if opts.get("svg"):
        write_svg(result.summary, opts["svg"])
    stats = result.summary
    out(f"{command}: T={cfg.T} seeds={len(stats.seeds)}")
    for name in stats.algorithms:
        out(f"  {name:18s} final regret {stats.final(name):12.4f} +- {float(stats.std_regret[name][-1]):.4f}")
    return 0


def _certify(opts: dict, out) -> int:
    name = opts["instance"]
    if name == "exp1":
        inst = make_exp1(opts["T"], opts["k"], opts["seed"])
    elif name == "exp2":
        inst = make_exp2(opts["T"], opts["k"], opts["seed"])
    else:
        inst = make_exp3(opts["T"], opts["k"], opts["n"], opts["d"], opts["seed"])
    seen = {}
    failures = 0
    for t, f in enumerate(inst.stream.losses, start=1):
        if f.tag.contaminated:
            continue
        key = (f.kind, f.params().tobytes(), f.tag.alpha_t)
        if key not in seen:
            seen[key] = certify_exp_concave(f, f.tag.alpha_t, inst.region, n_samples=opts["samples"], seed=opts["seed"])
        res = seen[key]
        if not res.passed:
            failures += 1
            out(f"  round {t}: FAIL margin {res.min_margin:.3e} at {np.array2string(res.witness, precision=4)}")
    checked = sum(1 for f in inst.stream.losses if not f.tag.contaminated)
    out(f"certify {name}: {checked - failures}/{checked} clean rounds certified at their alpha_t")
    return 0 if failures == 0 else 1


def main(argv=None, out=print) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.command == "selftest":
            from .selftest import run_selftest

            return 0 if run_selftest(out) else 1
        opts = _merge(args)
        if args.command == "certify":
            return _certify(opts, out)
        return _run_experiment(args.command, opts, out)
    except UsageError as exc:
        print(f"ocolab: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as exc:
        print(f"ocolab: invariant failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
