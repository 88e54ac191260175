"""
Command-line entry point.

    ramac region --channel collision:n=4,K=2 --profile prop1:n=4 --rates 0.16,0.16
    ramac sweep --config configs/demo.json --out results.csv
    ramac trial --config configs/demo.json --N 12 --trial 3
    ramac validate configs/channel.json

Exit status: 0 on success, 2 on a configuration error, 3 when a
desk-scale guardrail is hit. User numbers on the command line are 1-based.
"""

import argparse
import json
import math
import sys

from .channel import channel_from_dict, load_channel
from .coding import profile_from_dict
from .errors import ConfigError, GuardrailError
from .harness import (ExperimentConfig, format_csv, resolve_threads, run_trial, sweep,
                      write_csv)
from .regions import (MIOracle, collision_region_contains, constraint_table, contains_all,
                      contains_subset, contains_user, gaussian_subset_bounds)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}")


def _label(S):
    return "+".join(str(i + 1) for i in S)


def _bool(b):
    return "true" if b else "false"


def _region(args, out):
    rates = _floats(args.rates)
    mode = args.mode
    if mode == "gaussian":
        powers = _floats(args.powers) if args.powers else None
        if powers is None or len(powers) != len(rates):
            raise ConfigError("gaussian mode needs --powers with one entry per rate")
        bounds = gaussian_subset_bounds(powers, args.noise)
        rows = [(S, sum(rates[i] for i in S), b) for S, b in bounds.items()]
        print(f"inside: {_bool(all(s < b for _, s, b in rows))}", file=out)
        print("S,sum_rate,bound,slack", file=out)
        for S, s, b in rows:
            print(f"{_label(S)},{s:.10g},{b:.10g},{b - s:.10g}", file=out)
        return 0
    if mode == "prop1":
        n = args.n
        if n is None:
            ch = load_channel(args.channel)
            n = int(round(math.log2(ch.input_sizes[0] - 1)))
        total = sum(math.sqrt(r / n) for r in rates)
        print(f"inside: {_bool(collision_region_contains(rates, n))}", file=out)
        print("constraint,value,bound,slack", file=out)
        print(f"sum_sqrt,{total:.10g},1,{1 - total:.10g}", file=out)
        return 0
    if not args.channel or not args.profile:
        raise ConfigError(f"mode {mode!r} needs --channel and --profile")
    ch = load_channel(args.channel)
    profiles = args.profile * ch.num_users if len(args.profile) == 1 else args.profile
    oracle = MIOracle(ch, profiles)
    if len(rates) != ch.num_users:
        raise ConfigError(f"{len(rates)} rates for {ch.num_users} users")
    if mode == "all":
        S0, inside = None, contains_all(rates, oracle)
    else:
        name, _, body = mode.partition(":")
        users = [int(v) - 1 for v in body.split(",") if v.strip()] if body else []
        if name not in ("user", "subset") or not users or not all(
                0 <= u < ch.num_users for u in users):
            raise ConfigError(f"bad region mode {mode!r}")
        S0 = users
        inside = contains_user(rates, users[0], oracle) if name == "user" and len(users) == 1 \
            else contains_subset(rates, users, oracle)
    print(f"inside: {_bool(inside)}", file=out)
    print("S,S_tilde,sum_rate,mutual_information,slack,satisfied", file=out)
    for S, St, s, info, slack, sat in constraint_table(rates, oracle, S0):
        print(f"{_label(S)},{_label(St)},{s:.10g},{info:.10g},{slack:.10g},{_bool(sat)}",
              file=out)
    return 0


def _sweep(args, out):
    cfg = ExperimentConfig.load(args.config)
    rows = sweep(cfg, resolve_threads(args.threads, cfg))
    path = args.out or cfg.output
    if path:
        write_csv(rows, path)
        print(f"wrote {len(rows) - 1} rows to {path}", file=out)
    else:
        out.write(format_csv(rows))
    return 0


def _trial(args, out):
    cfg = ExperimentConfig.load(args.config)
    N = args.N if args.N is not None else cfg.N[0]
    npts = len(cfg.rates if cfg.rates is not None else cfg.messages)
    if not 0 <= args.point < npts:
        raise ConfigError(f"point index must be in [0, {npts})")
    rec = run_trial(cfg, (N, args.point), args.trial, keep_candidates=True)
    print(f"N={rec.N} transmitted={list(rec.transmitted)} "
          f"rates={[round(r, 6) for r in rec.rates]}", file=out)
    print(f"thetas={list(rec.thetas)}", file=out)
    print(f"candidates ({len(rec.candidates)}):", file=out)
    for c in rec.candidates:
        print("  " + ",".join(str(w) for w in c), file=out)
    print(f"outcome={rec.outcome} decoded={rec.decoded} correct={rec.correct}", file=out)
    if args.jsonl:
        with open(args.jsonl, "a", encoding="utf-8") as fh:
            fh.write(rec.to_json(with_candidates=True) + "\n")
    return 0


def _validate(args, out):
    try:
        with open(args.path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.path}: invalid JSON: {exc}")
    if not isinstance(d, dict):
        raise ConfigError(f"{args.path}: expected a JSON object")
    if "transition" in d:
        ch = channel_from_dict(d)
        print(f"ok: channel with {ch.num_users} users, inputs {list(ch.input_sizes)}, "
              f"{ch.output_size} outputs", file=out)
    elif "segment_pmfs" in d:
        p = profile_from_dict(d)
        print(f"ok: profile with {p.num_segments} segments, alphabet {p.alphabet_size}, "
              f"r_max {p.r_max}", file=out)
    else:
        cfg = ExperimentConfig.load(args.path)
        print(f"ok: experiment with {cfg.K} users, {len(cfg.points())} points, "
              f"{cfg.trials} trials each", file=out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ramac", description=__doc__.split("\n\n")[0].strip())
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("region", help="evaluate region membership and print the slack table")
    r.add_argument("--channel", help="channel preset or JSON file")
    r.add_argument("--profile", action="append", default=[],
                   help="input profile preset or JSON file; repeat per user or give once")
    r.add_argument("--rates", required=True, help="comma-separated rate vector")
    r.add_argument("--mode", default="all",
                   help="all | user:k | subset:i,j | gaussian | prop1 (default all)")
    r.add_argument("--powers", help="gaussian mode: comma-separated powers")
    r.add_argument("--noise", type=float, default=1.0, help="gaussian mode: noise variance")
    r.add_argument("--n", type=int, help="prop1 mode: collision channel order")
    r.set_defaults(func=_region)

    s = sub.add_parser("sweep", help="run an experiment config and emit CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="CSV path (default: config 'output', else stdout)")
    s.add_argument("--threads", type=int, help="worker processes (overrides $RAMAC_THREADS)")
    s.set_defaults(func=_sweep)

    t = sub.add_parser("trial", help="run one verbose trial and dump the candidate set")
    t.add_argument("--config", required=True)
    t.add_argument("--N", type=int, help="blocklength (default: first in config)")
    t.add_argument("--point", type=int, default=0, help="0-based rate point index")
    t.add_argument("--trial", type=int, default=0, help="trial seed")
    t.add_argument("--jsonl", help="append the full record as a JSON line")
    t.set_defaults(func=_trial)

    v = sub.add_parser("validate", help="lint a channel, profile or experiment file")
    v.add_argument("path")
    v.set_defaults(func=_validate)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except GuardrailError as exc:
        print(f"guardrail: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
