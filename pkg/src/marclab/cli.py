"""Command-line front end.

Every subcommand prints a short summary, writes a JSON report (with the
resolved configuration and the package version) into ``--out`` and exits
with 0 when all checks pass, 2 when a condition fails or a bound is
violated, and 1 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .conditions import (
    check_crbc,
    check_outer_thm2,
    check_outer_thm3_relay,
    check_thm1,
    check_thm6_cpm,
    check_thm7_cpm,
    separation_operating_margins,
)
from .fading import (
    FadingMarcParams,
    MonteCarlo,
    SourceEntropies,
    check_separation_optimal,
    phase_df_conditions,
    phase_region,
    rayleigh_df_conditions,
    rayleigh_region,
)
from .models import DmChannel, SourceSideInfoModel, adder_mac_channel, input_from_json
from .search import SearchConfig, maximize_mi
from .sim import BlockMarkovConfig, CodebookTooLarge, run_scheme, run_uncoded_somarc, sweep_csv

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class InputError(Exception):
    """Bad command line or unreadable input file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


# --------------------------------------------------------------------------
# loading


def load_json(path: str, what: str):
    if path is None:
        raise InputError(f"--{what} is required")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: cannot read {what} file ({e.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: invalid JSON in {what} file: {e.msg}") from None


def _parse(path: str, what: str, build):
    obj = load_json(path, what)
    if not isinstance(obj, dict):
        raise InputError(f"{path}: {what} file must hold a JSON object")
    try:
        return build(obj)
    except (ValueError, KeyError, TypeError) as e:
        raise InputError(f"{path}: {e}") from None


def load_model(path):
    return _parse(path, "model", SourceSideInfoModel.from_json)


def load_channel(path):
    return _parse(path, "channel", DmChannel.from_json)


def load_input(path):
    return _parse(path, "input", input_from_json)


def parse_rates(text: str) -> dict:
    """``"R1r=1,R2r=1,R1d=0.5,R2d=0.5"`` to a dict of floats."""
    out = {}
    for item in filter(None, (t.strip() for t in (text or "").split(","))):
        if "=" not in item:
            raise InputError(f"--rates entry {item!r} is not of the form NAME=VALUE")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise InputError(f"--rates entry {item!r} has a non-numeric value") from None
    return out


# --------------------------------------------------------------------------
# output


def write_report(args, name: str, report: dict) -> str:
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    config = {k: v for k, v in vars(args).items() if k != "func"}
    with open(path, "w") as fh:
        json.dump({"command": args.command, "version": __version__, "config": config, "report": report},
                  fh, indent=2, default=_default)
    print(f"report: {path}")
    return path


def _default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


# --------------------------------------------------------------------------
# subcommands


def cmd_region(args) -> int:
    model, ch, inp = load_model(args.model), load_channel(args.channel), load_input(args.input)
    checks = {
        "1": lambda: check_thm1(model, ch, inp, args.kappa),
        "crbc": lambda: check_crbc(model, ch, inp, args.kappa),
        "6": lambda: check_thm6_cpm(model, ch, inp),
        "7": lambda: check_thm7_cpm(model, ch, inp),
    }
    if args.theorem in ("6", "7") and args.kappa != 1.0:
        raise InputError(f"theorem {args.theorem} is stated at kappa = 1, got --kappa {args.kappa}")
    try:
        rep = checks[args.theorem]()
    except (ValueError, TypeError) as e:
        raise InputError(str(e)) from None
    print(rep.summary())
    write_report(args, f"region-{args.theorem}.json", rep.to_dict())
    return EXIT_OK if rep.all_satisfied else EXIT_FAIL


def _search_config(args) -> SearchConfig:
    return SearchConfig(grid_points_per_simplex_dim=args.grid, random_restarts=args.restarts,
                        aux_cardinality=args.aux_cardinality, seed=args.seed)


def cmd_outer(args) -> int:
    model, ch = load_model(args.model), load_channel(args.channel)
    fn = check_outer_thm2 if args.theorem == "2" else check_outer_thm3_relay
    try:
        rep = fn(model, ch, args.kappa, _search_config(args), family=args.family)
    except ValueError as e:
        raise InputError(str(e)) from None
    print(rep.summary())
    write_report(args, f"outer-{args.theorem}.json", rep.to_dict())
    return EXIT_FAIL if rep.verdict == "violated" else EXIT_OK


def _entropies(args) -> SourceEntropies:
    if args.model:
        return SourceEntropies.from_model(load_model(args.model))
    if args.entropies:
        return _parse(args.entropies, "entropies", lambda o: SourceEntropies(**o))
    raise InputError("--check separation needs --model or --entropies")


def cmd_fading(args) -> int:
    p = _parse(args.params, "params", FadingMarcParams.from_json)
    mc = MonteCarlo(samples=args.samples, seed=args.seed)
    try:
        if args.check == "df":
            df = phase_df_conditions(p) if p.kind == "phase" else rayleigh_df_conditions(p)
            report = {"kind": p.kind, "df_conditions": list(df)}
            print(f"{p.kind} fading, decode-and-forward conditions: {df}")
            code = EXIT_OK if all(df) else EXIT_FAIL
        elif args.check == "region":
            if p.kind == "phase":
                thr, se = phase_region(p, args.kappa), (0.0, 0.0, 0.0)
                df = phase_df_conditions(p)
            else:
                thr, se = rayleigh_region(p, args.kappa, mc)
                df = rayleigh_df_conditions(p)
            report = {"kind": p.kind, "kappa": args.kappa, "df_conditions": list(df),
                      "thresholds": list(thr), "threshold_std_errors": list(se)}
            print(f"{p.kind} fading, df conditions {df}, thresholds "
                  + ", ".join(f"{t:.6f}" for t in thr))
            code = EXIT_OK
        else:
            rep = check_separation_optimal(_entropies(args), p, args.kappa, mabrc=args.mabrc, mc=mc)
            report = rep.to_dict()
            print(f"{p.kind} fading, separation verdict: {rep.verdict}; thresholds "
                  + ", ".join(f"{t:.6f}" for t in rep.thresholds))
            code = EXIT_OK if rep.verdict == "ACHIEVABLE" else EXIT_FAIL
    except ValueError as e:
        raise InputError(str(e)) from None
    write_report(args, f"fading-{args.check}.json", report)
    return code


def _min_margin(scheme, model, ch, inp, kappa, rates) -> float:
    if scheme == "sep":
        # the operating point, not the rate-free conditions, sets the error rate
        return min(separation_operating_margins(model, ch, inp, rates, kappa).values())
    if scheme == "cpm-a":
        rep = check_thm6_cpm(model, ch, inp)
    else:
        rep = check_thm7_cpm(model, ch, inp)
    return min(c.margin_bits for c in rep.conditions)


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    channels = [load_channel(c) for c in args.channel]
    inputs = [load_input(i) for i in args.input]
    if len(inputs) == 1:
        inputs = inputs * len(channels)
    if len(inputs) != len(channels):
        raise InputError("give one --input, or one per --channel")
    rates = parse_rates(args.rates)
    try:
        cfg = BlockMarkovConfig(m=args.m, n=args.n, B=args.blocks, rates=rates, epsilon=args.epsilon,
                                seed=args.seed, mode=args.mode, workers=args.workers)
        rows, reports = [], []
        for ch, inp in zip(channels, inputs):
            margin = _min_margin(args.scheme, model, ch, inp, args.n / args.m, rates)
            rep = run_scheme(args.scheme, model, ch, inp, cfg, args.trials)
            print(f"{rep.summary()}  (smallest condition margin {margin:+.4f} bits)")
            rows.append((margin, rep))
            reports.append(dict(rep.to_dict(), min_margin_bits=margin))
    except (ValueError, TypeError, CodebookTooLarge) as e:
        raise InputError(str(e)) from None
    write_report(args, f"simulate-{args.scheme}.json", {"points": reports})
    if args.csv:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"simulate-{args.scheme}.csv")
        with open(path, "w") as fh:
            fh.write(sweep_csv(sorted(rows, key=lambda r: r[0])))
        print(f"csv: {path}")
    return EXIT_OK


def cmd_somarc_demo(args) -> int:
    rep = run_uncoded_somarc(args.trials, args.seed)
    bound = maximize_mi(adder_mac_channel(), "I(X1,X2;Y)", "product", SearchConfig(seed=args.seed))
    print(f"uncoded X_i = S_i over {args.trials} trials: errors: {rep.errors}")
    print(f"sum-capacity bound ≈ {bound.best_value_bits:.3f} bits per channel use (independent inputs), "
          f"below H(S1,S2) = log2 3 ≈ 1.585")
    write_report(args, "somarc-demo.json", {"simulation": rep.to_dict(),
                                            "sum_capacity_bound_bits": bound.best_value_bits})
    return EXIT_OK if rep.errors == 0 else EXIT_FAIL


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="marclab", description="Rate-region checks and coding-scheme simulations "
                                            "for multiple-access relay channels with correlated sources.")
    p.add_argument("--version", action="version", version=f"marclab {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, model=True, channel=True):
        if model:
            sp.add_argument("--model", help="source model JSON")
        if channel:
            sp.add_argument("--channel", help="channel JSON")
        sp.add_argument("--kappa", type=float, default=1.0, help="channel symbols per source sample")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="marclab-out", help="report directory")
        sp.add_argument("--manifest", help="JSON file with option values (command-line flags win)")

    sp = sub.add_parser("region", help="achievability conditions")
    sp.add_argument("--theorem", required=True, choices=["1", "6", "7", "crbc"])
    sp.add_argument("--input", help="input-distribution JSON")
    common(sp)
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("outer", help="necessary conditions by input search")
    sp.add_argument("--theorem", required=True, choices=["2", "3"])
    sp.add_argument("--family", default="joint", choices=["joint", "product"])
    sp.add_argument("--grid", type=int, default=21, help="grid points per simplex dimension")
    sp.add_argument("--restarts", type=int, default=4)
    sp.add_argument("--aux-cardinality", type=int, default=4)
    common(sp)
    sp.set_defaults(func=cmd_outer)

    sp = sub.add_parser("fading", help="fading Gaussian MARC conditions and thresholds")
    sp.add_argument("--check", required=True, choices=["df", "region", "separation"])
    sp.add_argument("--params", help="fading parameter JSON")
    sp.add_argument("--entropies", help="conditional source entropies JSON")
    sp.add_argument("--samples", type=int, default=1_000_000, help="Monte-Carlo samples when no closed form")
    sp.add_argument("--mabrc", action="store_true", help="also require relay-side entropy conditions")
    common(sp, channel=False)
    sp.set_defaults(func=cmd_fading)

    sp = sub.add_parser("simulate", help="Monte-Carlo error rate of a coding scheme")
    sp.add_argument("--scheme", required=True, choices=["sep", "cpm-a", "cpm-b"])
    sp.add_argument("--input", nargs="+", default=[], help="input-distribution JSON(s)")
    sp.add_argument("--rates", default="", help="e.g. R1r=1,R2r=1,R1d=1,R2d=1 or R1=0.75,R2=0.75")
    sp.add_argument("--m", type=int, default=8, help="source samples per block")
    sp.add_argument("--n", type=int, default=8, help="channel uses per block")
    sp.add_argument("--blocks", type=int, default=3, help="number of source blocks B")
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--mode", default="marc", choices=["marc", "mabrc"])
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--csv", action="store_true", help="write margin-vs-error CSV")
    common(sp, channel=False)
    sp.add_argument("--channel", nargs="+", default=[], help="channel JSON(s); several make a sweep")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("somarc-demo", help="uncoded zero-error transmission and the 1.5-bit bound")
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="marclab-out", help="report directory")
    sp.add_argument("--manifest", help="JSON file with option values (command-line flags win)")
    sp.set_defaults(func=cmd_somarc_demo)
    return p


def _apply_manifest(parser, argv, args):
    """Re-parse with manifest values as defaults so explicit flags still win."""
    obj = load_json(args.manifest, "manifest")
    if not isinstance(obj, dict):
        raise InputError(f"{args.manifest}: manifest must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    bad = sorted(k.replace("-", "_") for k in obj if k.replace("-", "_") not in known)
    if bad:
        raise InputError(f"{args.manifest}: unknown manifest field(s) {bad}")
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in obj.items()})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return EXIT_INPUT
        if getattr(args, "manifest", None):
            args = _apply_manifest(parser, argv, args)
        for name in ("trials", "samples"):
            if getattr(args, name, 1) < 1:
                raise InputError(f"--{name} must be >= 1")
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
