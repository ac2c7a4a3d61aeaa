"""Command line entry point.

    lrkbest sweep    --config CFG --out run.csv      BER per SNR and iteration
    lrkbest compare  --config CFG --out cmp.csv      fixed point against float
    lrkbest wlsearch --config CFG --out wl.csv       word-length search
    lrkbest profile  --config CFG                    integer bits per variable group
    lrkbest verify                                   property/oracle self-checks

Exit status: 0 success, 1 configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from importlib import resources

from .config import ConfigError, load_config, parse_config
from .sim import (BerRangeError, ci_path_for, ci_to_csv, compare_fixed_float, offset_table_csv,
                  records_to_csv, run_ber_sweep)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _load(arg: str):
    if arg.startswith("builtin:"):
        name = arg.split(":", 1)[1]
        res = resources.files("lrkbest.data").joinpath(f"{name}.ini")
        if not res.is_file():
            raise ConfigError(f"no shipped config named {name!r}")
        return parse_config(res.read_text(), source=arg)
    return load_config(arg)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment INI file, or builtin:NAME")
    common.add_argument("--out", help="output CSV path (stdout if omitted)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
    common.add_argument("--quiet", action="store_true", help="suppress progress and summaries")

    p = argparse.ArgumentParser(prog="lrkbest", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="BER sweep to CSV")
    sub.add_parser("compare", parents=[common], help="fixed vs floating-point SNR offset")
    wl = sub.add_parser("wlsearch", parents=[common], help="word-length search")
    wl.add_argument("--wl-max", type=int, default=24)
    wl.add_argument("--wl-min", type=int, default=12)
    wl.add_argument("--budget-db", type=float, default=0.6)
    pr = sub.add_parser("profile", parents=[common], help="range profile of the float receiver")
    pr.add_argument("--trials", type=int, default=20)
    vf = sub.add_parser("verify", parents=[common], help="run the self-check suites")
    vf.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    return p


def _emit(text: str, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _log(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "verify":
            from .verify import SUITES, run_all
            unknown = [s for s in args.suite or [] if s not in SUITES]
            if unknown:
                raise ConfigError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
            return EXIT_OK if run_all(args.suite) else EXIT_RUNTIME
        if not args.config:
            raise ConfigError(f"{args.command} needs --config")
        cfg = _load(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return _run(args, cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BerRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _run(args, cfg) -> int:
    def progress(recs):
        r = recs[-1]
        _log(args, f"snr {r.snr_db:g} dB: {r.bits_sent} bits, BER(it {r.iteration}) = {r.ber:.3e}")

    if args.command == "sweep":
        recs = run_ber_sweep(cfg, args.threads, progress)
        _emit(records_to_csv(recs), args.out)
        if args.out:
            ci_to_csv(recs, ci_path_for(args.out))
        return EXIT_OK

    if args.command == "compare":
        if not cfg.arithmetic.is_fixed:
            raise ConfigError("compare needs [arithmetic] mode = fixed")
        rep = compare_fixed_float(cfg, threads=args.threads)
        _emit(offset_table_csv(rep), args.out)
        _log(args, f"iteration {rep.iteration}: fixed {rep.snr_fixed:.3f} dB, float "
                   f"{rep.snr_float:.3f} dB, offset {rep.offset_db:+.3f} dB at BER {rep.target_ber:g}")
        return EXIT_OK

    if args.command == "wlsearch":
        from .wordlength import WordLengthSearchError, rows_to_csv, wordlength_search
        try:
            res = wordlength_search(cfg, args.wl_max, args.wl_min, args.budget_db,
                                    threads=args.threads)
        except WordLengthSearchError as exc:
            _emit(rows_to_csv(exc.rows), args.out)
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        _emit(res.to_csv(), args.out)
        _log(args, f"shortest word length within {args.budget_db} dB: {res.word_length}")
        return EXIT_OK

    if args.command == "profile":
        from .wordlength import profile_pipeline
        prof = profile_pipeline(cfg, args.trials)
        lines = ["group,min,max,integer_bits"]
        lines += [f"{v.name},{v.min:.6g},{v.max:.6g},{v.integer_bits}" for v in prof.variables.values()]
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    raise ConfigError(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
