"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 capacity error,
3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import CapacityError, ConfigError, IdncError, InvariantViolation
from .experiment import config_keys, load_config, parse_value
from .montecarlo import run_monte_carlo
from .presets import PRESETS, gnuplot_script, preset_spec
from .traces import load_trace

# keys with a dedicated flag below
_NAMED = {"seed", "trials", "out", "p_norm", "greedy_clique", "max_rounds"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _experiment_flags(p, every_key):
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--trials", type=int, help="paired trials per (N, M) cell")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--p-norm", dest="p_norm", type=float, help="exponent of the p-norm objective")
    p.add_argument("--greedy-clique", dest="greedy_clique", action="store_true", default=None,
                   help="approximate clique search (no vertex cap)")
    p.add_argument("--max-rounds", dest="max_rounds", type=int, help="round guard for P1 episodes")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--gnuplot", action="store_true", help="also write <out>.gp")
    if every_key:
        for key in config_keys():
            if key not in _NAMED:
                p.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar="VALUE",
                               help=f"override config key {key}")


def build_parser():
    parser = _Parser(prog="idncsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run the experiment described by a config file")
    p.add_argument("config")
    _experiment_flags(p, every_key=True)

    p = sub.add_parser("preset", help="run a preset experiment")
    p.add_argument("name", choices=sorted(PRESETS))
    _experiment_flags(p, every_key=False)
    p.add_argument("--trace-path", dest="trace_path", help="trace file for table1-style")

    p = sub.add_parser("trace-info", help="validate and summarise an importance trace")
    p.add_argument("path")
    p.add_argument("--block-size", type=int, default=10)

    p = sub.add_parser("selftest", help="run the brute-force oracle suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=1.0, help="fraction of the default instance counts")
    return parser


def _overrides(args, keys):
    out = {}
    for key in keys:
        v = getattr(args, key, None)
        if v is None:
            continue
        out[key] = parse_value(key, v) if isinstance(v, str) and key not in ("out", "trace_path") else v
    return out


def _emit(result, spec, args):
    if spec.out:
        result.write(spec.out)
        if args.gnuplot:
            with open(f"{spec.out}.gp", "w", encoding="utf-8") as fh:
                fh.write(gnuplot_script(result, spec.out))
        print(f"wrote {spec.out}", file=sys.stderr)
    else:
        sys.stdout.write(result.to_csv())
    for key, count in sorted(result.abnormal.items(), key=lambda kv: str(kv[0])):
        print(f"warning: {count} episode(s) hit the round guard in cell {key}", file=sys.stderr)


def _cmd_run(args):
    spec = load_config(args.config, _overrides(args, config_keys()))
    _emit(run_monte_carlo(spec, workers=args.workers), spec, args)


def _cmd_preset(args):
    spec = preset_spec(args.name, **_overrides(args, _NAMED | {"trace_path"}))
    _emit(run_monte_carlo(spec, workers=args.workers), spec, args)


def _cmd_trace_info(args):
    trace = load_trace(args.path, args.block_size)
    print(json.dumps(trace.summary(), indent=2))


def _cmd_selftest(args):
    from .oracles import run_selftest

    failed = False
    for name, (count, mismatches) in run_selftest(args.seed, args.scale).items():
        status = "PASS" if mismatches == 0 else "FAIL"
        failed |= mismatches > 0
        print(f"{status} {name}: {mismatches} mismatches over {count} instances")
    if failed:
        raise InvariantViolation("oracle mismatch")


COMMANDS = {"run": _cmd_run, "preset": _cmd_preset, "trace-info": _cmd_trace_info,
            "selftest": _cmd_selftest}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.verb](args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, IdncError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
