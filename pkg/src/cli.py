"""Command-line entry point: bound reports, fidelity and kappa queries, sweeps, verification suites."""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from settings import configure_logging, default_solver_settings, ensure_dir
from src import bounds, channels
from src.errors import ChannelError, ConfigError, ModelError, NonMonotoneError, QcapError, SolverError
from src.sdp_models import CodeClass, fidelity, kappa

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPUTATION = 2
EXIT_VERIFY = 3

CHANNEL_NAMES = ("identity", "erasure", "werner", "nr", "random")
CHAIN_LINE = "log2(kappa_pptp) <= Q_Gamma <= Q_Theta"
PASS, FAIL = "✅", "❌"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(parser):
    parser.add_argument("--verbose", action="store_true", help="DEBUG logging on stderr")
    parser.add_argument("--out-file", help="write the result here instead of stdout")
    parser.add_argument("--tol-gap", type=float, help="solver gap/feasibility tolerance")
    parser.add_argument("--max-iter", type=int, help="solver iteration cap")
    parser.add_argument("--seed", type=int, default=42, help="seed for random channels and suites")


def _channel_args(parser):
    parser.add_argument("--channel", help=f"built-in channel: {', '.join(CHANNEL_NAMES)}")
    parser.add_argument("--channel-file", help="channel JSON file (e.g. a mixed-unitary channel)")
    parser.add_argument("--dim", type=int, default=2, help="input dimension of identity/erasure/werner/random")
    parser.add_argument("--p", type=float, default=0.5, help="erasure probability")
    parser.add_argument("--r", type=float, default=0.0, help="nr channel parameter in [0, 0.5]")
    parser.add_argument("--rank", type=int, default=2, help="Kraus rank of the random channel")


def _code(value):
    try:
        return CodeClass(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"code must be one of {[c.value for c in CodeClass]}")


def build_parser():
    parser = _Parser(prog="qcap", description="SDP bounds on quantum channel capacities")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("bound", help="report of capacity bounds for one channel")
    _channel_args(p)
    p.add_argument("--bounds", default="qGamma,qTheta,kappaPPTp", help=f"comma list of {', '.join(bounds.BOUND_IDS)}")
    p.add_argument("--out", choices=("text", "json"), default="text")
    _common(p)

    p = sub.add_parser("fidelity", help="optimal channel fidelity for a code dimension")
    _channel_args(p)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--code", type=_code, default=CodeClass.PPTP)
    p.add_argument("--dual", action="store_true", help="also solve the dual SDP")
    _common(p)

    p = sub.add_parser("kappa", help="zero-error kappa of a channel")
    _channel_args(p)
    p.add_argument("--code", type=_code, default=CodeClass.PPTP)
    p.add_argument("--tol", type=float, default=1e-4, help="bisection bracket width")
    _common(p)

    p = sub.add_parser("sweep", help="bounds over a channel family")
    p.add_argument("--family", default="nr", choices=bounds.FAMILIES)
    p.add_argument("--from", dest="start", type=float, default=0.0)
    p.add_argument("--to", dest="stop", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--bounds", default="qGamma,qTheta")
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    p.add_argument("--freeze", metavar="NAME", help="also write the rows to data/golden/NAME.csv")
    _common(p)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suites", default=",".join(bounds.SUITES), help=f"comma list of {', '.join(bounds.SUITES)}")
    p.add_argument("--quick", action="store_true", help="fewer random channels per suite")
    _common(p)

    p = sub.add_parser("erasure-dim", help="Q_Gamma of the 50%% erasure channel against a target value")
    p.add_argument("--dims", default="2,3,4")
    p.add_argument("--target", type=float, default=1.123)
    p.add_argument("--match-tol", type=float, default=0.01)
    _common(p)
    return parser


def load_channel(args):
    if bool(args.channel) == bool(args.channel_file):
        raise UsageError("give exactly one of --channel or --channel-file")
    if args.channel_file:
        return channels.load_channel(args.channel_file)
    name = args.channel
    if name == "identity":
        return channels.identity_channel(args.dim)
    if name == "erasure":
        return channels.erasure_channel(args.dim, args.p)
    if name == "werner":
        return channels.werner_holevo(args.dim)
    if name == "nr":
        return channels.nr_channel(args.r)
    if name == "random":
        return channels.random_channel(args.dim, args.dim, args.rank, args.seed)
    raise UsageError(f"unknown channel {name!r}; available: {', '.join(CHANNEL_NAMES)} (or --channel-file)")


def _emit(text, args):
    if args.out_file:
        path = Path(args.out_file)
        ensure_dir(path.parent)
        path.write_text(text)
        print(f"{PASS} wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _cmd_bound(args, settings):
    ch = load_channel(args)
    requested = bounds.parse_ids(args.bounds)
    rep = bounds.report(ch, requested, settings)
    for ident, seconds in rep.wall_times.items():
        logger.info("%s: %s took %.2fs", ch.name, ident, seconds)
    if args.out == "json":
        text = json.dumps(rep.to_dict(timing=False), indent=2) + "\n"
    else:
        lines = [f"channel {ch.name} ({ch.dim_in} -> {ch.dim_out})"]
        for ident in rep.requested:
            if ident in rep.values:
                lines.append(f"{ident:<22}{rep.values[ident]:.10f}")
            else:
                lines.append(f"{ident:<22}{FAIL} {rep.errors[ident]}")
        if rep.checks:
            chain_ok = all(c.passed for c in rep.checks)
            lines.append(f"{CHAIN_LINE}  {PASS if chain_ok else FAIL}")
            for c in rep.checks:
                lines.append(f"  {c.name}: {c.lhs:.8f} vs {c.rhs:.8f} {PASS if c.passed else FAIL}")
        text = "\n".join(lines) + "\n"
    _emit(text, args)
    if rep.errors:
        print(f"{FAIL} failed bounds: {', '.join(rep.errors)}", file=sys.stderr)
        return EXIT_COMPUTATION
    return EXIT_OK


def _cmd_fidelity(args, settings):
    ch = load_channel(args)
    if args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    res = fidelity(ch, args.k, args.code, side="both" if args.dual else "primal", settings=settings)
    lines = [f"F_{args.code.value}({ch.name}, k={args.k:g}) = {res.value:.10f}"]
    if args.dual:
        lines.append(f"dual = {res.dual_value:.10f}")
    _emit("\n".join(lines) + "\n", args)
    return EXIT_OK


def _cmd_kappa(args, settings):
    ch = load_channel(args)
    if not args.tol > 0:
        raise UsageError(f"--tol must be positive, got {args.tol}")
    res = kappa(ch, args.code, tol_k=args.tol, settings=settings)
    lo, hi = res.bracket
    text = (
        f"kappa_{args.code.value}({ch.name}) = {res.kappa:.6f} in [{lo:.6f}, {hi:.6f}]\n"
        f"one-shot zero-error = {res.one_shot_zero_error}\n"
    )
    _emit(text, args)
    return EXIT_OK


def _cmd_sweep(args, settings):
    if args.steps < 1:
        raise UsageError(f"--steps must be >= 1, got {args.steps}")
    grid = np.linspace(args.start, args.stop, args.steps)
    rows = bounds.sweep(args.family, grid, bounds.parse_ids(args.bounds), settings)
    if args.out == "json":
        text = json.dumps([{"param": r.parameter, **r.values} for r in rows], indent=2) + "\n"
    else:
        text = bounds.sweep_csv_text(rows)
    _emit(text, args)
    if args.freeze:
        path = bounds.freeze_golden(rows, args.freeze)
        print(f"{PASS} froze {path}", file=sys.stderr)
    return EXIT_OK


def _cmd_verify(args, settings):
    results = bounds.verify_suite(bounds.parse_suites(args.suites), args.seed, args.quick, settings)
    lines = []
    for name, res in results.items():
        lines.append(f"{PASS if res.passed else FAIL} {name}: {len(res.cases)} cases, margin {res.margin:.3e}")
        for case in res.cases:
            if not case.passed:
                lines.append(f"    {FAIL} {case.name}: {case.detail}")
    _emit("\n".join(lines) + "\n", args)
    return EXIT_OK if all(r.passed for r in results.values()) else EXIT_VERIFY


def _cmd_erasure_dim(args, settings):
    try:
        dims = tuple(int(d) for d in args.dims.split(","))
    except ValueError:
        raise UsageError(f"--dims must be a comma list of integers, got {args.dims!r}")
    res = bounds.erasure_dimension_check(dims, args.target, args.match_tol, settings=settings)
    lines = [f"d={d}  Q_Gamma={v:.10f}  {PASS if d in res.matches else FAIL}" for d, v in res.values.items()]
    matches = ", ".join(str(d) for d in res.matches) or "none"
    lines.append(f"target {res.target:g} +- {res.tol:g}: matching dimensions {matches}")
    lines.append(f"implied dimension {res.implied_dimension:.4f}")
    _emit("\n".join(lines) + "\n", args)
    return EXIT_OK


_COMMANDS = {
    "bound": _cmd_bound,
    "fidelity": _cmd_fidelity,
    "kappa": _cmd_kappa,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "erasure-dim": _cmd_erasure_dim,
}


def run(argv=None):
    """Parse argv, run the subcommand and return the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    try:
        configure_logging(args.verbose)
        settings = default_solver_settings(args.tol_gap, args.max_iter)
        return _COMMANDS[args.command](args, settings)
    except (SolverError, ModelError, NonMonotoneError) as e:
        print(f"{FAIL} {args.command}: {e}", file=sys.stderr)
        return EXIT_COMPUTATION
    except (UsageError, ChannelError, ConfigError, QcapError, ValueError, OSError) as e:
        print(f"{FAIL} {e}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
