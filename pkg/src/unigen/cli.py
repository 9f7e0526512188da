"""Command-line front end: ``unigen sample|count|evaluate``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .counting import approx_count, exact_count
from .engine import DEFAULT_BSAT_TIMEOUT
from .errors import ContractViolation, CountingError, SolverTimeout, UnigenError
from .formula import SamplingSet, format_witness, read_dimacs
from .harness import emit_report, run_comparison
from .sampler import dump_state, iter_draws, load_state, presample

EXIT_OK, EXIT_USAGE, EXIT_TIMEOUT, EXIT_CONTRACT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sampling_set(text):
    try:
        return SamplingSet(tuple(int(t) for t in text.split(",") if t.strip()))
    except (ValueError, ContractViolation) as exc:
        raise argparse.ArgumentTypeError(f"bad sampling set {text!r}: {exc}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="unigen", description="Almost-uniform SAT witness sampling.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--kernel", choices=["auto", "compiled", "python"], default=None,
                   help="enumeration backend (default: compiled if built)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="draw witnesses")
    s.add_argument("cnf")
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--samples", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--sampling-set", type=_sampling_set,
                   help="comma-separated variables; overrides 'c ind' lines")
    s.add_argument("--bsat-timeout", type=float, default=DEFAULT_BSAT_TIMEOUT, metavar="SECS")
    s.add_argument("--state", help="presample state file, reused if present, written otherwise")
    s.add_argument("--workers", type=int, default=1)

    c = sub.add_parser("count", help="count witnesses projected on the sampling set")
    c.add_argument("cnf")
    c.add_argument("--exact", action="store_true")
    c.add_argument("--tolerance", type=float, default=0.8)
    c.add_argument("--confidence", type=float, default=0.8)
    c.add_argument("--seed", type=int)
    c.add_argument("--sampling-set", type=_sampling_set)
    c.add_argument("--bsat-timeout", type=float, default=DEFAULT_BSAT_TIMEOUT, metavar="SECS")

    e = sub.add_parser("evaluate", help="compare against an exactly uniform sampler")
    e.add_argument("cnf")
    e.add_argument("--epsilon", type=float, required=True)
    e.add_argument("--samples", type=int, required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--sampling-set", type=_sampling_set)
    e.add_argument("--out", required=True, metavar="DIR")
    e.add_argument("--workers", type=int, default=1)
    return p


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("UNIGEN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ContractViolation(f"UNIGEN_SEED must be an integer, got {env!r}")
    return None


def _load(args):
    f, s = read_dimacs(args.cnf)
    if args.sampling_set is not None:
        s = args.sampling_set
    return f, (s or SamplingSet.full(f)).check(f)


def cmd_sample(args, out) -> int:
    f, s = _load(args)
    rng = np.random.default_rng(_seed(args))
    state = None
    if args.state and os.path.exists(args.state):
        with open(args.state) as fh:
            state = load_state(fh.read(), f)
        if state.epsilon != args.epsilon or state.sampling_set != s:
            raise ContractViolation("state file was built for a different epsilon or sampling set")
    if state is None:
        state = presample(f, args.epsilon, s, rng, budget=args.bsat_timeout, kernel=args.kernel)
        if args.state:
            with open(args.state, "w") as fh:
                fh.write(dump_state(state))
    if args.samples < 1:
        return EXIT_OK
    for o in iter_draws(state, args.samples, rng, workers=args.workers,
                        budget=args.bsat_timeout, kernel=args.kernel):
        out.write((format_witness(o.witness) if o.ok else "FAIL") + "\n")
    return EXIT_OK


def cmd_count(args, out) -> int:
    f, s = _load(args)
    if args.exact:
        value = exact_count(f, s, kernel=args.kernel)
    else:
        rng = np.random.default_rng(_seed(args))
        value = approx_count(f, s, args.tolerance, args.confidence, rng,
                             budget=args.bsat_timeout, kernel=args.kernel).value
    out.write(f"{value}\n")
    return EXIT_OK


def cmd_evaluate(args, out) -> int:
    f, s = _load(args)
    seed = _seed(args)
    if seed is None:
        seed = np.random.SeedSequence().entropy
    hu, hi, report = run_comparison(f, s, args.epsilon, args.samples, seed,
                                    workers=args.workers, kernel=args.kernel)
    emit_report(report, hu, hi, args.out)
    out.write(report.summary())
    return EXIT_OK


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(name)s: %(message)s")
    handler = {"sample": cmd_sample, "count": cmd_count, "evaluate": cmd_evaluate}[args.command]
    try:
        return handler(args, out)
    except (SolverTimeout, CountingError) as exc:
        print(f"unigen: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except ContractViolation as exc:
        print(f"unigen: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (OSError, UnigenError) as exc:
        print(f"unigen: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
