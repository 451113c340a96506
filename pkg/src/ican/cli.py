"""Command-line entry point: ``ican <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 when ``fit``
finds no CAN model (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import io
from .algorithm import Decision, DeterministicRelationError, IcanConfig, run_ican
from .data import generate
from .dependence import DegenerateSampleError, hsic_pvalue

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NO_FIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ican", description="Confounder detection with additive noise models.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="run ICAN on a two-column CSV")
    f.add_argument("csv")
    f.add_argument("--alpha", type=float, default=0.05)
    f.add_argument("--max-iters", type=_positive_int, default=10)
    f.add_argument("--budget", type=_positive_int, default=5000)
    f.add_argument("--ratio-low", type=float, default=0.2)
    f.add_argument("--ratio-high", type=float, default=5.0)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", help="JSON report path (default: stdout)")

    s = sub.add_parser("simulate", help="draw a synthetic data set")
    s.add_argument("--dataset", required=True, choices=["section3", "1", "2", "3"])
    s.add_argument("--n", type=_positive_int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--truth", help="also write latent values and noises here")

    h = sub.add_parser("hsic", help="HSIC independence test between the two columns")
    h.add_argument("csv")
    h.add_argument("--method", choices=["gamma", "perm"], default="gamma")
    h.add_argument("--perms", type=_positive_int, default=1000)
    h.add_argument("--seed", type=int, default=0)

    m = sub.add_parser("moments", help="noise moments from conditional moments")
    m.add_argument("--config", required=True)

    c = sub.add_parser("scaling-study", help="moment errors as the curve is scaled up")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True)
    return p


def _cmd_fit(args) -> int:
    try:
        config = IcanConfig(alpha=args.alpha, max_iterations=args.max_iters,
                            eval_budget=args.budget, ratio_low=args.ratio_low,
                            ratio_high=args.ratio_high, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_ican(io.load_csv(args.csv), config)
    report = io.ican_report(result)
    if args.out:
        io.write_json(args.out, report)
    else:
        print(json.dumps(report, indent=2))
    print(f"decision: {result.decision.value}  var_ratio: {result.var_ratio:.4g}  "
          f"p: {', '.join(f'{p:.3g}' for p in result.pvalues)}", file=sys.stderr)
    return EXIT_NO_FIT if result.decision is Decision.NO_CAN_FIT else EXIT_OK


def _cmd_simulate(args) -> int:
    sample = generate(args.dataset, args.n, args.seed)
    io.write_csv(args.out, sample)
    if args.truth:
        io.write_truth_csv(args.truth, sample)
    return EXIT_OK


def _cmd_hsic(args) -> int:
    sample = io.load_csv(args.csv)
    rep = hsic_pvalue(sample.x, sample.y, method=args.method, permutations=args.perms,
                      seed=args.seed)
    print(json.dumps({"hsic": rep.hsic, "p_value": rep.pvalue, "method": args.method,
                      "n": rep.n}, indent=2))
    return EXIT_OK


def _cmd_moments(args) -> int:
    from .moments import epsilon_probe, estimate_noise_moments

    study, cfg = io.load_study_config(args.config)
    order = int(cfg["order"])
    tx, ty = study.true_moments(order)
    rng = np.random.default_rng(cfg["seed"])
    out = {"order": order, "true": {"nx": tx.tolist(), "ny": ty.tolist()}, "cells": []}
    for ell in study.ell_values:
        x, y = study.sample(ell, int(cfg["samples_per_ell"]), rng)
        h = cfg["bandwidth"] if cfg["bandwidth"] is not None else 0.25 * float(study.r.std())
        est = estimate_noise_moments(x, y, lambda yy, e=ell: e * study.w(np.asarray(yy) / e),
                                     ell * np.asarray(study.y_points), order, bandwidth=h)
        eps = [epsilon_probe(study, order, yp, ell) for yp in study.y_points]
        out["cells"].append({"ell": ell, "nx": est.moments_nx.tolist(),
                             "ny": est.moments_ny.tolist(), "epsilon": eps})
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_scaling(args) -> int:
    from .moments import scaling_study

    study, cfg = io.load_study_config(args.config)
    rows = []
    for seed in range(int(cfg["seed"]), int(cfg["seed"]) + int(cfg["seeds"])):
        table = scaling_study(study, int(cfg["samples_per_ell"]), int(cfg["order"]), seed,
                              bandwidth=cfg["bandwidth"])
        rows.extend({"seed": seed, **r} for r in table.rows())
    io.write_rows(args.out, rows)
    return EXIT_OK


COMMANDS = {"fit": _cmd_fit, "simulate": _cmd_simulate, "hsic": _cmd_hsic,
            "moments": _cmd_moments, "scaling-study": _cmd_scaling}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ican: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (io.DataError, DeterministicRelationError, DegenerateSampleError, OSError,
            ValueError) as exc:
        print(f"ican: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
