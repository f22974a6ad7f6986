"""Command line interface.

Subcommands mirror the library: ``gen`` and ``transform`` produce
datasets, ``mvee`` solves the continuous problem, ``exact`` rounds and
polishes an existing solution, ``pipeline`` chains everything, and
``oracle`` brute-forces small instances.  Exit code 0 means converged,
2 means an iteration or swap limit was hit, and 1 signals an error.
Set ``OPTD_THREADS`` to cap the linear algebra thread pool.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from optdesign import __version__
from optdesign.colgen import ColGenConfig, run_column_generation
from optdesign.data import load_dataset, save_dataset, sinh_arcsinh_transform
from optdesign.errors import OptDesignError
from optdesign.exact import (
    LocalSearchConfig,
    bound_report,
    brute_force_exact,
    local_search,
    round_to_exact,
)
from optdesign.frankwolfe import FwConfig, fw_solve
from optdesign.pipeline import DatasetSpec, run_pipeline, save_result
from optdesign.rmp import RmpConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_LIMIT = 2


def _progress_printer(row: dict) -> None:
    print(json.dumps(row, sort_keys=True), file=sys.stderr)


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("colgen", "fw"), default="colgen")
    p.add_argument("--tol", type=float, default=None, help="stopping tolerance")
    p.add_argument("--n0", type=int, default=None, help="violators pulled per round")
    p.add_argument("--gaptol", type=float, default=1e-9, help="master solver gap")
    p.add_argument("--no-elimination", action="store_true")
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verbose", action="store_true")


def _build_configs(args):
    colgen_kwargs = {}
    fw_kwargs = {}
    if args.max_iter is not None:
        colgen_kwargs["max_outer"] = args.max_iter
        fw_kwargs["max_iter"] = args.max_iter
    colgen_cfg = ColGenConfig(
        n0=args.n0,
        stop_tol=args.tol if args.tol is not None else 1e-5,
        rmp=RmpConfig(gap_tol=args.gaptol),
        hp_elimination=not args.no_elimination,
        **colgen_kwargs,
    )
    fw_cfg = FwConfig(
        tol=args.tol,
        hp_check_every=0 if args.no_elimination else 500,
        **fw_kwargs,
    )
    return colgen_cfg, fw_cfg


def _cmd_gen(args) -> int:
    from optdesign.data import generate_mixture

    X = generate_mixture(args.n, args.m, args.seed)
    save_dataset(X, args.out)
    print(f"wrote {X.m} points in R^{X.n} to {args.out}")
    return EXIT_OK


def _cmd_transform(args) -> int:
    X = load_dataset(getattr(args, "in"))
    Y = sinh_arcsinh_transform(X, args.p)
    save_dataset(Y, args.out)
    print(f"wrote transformed dataset (p={args.p:g}) to {args.out}")
    return EXIT_OK


def _cmd_mvee(args) -> int:
    X = load_dataset(getattr(args, "in"))
    colgen_cfg, fw_cfg = _build_configs(args)
    progress = _progress_printer if args.verbose else None
    if args.method == "colgen":
        weights, _, report = run_column_generation(
            X, colgen_cfg, seed=args.seed, progress=progress
        )
    else:
        weights, _, report = fw_solve(X, fw_cfg, seed=args.seed, progress=progress)
    doc = {
        "dataset": getattr(args, "in"),
        "n": X.n,
        "m": X.m,
        "method": args.method,
        "weights": {
            "support": [int(i) for i in weights.support],
            "values": [float(v) for v in weights.values],
        },
        "report": report.to_dict(),
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK if report.converged else EXIT_LIMIT


def _cmd_exact(args) -> int:
    with open(getattr(args, "in")) as fh:
        doc = json.load(fh)
    X = load_dataset(doc["dataset"])
    from optdesign.core import DesignWeights

    weights = DesignWeights(
        np.asarray(doc["weights"]["support"], dtype=np.int64),
        np.asarray(doc["weights"]["values"], dtype=np.float64),
        X.m,
    )
    rounded = round_to_exact(weights, args.N, X, variant=args.round)
    cfg = LocalSearchConfig(variant=args.variant)
    search = local_search(X, weights.support, rounded, cfg)
    bounds = bound_report(
        X, weights, search.design, phi_rel=doc["report"]["objective"]
    )
    out_doc = {
        "dataset": doc["dataset"],
        "N": args.N,
        "counts": {str(k): v for k, v in sorted(search.design.counts.items())},
        "logdet": search.design.logdet,
        "swaps": search.swaps,
        "converged": search.converged,
        "bounds": bounds.to_dict(),
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(out_doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        json.dump(out_doc, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK if search.converged else EXIT_LIMIT


def _cmd_pipeline(args) -> int:
    with open(args.spec) as fh:
        spec = DatasetSpec.from_dict(json.load(fh))
    colgen_cfg, fw_cfg = _build_configs(args)
    progress = _progress_printer if args.verbose else None
    result = run_pipeline(
        spec,
        args.N,
        method=args.method,
        colgen_cfg=colgen_cfg,
        fw_cfg=fw_cfg,
        search_cfg=LocalSearchConfig(variant=args.variant),
        rounding=args.round,
        progress=progress,
    )
    if args.out:
        save_result(result, args.out)
    else:
        json.dump(result.to_dict(), sys.stdout, indent=2, sort_keys=True)
        print()
    converged = all(r.converged for r in result.reports)
    return EXIT_OK if converged else EXIT_LIMIT


def _cmd_oracle(args) -> int:
    X = load_dataset(getattr(args, "in"))
    candidates = np.arange(X.m)
    best_ld, counts = brute_force_exact(X, candidates, args.N)
    json.dump(
        {
            "logdet": best_ld,
            "counts": {str(k): v for k, v in sorted(counts.items())},
        },
        sys.stdout,
        indent=2,
        sort_keys=True,
    )
    print()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optdesign",
        description="Large-scale D-optimal design solvers and benchmarks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic mixture dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("transform", help="apply the sinh-arcsinh tail transform")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("mvee", help="solve the continuous design problem")
    p.add_argument("--in", required=True)
    p.add_argument("--out", default=None)
    _solver_args(p)
    p.set_defaults(func=_cmd_mvee)

    p = sub.add_parser("exact", help="round a solution and polish by exchange")
    p.add_argument("--in", required=True, help="JSON document written by mvee")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--variant", choices=("first", "best"), default="best")
    p.add_argument("--round", choices=("remainder", "topN"), default="remainder")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("pipeline", help="dataset to exact design in one go")
    p.add_argument("--spec", required=True, help="JSON file with a dataset spec")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--variant", choices=("first", "best"), default="best")
    p.add_argument("--round", choices=("remainder", "topN"), default="remainder")
    p.add_argument("--out", default=None)
    _solver_args(p)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("oracle", help="brute-force small exact instances")
    p.add_argument("--in", required=True, help="dataset file (CSV or binary)")
    p.add_argument("--N", type=int, required=True)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    limit = os.environ.get("OPTD_THREADS")
    try:
        if limit:
            try:
                from threadpoolctl import threadpool_limits
            except ImportError:
                return args.func(args)
            with threadpool_limits(limits=int(limit)):
                return args.func(args)
        return args.func(args)
    except OptDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
