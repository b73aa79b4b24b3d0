"""Command-line surface: fit, select, sample, evaluate, benchmark.

Exit codes: 0 success, 1 numerical failure, 2 usage or input error. Every
artifact embeds a JSON config echo so runs are reproducible byte-for-byte.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .basis import ThinPlateParams, build_cosine_basis
from .benchmark import BenchmarkConfig, run_benchmark, write_normalized_summary, write_results_csv
from .datasets import DATASETS, dataset_domain, load_dataset
from .domain import (
    BoxDomain,
    DomainError,
    ParseError,
    PointPattern,
    load_point_pattern,
    normalize,
    save_point_pattern,
    standard_domain,
)
from .evidence import SearchSpace, cosine_basis_family, ml2_search, write_candidate_table
from .fit import ConvergenceError, fit_mode, load_model, save_model
from .kernels import GaussianKernelParams, NystromConfig, gaussian_kernel_matrix, nystrom_basis
from .metrics import Quadrature, expected_log_likelihood, l2_error, test_log_likelihood
from .predict import integrated_mean_intensity, mean_intensity_fn, predict_grid, write_grid_csv
from .simulate import IntensityFn, make_toy_intensity, sample_poisson_thinning

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _parse_vector(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.split(",")])


def _load_input(args) -> PointPattern:
    if args.dataset:
        return load_dataset(args.dataset)
    if not args.data:
        raise UsageError("either --data or --dataset is required")
    path = Path(args.data)
    if not path.exists():
        raise UsageError(f"data file not found: {path}")
    if args.lower is None or args.upper is None:
        raise UsageError("--lower and --upper are required with --data")
    domain = BoxDomain(_parse_vector(args.lower), _parse_vector(args.upper))
    return load_point_pattern(path, domain)


def _config_echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func" and v is not None}


def _add_input_args(p):
    p.add_argument("--data", help="CSV point pattern")
    p.add_argument("--dataset", choices=sorted(DATASETS), help="bundled dataset")
    p.add_argument("--lower", help="comma-separated domain lower corner (with --data)")
    p.add_argument("--upper", help="comma-separated domain upper corner (with --data)")


def _make_basis(args, d: int):
    if args.method == "lbpp_cos":
        params = ThinPlateParams(a=args.a, b=args.b, m_order=args.m_order)
        return build_cosine_basis(d, args.n, params)
    if args.method == "lbpp_g":
        gp = GaussianKernelParams(gamma=args.gamma, lengthscale=args.lengthscale)
        basis = nystrom_basis(
            lambda X, Z: gaussian_kernel_matrix(X, Z, gp),
            standard_domain(d),
            NystromConfig(grid_points_per_dim=args.grid_size),
        )
        basis.meta["gaussian_params"] = gp
        return basis
    raise UsageError(f"method {args.method} requires fixed hyperparameters")


def cmd_fit(args) -> int:
    pattern = _load_input(args)
    data = normalize(pattern)
    basis = _make_basis(args, pattern.domain.d)
    model = fit_mode(basis, data)
    echo = _config_echo(args)
    save_model(model, args.out, config_echo=echo)
    summary = dict(model.log_marginal_parts)
    summary["total"] = (
        summary["data_term"]
        - 0.5 * summary["quadratic_term"]
        + 0.5 * (summary["v_term"] - summary["logdet_s"] + summary["constant"])
    )
    summary["integrated_mean_intensity"] = integrated_mean_intensity(model)
    summary["m"] = data.m
    print(json.dumps(summary))
    if args.emit_grid:
        grid = predict_grid(model, args.emit_grid)
        write_grid_csv(Path(args.out).with_suffix(".grid.csv"), grid, json.dumps(echo))
    return EXIT_OK


def cmd_select(args) -> int:
    pattern = _load_input(args)
    data = normalize(pattern)
    d = pattern.domain.d
    strategy = args.strategy.replace("-", "_")
    if args.method == "lbpp_cos":
        family = cosine_basis_family(d, args.n, m_order=args.m_order, tie_ab=args.tie_ab)
        if args.tie_ab:
            names, bounds = ("ab",), (_parse_bounds(args.ab_bounds),)
        else:
            names = ("a", "b")
            bounds = (_parse_bounds(args.a_bounds), _parse_bounds(args.b_bounds))
    else:
        raise UsageError("select currently supports --method lbpp_cos")
    space = SearchSpace(names, bounds, strategy=strategy, budget=args.budget)
    best, table = ml2_search(data, family, space)
    write_candidate_table(args.out, table, json.dumps(_config_echo(args)))
    print(json.dumps({"best": best, "candidates": len(table)}))
    return EXIT_OK


def _parse_bounds(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition(":")
    return float(lo), float(hi)


def cmd_sample(args) -> int:
    if args.toy_seed is not None:
        lam = make_toy_intensity(seed=args.toy_seed)
        domain = standard_domain(1)
    elif args.constant is not None:
        if args.lower is None or args.upper is None:
            raise UsageError("--lower and --upper required with --constant")
        domain = BoxDomain(_parse_vector(args.lower), _parse_vector(args.upper))
        c = args.constant
        lam = IntensityFn(
            eval=lambda x: np.full(np.atleast_2d(x).shape[0], c),
            upper_bound=c,
            descriptor=f"constant {c}",
        )
    else:
        raise UsageError("one of --toy-seed or --constant is required")
    pattern = sample_poisson_thinning(lam, domain, args.seed)
    save_point_pattern(args.out, pattern, header_comment=f"config: {json.dumps(_config_echo(args))}")
    print(json.dumps({"m": pattern.m, "descriptor": lam.descriptor}))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    d = model.basis.d
    q = Quadrature(standard_domain(d), args.quad or {1: 4096, 2: 256}.get(d, 32))
    est = mean_intensity_fn(model)
    out: dict = {"integrated_mean_intensity": integrated_mean_intensity(model)}
    if args.test:
        test_path = Path(args.test)
        if not test_path.exists():
            raise UsageError(f"test file not found: {test_path}")
        raw = load_point_pattern(test_path, model.data.original_domain)
        test_std = PointPattern(normalize(raw).pattern.points, standard_domain(d))
        # estimate is in standard coordinates; the likelihood of the original-unit
        # pattern differs by the constant m*log(jacobian)
        out["test_ll"] = test_log_likelihood(est, test_std, q) + raw.m * math.log(
            model.data.jacobian
        )
    if args.truth_toy_seed is not None:
        truth = make_toy_intensity(seed=args.truth_toy_seed)
        out["l2_error"] = l2_error(est, truth, q)
        out["expected_ll"] = expected_log_likelihood(truth, est, q)
    print(json.dumps(out))
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = BenchmarkConfig(
        scenarios=tuple(args.scenarios.split(",")),
        methods=tuple(args.methods.split(",")),
        basis_sizes=tuple(int(t) for t in args.basis_sizes.split(",")),
        replicates=args.replicates,
        seed=args.seed,
        quad_points_per_dim=args.quad or 0,
        ml2_budget=args.ml2_budget,
    )
    rows = run_benchmark(cfg)
    echo = json.dumps(_config_echo(args))
    write_results_csv(args.out, rows, echo)
    write_normalized_summary(str(args.out) + ".normalized.csv", rows, echo)
    failures = sum(1 for r in rows if r["note"])
    print(json.dumps({"cells": len(rows), "failures": failures}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lbpp", description="Bayesian point-process intensity estimation"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model with fixed hyperparameters")
    _add_input_args(p)
    p.add_argument("--method", choices=["lbpp_cos", "lbpp_g"], default="lbpp_cos")
    p.add_argument("--n", type=int, default=32, help="cosine frequencies per dimension")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--m-order", type=int, default=2)
    p.add_argument("--gamma", type=float, default=5.0)
    p.add_argument("--lengthscale", type=float, default=0.5)
    p.add_argument("--grid-size", type=int, default=64, help="spectral grid points per dimension")
    p.add_argument("--out", default="model.json")
    p.add_argument("--emit-grid", type=int, metavar="G", help="write a GxG predictive grid CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="ML-II hyperparameter search")
    _add_input_args(p)
    p.add_argument("--method", choices=["lbpp_cos"], default="lbpp_cos")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--m-order", type=int, default=2)
    p.add_argument("--tie-ab", action="store_true", help="search a single tied value a = b")
    p.add_argument("--ab-bounds", default="-2:4", help="log10 bounds lo:hi for tied a = b")
    p.add_argument("--a-bounds", default="-2:4")
    p.add_argument("--b-bounds", default="-2:4")
    p.add_argument("--strategy", choices=["grid", "nelder-mead"], default="grid")
    p.add_argument("--budget", type=int, default=9)
    p.add_argument("--out", default="candidates.csv")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("sample", help="sample an inhomogeneous Poisson pattern")
    p.add_argument("--toy-seed", type=int, help="synthetic GP-draw intensity seed")
    p.add_argument("--constant", type=float, help="homogeneous intensity value")
    p.add_argument("--lower")
    p.add_argument("--upper")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="sample.csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="evaluate a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--test", help="held-out CSV pattern (original units)")
    p.add_argument("--truth-toy-seed", type=int, help="compare against a synthetic intensity")
    p.add_argument("--quad", type=int, help="quadrature points per dimension")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="factorial benchmark run")
    p.add_argument("--scenarios", required=True, help="comma list, e.g. toy:0,data:redwood")
    p.add_argument("--methods", default="lbpp_cos")
    p.add_argument("--basis-sizes", default="16,32")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quad", type=int)
    p.add_argument("--ml2-budget", type=int, default=5)
    p.add_argument("--out", default="benchmark.csv")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ParseError, DomainError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}\ntrace: {exc.trace}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
