#!/usr/bin/env python3
"""
Main entry point for Vertical Consensus Inference.
"""
import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from loguru import logger

# Add src to path
sys.path.append(str(Path(__file__).parent / "src"))

from src.core.config import (BarycenterConfig, ChainConfig, GaussianDpmConfig, LayoutKind,
                             MetricType, PoissonDpmConfig, ProjectionKind, ReportConfig,
                             ReportMode, RunConfig, SamplerKind, ShardLayoutConfig,
                             SupportKind, SupportStrategyConfig, WeightKind,
                             WeightSchemeConfig)
from src.core.exceptions import ConfigError, exit_code_for
from src.utils.helpers import save_yaml_config, write_json

GAUSSIAN_FLAGS = ("prior_mean", "mean_precision_scale", "shape", "rate")
POISSON_FLAGS = ("a", "b")


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = "logs/vci.log"):
    """Setup logging configuration."""
    logger.remove()

    logger.add(
        sys.stdout,
        level=log_level,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
    )

    if log_file:
        os.makedirs(os.path.dirname(log_file) or ".", exist_ok=True)
        logger.add(
            log_file,
            level=log_level,
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
            rotation="1 day",
            retention="30 days",
            compression="zip"
        )


def _parse_dims(text: Optional[str]) -> Optional[List[List[int]]]:
    """'0,1;1,2' -> [[0, 1], [1, 2]]"""
    if not text:
        return None
    return [[int(v) for v in block.split(",") if v.strip()] for block in text.split(";")]


def _layout(args) -> ShardLayoutConfig:
    return ShardLayoutConfig(kind=LayoutKind(args.layout), n_shards=args.shards, dims=_parse_dims(args.dims))


def _scheme(args) -> WeightSchemeConfig:
    return WeightSchemeConfig(kind=WeightKind(args.scheme), a=args.a,
                              projection=ProjectionKind(args.projection), t=args.t,
                              temperature=args.temperature)


def cmd_split(args) -> int:
    from src.data.loaders import load_csv, save_csv, split

    shards = split(load_csv(args.data), _layout(args))
    for k, shard in enumerate(shards):
        path = Path(args.out) / f"shard_{k}.csv"
        save_csv(shard, path)
        logger.info(f"Wrote {path} ({shard.shape[0]}x{shard.shape[1]})")
    return 0


def cmd_sample(args) -> int:
    from src.core.pipeline import build_sampler
    from src.data.loaders import load_csv, write_partitions, write_posterior
    from src.partitions.posterior import EmpiricalPartitionPosterior

    chain = ChainConfig(total_iters=args.iters, burn_in=args.burn_in, thin=args.thin,
                        seed=args.seed, prior_only=args.prior_only)
    common = {"truncation": args.truncation, "concentration": args.concentration}
    gaussian = {name: getattr(args, name) for name in GAUSSIAN_FLAGS if getattr(args, name) is not None}
    poisson = {name: getattr(args, name) for name in POISSON_FLAGS if getattr(args, name) is not None}
    if SamplerKind(args.sampler) == SamplerKind.POISSON:
        if gaussian:
            raise ConfigError(f"Gaussian prior flags given to the Poisson sampler: {sorted(gaussian)}")
        model = PoissonDpmConfig(**common, **poisson)
    else:
        if poisson:
            raise ConfigError(f"Poisson prior flags given to the Gaussian sampler: {sorted(poisson)}")
        model = GaussianDpmConfig(**common, **gaussian)
    partitions = build_sampler(args.sampler, model, chain).sample(load_csv(args.data))
    write_partitions(partitions, args.samples_out)
    post = EmpiricalPartitionPosterior.from_samples(partitions)
    if args.posterior_out:
        write_posterior(post, args.posterior_out)
    logger.info(f"Kept {len(partitions)} samples, {len(post)} distinct partitions")
    return 0


def cmd_consensus(args) -> int:
    from src.data.loaders import read_posterior, write_posterior
    from src.transport.barycenter import consensus
    from src.utils.formatters import format_solver_diagnostics, format_vector, format_weights_summary
    from src.weights.consensus_weights import weight_record

    posts = [read_posterior(p) for p in args.posts]
    scheme = _scheme(args)
    eps = BarycenterConfig(epsilon=args.epsilon if len(args.epsilon) > 1 else args.epsilon[0])
    support = SupportStrategyConfig(kind=SupportKind(args.support), m=args.m, seed=args.support_seed)
    post, lam, diagnostics = consensus(posts, scheme, epsilons=eps.epsilons(len(posts)),
                                       support_strategy=support, metric=MetricType(args.metric),
                                       max_iter=args.max_iter, tol=args.tol,
                                       require_convergence=args.require_convergence)
    write_posterior(post, args.out)
    record = weight_record(posts, scheme)
    logger.info(format_weights_summary(record))
    if args.weights_out:
        write_json(record, args.weights_out)
    logger.info(f"lambda = {format_vector(lam)}; {format_solver_diagnostics(diagnostics.solver)}")
    return 0


def cmd_distance(args) -> int:
    from src.evaluation.report import wasserstein_distance

    plan = wasserstein_distance(args.a, args.b, args.epsilon, args.metric, return_plan=True)
    print(f"objective={plan.objective:.10g} transport_cost={plan.transport_cost:.10g} "
          f"entropy={plan.entropy:.10g}")
    return 0


def cmd_report(args) -> int:
    from src.evaluation.report import report_from_files

    config = ReportConfig(mode=ReportMode(args.mode), epsilon=args.epsilon,
                          range_threshold=args.range_threshold,
                          reference="partition" if args.mode == ReportMode.EXPECTED_VOI.value else "full",
                          reference_path=args.reference)
    entries = [(label, kind, path) for kind, label, path in args.entry]
    report = report_from_files(entries, args.reference, config, args.metric)
    report.write(args.out)
    print(report.to_text())
    return 0


def cmd_check_bound(args) -> int:
    from src.theory.bound_check import run_bound_suite
    from src.utils.formatters import format_bound_table

    frame = run_bound_suite(n=args.n, K=args.K, zetas=args.zeta, instances=args.instances,
                            seed=args.seed, metric=MetricType(args.metric),
                            use_shard_posteriors=args.shard_posteriors, n_jobs=args.jobs)
    print(format_bound_table(frame))
    if args.out:
        frame.to_csv(args.out, index=False)
    return 0 if bool(frame["holds"].all()) else 1


def cmd_run(args) -> int:
    from src.core.pipeline import run_pipeline

    config = RunConfig.from_file(args.config)
    updates = {}
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.output_dir:
        updates["output_dir"] = args.output_dir
    if args.seed is not None:
        updates["base_seed"] = args.seed
    if updates:
        config = RunConfig(**{**config.model_dump(), **updates})
    result = run_pipeline(config)
    print(result.report.to_text())
    return 0


def cmd_simulate(args) -> int:
    from src.data.fixtures import add_noise_dimensions, faithful_like, planted_counts
    from src.data.loaders import save_csv, write_partitions

    out = Path(args.out)
    if args.scenario == 1:
        data, truth = faithful_like(args.seed)
    elif args.scenario == 2:
        base, truth = faithful_like(args.seed)
        data = add_noise_dimensions(base, args.seed)
    else:
        data, truth = planted_counts(n=args.n, d=args.d, groups=args.groups, seed=args.seed)
    save_csv(data, out / "data.csv")
    write_partitions([truth], out / "truth.txt")
    logger.info(f"Scenario {args.scenario}: wrote {np.shape(data)} matrix and planted labels to {out}")
    return 0


def cmd_init_config(args) -> int:
    if save_yaml_config(RunConfig.default().to_dict(), args.path):
        logger.info(f"Created default configuration file: {args.path}")
        return 0
    return 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Vertical Consensus Inference for Bayesian random partitions")
    parser.add_argument("--log-level", "-l", default=os.getenv("VCI_LOG_LEVEL", "INFO"),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")
    parser.add_argument("--log-file", default="logs/vci.log", help="Log file ('' to disable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="Split a CSV into vertical shards")
    p.add_argument("--data", required=True)
    p.add_argument("--layout", default="contiguous", choices=[k.value for k in LayoutKind])
    p.add_argument("--shards", type=int)
    p.add_argument("--dims", help="Explicit shard columns, e.g. '0,1;1,2'")
    p.add_argument("--out", required=True, help="Output directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("sample", help="Run a DP-mixture Gibbs sampler on a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--sampler", default="gaussian", choices=[k.value for k in SamplerKind])
    p.add_argument("--truncation", type=int, default=20)
    p.add_argument("--concentration", type=float, default=1.0)
    p.add_argument("--prior-mean", type=float, help="Gaussian prior mean (default: data mean per dimension)")
    p.add_argument("--mean-precision-scale", type=float, help="Gaussian kappa0")
    p.add_argument("--shape", type=float, help="Gaussian precision Gamma shape")
    p.add_argument("--rate", type=float, help="Gaussian precision Gamma rate (default: data variance)")
    p.add_argument("--a", type=float, help="Poisson rate Gamma shape")
    p.add_argument("--b", type=float, help="Poisson rate Gamma rate")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prior-only", action="store_true", help="Drop the likelihood (validation mode)")
    p.add_argument("--samples-out", required=True)
    p.add_argument("--posterior-out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("consensus", help="Barycenter of shard posterior files")
    p.add_argument("--posts", nargs="+", required=True)
    p.add_argument("--scheme", default="uniform", choices=[k.value for k in WeightKind])
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--projection", default="power", choices=[k.value for k in ProjectionKind])
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, nargs="+", default=[0.05])
    p.add_argument("--support", default="union", choices=[k.value for k in SupportKind])
    p.add_argument("--m", type=int, default=500)
    p.add_argument("--support-seed", type=int, default=0)
    p.add_argument("--metric", default="voi", choices=[k.value for k in MetricType])
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--require-convergence", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--weights-out")
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("distance", help="Entropic Wasserstein distance between two posterior files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--metric", default="voi", choices=[k.value for k in MetricType])
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("report", help="Compare posterior files with a reference")
    p.add_argument("--entry", nargs=3, action="append", required=True,
                   metavar=("KIND", "LABEL", "PATH"),
                   help="kind is shard, full, mixture or barycenter")
    p.add_argument("--reference", required=True)
    p.add_argument("--mode", default="distance", choices=[k.value for k in ReportMode])
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--metric", default="voi", choices=[k.value for k in MetricType])
    p.add_argument("--range-threshold", type=int, default=4)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("check-bound", help="Verify the NELBO upper bound on random tiny models")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--zeta", type=float, nargs="+", default=[0.5, 1.0, 2.0, 5.0])
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", default="voi", choices=[k.value for k in MetricType])
    p.add_argument("--shard-posteriors", action="store_true",
                   help="Use exact shard posteriors and their barycenter as q")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="Optional CSV output")
    p.set_defaults(func=cmd_check_bound)

    p = sub.add_parser("run", help="Run the whole pipeline from a configuration file")
    p.add_argument("--config", "-c", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="Write a synthetic scenario dataset")
    p.add_argument("--scenario", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d", type=int, default=500)
    p.add_argument("--groups", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("init-config", help="Write the default run configuration")
    p.add_argument("--path", default="config/default.yaml")
    p.set_defaults(func=cmd_init_config)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main function."""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file or None)

    try:
        return args.func(args)
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed: {e}")
        return code


if __name__ == "__main__":
    sys.exit(main())
