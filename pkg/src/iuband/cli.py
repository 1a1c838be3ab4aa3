"""Command line entry point: ``iuband {coverage,quantiles,band,truth,network-params}``."""

import argparse
import logging
import sys

from .band import build_classic_ks_band, build_inflated_band, extract_quantile_region, output_ecdf
from .covariance import SubsampleConfig, check_budget_rates, estimate_covariance
from .empirical import save_ecdf, uniform_grid
from .harness import (
    ALG1,
    CENTER,
    DATA,
    DEFAULT_GRIDS,
    DEFAULT_RATIOS,
    LIMIT,
    ExperimentConfig,
    build_truth_proxy,
    generate_data,
    run_coverage_experiment,
    run_quantile_experiment,
    stream,
)
from .models import InputDataset, builtin_model


def _experiment(args, runner):
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    report = runner(config, threads=args.threads, cache_dir=args.cache_dir, allow_long=args.long)
    report.to_csv(args.out or "/dev/stdout")
    return 0


def _band(args):
    model = builtin_model(args.scenario)
    lo, hi, k = args.grid or DEFAULT_GRIDS.get(args.scenario, (0.0, 1.0, 100))
    grid = uniform_grid(float(lo), float(hi), int(k))
    if args.data_dir:
        data = InputDataset.load(args.data_dir, model.m)
    else:
        ratios = DEFAULT_RATIOS.get(args.scenario, (1.0,) * model.m)
        sizes = tuple(int(round(args.min_n * r / min(ratios))) for r in ratios)
        data = generate_data(args.scenario, sizes, stream(args.seed, 0, DATA))
    R = args.R or min(data.sizes)
    center = output_ecdf(model, data, R, stream(args.seed, 0, CENTER))
    if args.method == "classic_ks":
        band = build_classic_ks_band(center, R, args.alpha)
    else:
        config = SubsampleConfig(args.theta, args.N // args.R_s, args.R_s)
        for msg in check_budget_rates(config, data):
            print(f"warning: {msg}", file=sys.stderr)
        cov = estimate_covariance(model, data, config, grid, stream(args.seed, 0, ALG1, 0))
        if args.cov_out:
            cov.to_csv(args.cov_out)
        band = build_inflated_band(
            model, data, R, cov, grid, args.alpha, args.R_q, stream(args.seed, 0, LIMIT, 0),
            center=center, method="bootstrap_full" if args.theta == 1 else "inflated",
        )
    band.metadata["seed"] = args.seed
    band.to_csv(args.out)
    if args.levels:
        region = extract_quantile_region(band, args.levels)
        region.to_csv(args.out + ".quantiles.csv")
    print(f"{band.method} halfwidth={band.halfwidth:.6g} -> {args.out}")
    return 0


def _truth(args):
    proxy = build_truth_proxy(args.scenario, args.runs, args.seed, args.cache_dir)
    if args.out:
        save_ecdf(proxy, args.out)
    print(f"truth proxy {args.scenario}: {proxy.count} runs, "
          f"min={proxy.samples[0]:.6g} max={proxy.samples[-1]:.6g}")
    return 0


def _network_params(args):
    from .network import export_parameters

    export_parameters(args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="iuband", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    experiments = (("coverage", run_coverage_experiment), ("quantiles", run_quantile_experiment))
    for name, runner in experiments:
        p = sub.add_parser(name, help=f"run the {name} experiment from a config file")
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int)
        p.add_argument("--cache-dir")
        p.add_argument("--long", action="store_true", help="allow long-running scenarios")
        p.set_defaults(func=lambda a, runner=runner: _experiment(a, runner))

    p = sub.add_parser("band", help="build one band")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("inflated", "classic_ks"), default="inflated")
    p.add_argument("--data-dir", help="directory with input_<i>.txt files")
    p.add_argument("--min-n", type=int, default=500)
    p.add_argument("--theta", type=float, default=0.03)
    p.add_argument("--R_s", type=int, default=30)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--R", type=int)
    p.add_argument("--R_q", type=int, default=10_000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--grid", type=float, nargs=3, metavar=("LO", "HI", "K"))
    p.add_argument("--levels", type=float, nargs="*")
    p.add_argument("--cov-out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_band)

    p = sub.add_parser("truth", help="build (and cache) the truth proxy ECDF")
    p.add_argument("--scenario", required=True)
    p.add_argument("--runs", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache-dir")
    p.add_argument("--out")
    p.set_defaults(func=_truth)

    p = sub.add_parser("network-params", help="export the network parameter table")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_network_params)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
