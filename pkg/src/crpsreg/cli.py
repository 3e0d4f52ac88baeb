"""Command-line front end: scoring files, predicting conditional CDFs,
running rate experiments, and printing risk bounds."""

import argparse
import configparser
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import GPDParams, WeightFn, step_cdf_from_sample
from .regressors import (
    ClassParams,
    KernelConfig,
    KnnConfig,
    kernel_predict,
    knn_constant_cd,
    knn_predict,
    optimal_bandwidth,
    optimal_k,
    rate_constant_kernel,
    rate_constant_knn,
    upper_bound_kernel,
    upper_bound_knn,
    TrainingSet,
)
from .experiments import (
    ExperimentConfig,
    binary_smooth_model,
    gpd_linear_model,
    run_experiment,
)
from .scoring import crps, wcrps

SLOPE_TOLERANCE = 0.15


class UserError(Exception):
    """Invalid input or configuration; maps to exit code 2."""


def fmt(value):
    """Floating-point text with 17 significant digits (round-trip safe)."""
    return format(float(value), ".17g")


def _read_rows(path):
    """Non-empty, non-comment lines of a delimited text file, with their
    1-based line numbers."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UserError(f"cannot read {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rows.append((lineno, stripped))
    return rows


def _parse_floats(fields, path, lineno):
    try:
        return [float(f) for f in fields]
    except ValueError as exc:
        raise UserError(f"{path}:{lineno}: unparsable row") from exc


def _parse_forecast(row, path, lineno):
    fields = [f.strip() for f in row.split(",")]
    if fields and fields[0].lower() == "gpd":
        if len(fields) != 3:
            raise UserError(f"{path}:{lineno}: gpd rows need exactly xi and sigma")
        xi, sigma = _parse_floats(fields[1:], path, lineno)
        try:
            return GPDParams(xi, sigma)
        except ValueError as exc:
            raise UserError(f"{path}:{lineno}: {exc}") from exc
    members = _parse_floats(fields, path, lineno)
    return step_cdf_from_sample(members)


def _write_manifest(out_dir, command, config, input_paths, seed, started,
                    extra=None):
    hashes = {}
    for path in input_paths:
        hashes[str(path)] = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    config = {k: v for k, v in config.items() if not callable(v)}
    manifest = {
        "command": command,
        "config": config,
        "input_sha256": hashes,
        "master_seed": seed,
        "version": __version__,
        "duration_seconds": time.monotonic() - started,
    }
    if extra:
        manifest.update(extra)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_score(args, out_dir, started):
    forecasts = _read_rows(args.forecast_file)
    observations = _read_rows(args.obs_file)
    if len(forecasts) != len(observations):
        raise UserError(
            f"row-count mismatch: {len(forecasts)} forecasts vs "
            f"{len(observations)} observations")
    weight = None
    if args.threshold is not None:
        weight = WeightFn.threshold(args.threshold)
    header = "row,crps" + (",wcrps" if weight else "")
    print(header)
    crps_values, w_values = [], []
    for i, ((flineno, frow), (olineno, orow)) in enumerate(
            zip(forecasts, observations)):
        forecast = _parse_forecast(frow, args.forecast_file, flineno)
        y = _parse_floats([orow], args.obs_file, olineno)[0]
        value = crps(forecast, y)
        crps_values.append(value)
        cells = [str(i), fmt(value)]
        if weight:
            wv = wcrps(forecast, y, weight)
            w_values.append(wv)
            cells.append(fmt(wv))
        print(",".join(cells))
    mean_cells = ["mean", fmt(np.mean(crps_values))]
    if weight:
        mean_cells.append(fmt(np.mean(w_values)))
    print(",".join(mean_cells))
    _write_manifest(out_dir, "score", vars(args) | {"out": str(out_dir)},
                    [args.forecast_file, args.obs_file], args.seed, started)
    return 0


def _load_training(path):
    rows = _read_rows(path)
    if not rows:
        raise UserError(f"{path}: no data rows")
    xs, ys = [], []
    width = None
    for lineno, row in rows:
        values = _parse_floats(row.split(","), path, lineno)
        if len(values) < 2:
            raise UserError(f"{path}:{lineno}: need covariates and an outcome")
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise UserError(f"{path}:{lineno}: inconsistent column count")
        xs.append(values[:-1])
        ys.append(values[-1])
    try:
        return TrainingSet(np.array(xs), np.array(ys))
    except ValueError as exc:
        raise UserError(f"{path}: {exc}") from exc


def _load_queries(path, d):
    rows = _read_rows(path)
    queries = []
    for lineno, row in rows:
        values = _parse_floats(row.split(","), path, lineno)
        if len(values) != d:
            raise UserError(f"{path}:{lineno}: expected {d} covariates")
        if any(v < 0 or v > 1 for v in values):
            raise UserError(f"{path}:{lineno}: covariate outside [0, 1]")
        queries.append(values)
    return queries


def cmd_predict(args, out_dir, started):
    train = _load_training(args.train_file)
    queries = _load_queries(args.query_file, train.d)
    chosen = {}
    if args.method == "knn":
        if args.auto:
            cp = _class_params_from_args(args, train.d)
            k = optimal_k(train.n, cp)
        elif args.k is not None:
            k = args.k
        else:
            raise UserError("knn needs --k or --auto")
        if k > train.n:
            raise UserError("k exceeds sample size")
        chosen["k"] = k
        cfg = KnnConfig(k, tie_seed=args.seed or 0)
        predict = lambda x: knn_predict(train, x, cfg)
    else:
        if args.auto:
            cp = _class_params_from_args(args, train.d)
            bandwidth = optimal_bandwidth(train.n, cp)
        elif args.bandwidth is not None:
            bandwidth = args.bandwidth
        else:
            raise UserError("kernel needs --bandwidth or --auto")
        chosen["bandwidth"] = bandwidth
        cfg = KernelConfig(bandwidth)
        predict = lambda x: kernel_predict(train, x, cfg)
    for x in queries:
        cdf = predict(np.asarray(x))
        pairs = " ".join(f"{fmt(z)}:{fmt(p)}"
                         for z, p in zip(cdf.support, cdf.cum_probs))
        print(pairs)
    _write_manifest(out_dir, "predict", vars(args) | {"out": str(out_dir)},
                    [args.train_file, args.query_file], args.seed, started,
                    extra={"chosen": chosen})
    return 0


def _class_params_from_args(args, d):
    if None in (args.class_h, args.class_c, args.class_m):
        raise UserError("--auto requires --class-h, --class-C and --class-M")
    try:
        return ClassParams(args.class_h, args.class_c, args.class_m, d)
    except ValueError as exc:
        raise UserError(str(exc)) from exc


_CONFIG_SCHEMA = {
    "model": {"kind", "d", "level", "base", "amplitude"},
    "method": {"name", "tuning", "value"},
    "run": {"sample_sizes", "replications", "test_points", "master_seed"},
}


def _parse_experiment_config(path, seed_override):
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as exc:
        raise UserError(f"cannot parse {path}: {exc}") from exc
    for section in parser.sections():
        if section not in _CONFIG_SCHEMA:
            raise UserError(
                f"invalid config section [{section}]; valid sections: "
                + ", ".join(sorted(_CONFIG_SCHEMA)))
        for key in parser[section]:
            if key not in _CONFIG_SCHEMA[section]:
                raise UserError(
                    f"invalid config key {key!r} in [{section}]; valid keys: "
                    + ", ".join(sorted(_CONFIG_SCHEMA[section])))
    try:
        kind = parser.get("model", "kind", fallback="binary_smooth")
        d = parser.getint("model", "d", fallback=1)
        if kind == "binary_smooth":
            model = binary_smooth_model(
                d,
                level=parser.getfloat("model", "level", fallback=1.0),
                base=parser.getfloat("model", "base", fallback=0.5),
                amplitude=parser.getfloat("model", "amplitude", fallback=0.4))
        elif kind == "gpd_linear":
            model = gpd_linear_model(d)
        else:
            raise UserError(f"invalid model kind {kind!r}; valid kinds: "
                            "binary_smooth, gpd_linear")
        method = parser.get("method", "name", fallback="knn")
        tuning = parser.get("method", "tuning", fallback="optimal")
        value = parser.getfloat("method", "value", fallback=None)
        sizes = parser.get("run", "sample_sizes",
                           fallback="128,256,512,1024,2048,4096,8192")
        sample_sizes = tuple(int(s) for s in sizes.split(","))
        master_seed = parser.getint("run", "master_seed", fallback=0)
        if seed_override is not None:
            master_seed = seed_override
        return ExperimentConfig(
            model=model,
            method=method,
            tuning=tuning,
            fixed_value=value,
            sample_sizes=sample_sizes,
            replications=parser.getint("run", "replications", fallback=200),
            test_points=parser.getint("run", "test_points", fallback=64),
            master_seed=master_seed,
        )
    except (ValueError, configparser.Error) as exc:
        raise UserError(f"invalid config: {exc}") from exc


def cmd_experiment(args, out_dir, started):
    cfg = _parse_experiment_config(args.config_file, args.seed)
    result = run_experiment(cfg, n_jobs=args.threads)
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = ["n,replication,excess_risk"]
    for n, risks in zip(cfg.sample_sizes, result.risks):
        for rep, value in enumerate(risks):
            lines.append(f"{n},{rep},{fmt(value)}")
    (out_dir / "results.csv").write_text("\n".join(lines) + "\n",
                                         encoding="utf-8")

    lines = ["n,mean,se,bound"]
    for report in result.bounds:
        lines.append(f"{report.n},{fmt(report.estimate)},{fmt(report.se)},"
                     f"{fmt(report.bound)}")
    (out_dir / "summary.csv").write_text("\n".join(lines) + "\n",
                                         encoding="utf-8")

    fit = result.rate_fit
    lines = [f"slope = {fmt(fit.slope)}"]
    if fit.bootstrap_se is not None:
        lines.append(f"bootstrap_se = {fmt(fit.bootstrap_se)}")
    else:
        lines.append("bootstrap_se = n/a (needs more than one replication)")
    lines.append(f"intercept = {fmt(fit.intercept)}")
    lines.append(f"r_squared = {fmt(fit.r_squared)}")
    lines.append(f"target_slope = {fmt(result.target_slope)}")
    verdict = "pass" if abs(fit.slope - result.target_slope) <= SLOPE_TOLERANCE \
        else "fail"
    lines.append(f"verdict = {verdict}")
    (out_dir / "ratefit.txt").write_text("\n".join(lines) + "\n",
                                         encoding="utf-8")

    print(f"slope {fmt(fit.slope)} target {fmt(result.target_slope)} "
          f"verdict {verdict}")
    _write_manifest(out_dir, "experiment",
                    {"config_file": str(args.config_file),
                     "threads": args.threads, "out": str(out_dir)},
                    [args.config_file], cfg.master_seed, started,
                    extra={"tuning_used": list(result.tuning_used)})
    return 0


def cmd_bounds(args, out_dir, started):
    try:
        cp = ClassParams(args.class_h, args.class_c, args.class_m, args.d)
    except ValueError as exc:
        raise UserError(str(exc)) from exc
    if args.k is None and args.bandwidth is None:
        raise UserError("need --k and/or --bandwidth")
    if args.k is not None:
        try:
            bound = upper_bound_knn(args.n, args.k, cp)
        except ValueError as exc:
            raise UserError(str(exc)) from exc
        print(f"knn_bound = {fmt(bound)}")
        print(f"knn_rate_constant = {fmt(rate_constant_knn(cp))}")
        if args.d >= 2:
            print(f"c_d = {fmt(knn_constant_cd(args.d))}")
    if args.bandwidth is not None:
        try:
            bound = upper_bound_kernel(args.n, args.bandwidth, cp)
        except ValueError as exc:
            raise UserError(str(exc)) from exc
        print(f"kernel_bound = {fmt(bound)}")
        print(f"kernel_rate_constant = {fmt(rate_constant_kernel(args.n, cp))}")
    _write_manifest(out_dir, "bounds", vars(args) | {"out": str(out_dir)},
                    [], args.seed, started)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides config where relevant)")
    common.add_argument("--out", default=".",
                        help="output directory for result files and manifest")
    common.add_argument("--threads", type=int, default=1,
                        help="worker count for experiments; does not change results")

    parser = argparse.ArgumentParser(
        prog="crpsreg",
        description="CRPS scoring and distributional regression experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common],
                       help="CRPS of forecasts against observations")
    p.add_argument("forecast_file")
    p.add_argument("obs_file")
    p.add_argument("--threshold", type=float, default=None,
                   help="also report the threshold-weighted CRPS")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("predict", parents=[common],
                       help="conditional CDFs at query points")
    p.add_argument("train_file")
    p.add_argument("query_file")
    p.add_argument("--method", choices=("knn", "kernel"), required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--auto", action="store_true",
                   help="tune k or bandwidth from the class parameters")
    p.add_argument("--class-h", dest="class_h", type=float, default=None)
    p.add_argument("--class-C", dest="class_c", type=float, default=None)
    p.add_argument("--class-M", dest="class_m", type=float, default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("experiment", parents=[common],
                       help="Monte Carlo convergence-rate sweep")
    p.add_argument("config_file")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bounds", parents=[common],
                       help="print risk bounds and tuning constants")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--class-h", dest="class_h", type=float, required=True)
    p.add_argument("--class-C", dest="class_c", type=float, required=True)
    p.add_argument("--class-M", dest="class_m", type=float, required=True)
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        return args.func(args, Path(args.out), started)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
