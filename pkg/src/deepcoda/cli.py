"""Command-line surface: simulate, train, benchmark, explain, baseline.

Dataset files are CSV with a header row: first column ``sample_id``, last
column ``label`` (0/1), everything in between a nonnegative numeric
abundance. Zeros are replaced at ingestion (multiplicative imputation,
``--delta-fraction`` controls the size) so downstream log transforms are
defined. Exit codes: 0 success, 2 usage or validation error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from .baselines import (
    TRANSFORMS,
    apply_transform,
    cv_select_lambda,
    lasso_logistic_fit,
    scaled_magnitudes,
)
from .coda import CompositionMatrix, replace_zeros
from .evaluate import (
    LabeledDataset,
    benchmark,
    grid_search,
    make_deepcoda_method,
    make_lasso_method,
    results_to_csv,
    standardize_scores,
)
from .explain import contrast_membership, explain_sample, render_report, weight_contrast_correlation
from .model import load_params, save_params
from .simulate import gen_cmyc, gen_toy
from .train import TrainConfig, TrainingDivergedError, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

_CONFIG_TYPES = {
    "n_bottlenecks": int,
    "lambda_c": float,
    "lambda_s": float,
    "learning_rate": float,
    "epochs": int,
    "seed": int,
    "head": str,
    "adam_beta1": float,
    "adam_beta2": float,
    "adam_eps": float,
}


def read_dataset_csv(path):
    """Parse a dataset file; returns (sample_ids, feature_names, values, labels)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty dataset file")
    header = rows[0]
    if len(header) < 4:
        raise ValueError(f"{path}: need sample_id, at least two features, and label")
    if header[0] != "sample_id" or header[-1] != "label":
        raise ValueError(f"{path}: header must start with sample_id and end with label")
    feature_names = header[1:-1]
    sample_ids: list[str] = []
    values: list[list[float]] = []
    labels: list[int] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{line_no}: expected {len(header)} fields")
        sample_ids.append(row[0])
        try:
            feats = [float(tok) for tok in row[1:-1]]
        except ValueError as exc:
            raise ValueError(f"{path}:{line_no}: non-numeric feature value") from exc
        if not all(math.isfinite(v) for v in feats):
            raise ValueError(f"{path}:{line_no}: non-finite feature value")
        if any(v < 0 for v in feats):
            raise ValueError(f"{path}:{line_no}: negative abundance")
        if row[-1] not in ("0", "1"):
            raise ValueError(f"{path}:{line_no}: label must be 0 or 1")
        values.append(feats)
        labels.append(int(row[-1]))
    if not values:
        raise ValueError(f"{path}: no data rows")
    return sample_ids, feature_names, np.array(values), np.array(labels, dtype=int)


def load_dataset(path, delta_fraction: float = 0.5):
    """Read a dataset file into a strictly positive CompositionMatrix + labels."""
    sample_ids, feature_names, values, labels = read_dataset_csv(path)
    kind = "relative" if np.all(np.abs(values.sum(axis=1) - 1.0) <= 1e-9) else "absolute"
    matrix = CompositionMatrix(values, sample_ids, feature_names, kind)
    if (values == 0).any():
        matrix = replace_zeros(matrix, delta_fraction)
    return matrix, labels


def write_dataset_csv(path, matrix: CompositionMatrix, labels) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", *matrix.feature_names, "label"])
        for i, sid in enumerate(matrix.sample_ids):
            row = [sid] + [f"{v:.17g}" for v in matrix.values[i]] + [str(int(labels[i]))]
            writer.writerow(row)


def parse_train_config(text: str) -> TrainConfig:
    """Parse flat ``key = value`` lines (# comments); unknown keys are rejected."""
    kwargs = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_TYPES:
            raise ValueError(f"config line {line_no}: unknown key {key!r}")
        if key in kwargs:
            raise ValueError(f"config line {line_no}: duplicate key {key!r}")
        try:
            kwargs[key] = _CONFIG_TYPES[key](value)
        except ValueError as exc:
            raise ValueError(f"config line {line_no}: bad value for {key!r}") from exc
    return TrainConfig(**kwargs)


def cmd_simulate(args) -> int:
    generator = gen_toy if args.kind == "toy" else gen_cmyc
    dataset = generator(args.n, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(out_dir / "absolute.csv", dataset.absolute, dataset.labels)
    write_dataset_csv(out_dir / "relative.csv", dataset.relative, dataset.labels)
    print(f"wrote {out_dir / 'absolute.csv'} and {out_dir / 'relative.csv'}")
    return EXIT_OK


def cmd_train(args) -> int:
    matrix, labels = load_dataset(args.data, args.delta_fraction)
    if args.config:
        cfg = parse_train_config(Path(args.config).read_text(encoding="utf-8"))
    else:
        cfg = TrainConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    report = train(matrix.values, labels, cfg)
    save_params(report.params, args.out)
    report_path = f"{args.out}.report.csv"
    with open(report_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["record", "index", "value"])
        for epoch, value in enumerate(report.loss_history):
            writer.writerow(["loss", str(epoch), f"{value:.17g}"])
        for b, value in enumerate(report.final_constraint_residuals):
            writer.writerow(["constraint_residual", str(b), f"{value:.17g}"])
    print(f"final loss: {report.loss_history[-1]:.17g}")
    for b, value in enumerate(report.final_constraint_residuals):
        print(f"constraint residual {b}: {value:.17g}")
    print(f"wrote {args.out} and {report_path}")
    return EXIT_OK


_METHOD_BUILDERS = {
    "deepcoda": lambda args: make_deepcoda_method(
        n_bottlenecks=args.bottlenecks,
        lambda_s=args.lambda_s,
        head="self_explain",
        epochs=args.epochs,
        name="deepcoda",
    ),
    "deepcoda-linear": lambda args: make_deepcoda_method(
        n_bottlenecks=args.bottlenecks,
        lambda_s=args.lambda_s,
        head="linear",
        epochs=args.epochs,
        name="deepcoda-linear",
    ),
    "lasso": lambda args: make_lasso_method("none"),
    "lasso-clr": lambda args: make_lasso_method("clr"),
}


def cmd_benchmark(args) -> int:
    matrix, labels = load_dataset(args.data, args.delta_fraction)
    dataset = LabeledDataset(Path(args.data).stem, matrix.values, labels)
    if args.grid:
        results = grid_search(
            dataset, n_splits=args.splits, base_seed=args.seed, epochs=args.epochs
        )
    else:
        methods = []
        for name in args.methods.split(","):
            name = name.strip()
            if name not in _METHOD_BUILDERS:
                raise ValueError(
                    f"unknown method {name!r}; choose from {sorted(_METHOD_BUILDERS)}"
                )
            methods.append(_METHOD_BUILDERS[name](args))
        results = benchmark(dataset, methods, n_splits=args.splits, base_seed=args.seed)
    results = standardize_scores(results)
    Path(args.out).write_text(results_to_csv(results), encoding="utf-8")
    print(f"wrote {args.out} ({len(results)} rows)")
    return EXIT_OK


def cmd_explain(args) -> int:
    params = load_params(args.model)
    if params.head != "self_explain":
        raise ValueError("model uses the linear head; explanations need self_explain")
    matrix, _labels = load_dataset(args.data, args.delta_fraction)
    d, n_bottlenecks, _ = params.dims
    if matrix.n_features != d:
        raise ValueError(f"model expects {d} features, data has {matrix.n_features}")
    explanations = [
        explain_sample(params, matrix.values[i], matrix.sample_ids[i])
        for i in range(matrix.n_samples)
    ]
    memberships = [
        contrast_membership(params, b, matrix.feature_names)
        for b in range(n_bottlenecks)
    ]
    w_matrix = np.array([e.w for e in explanations])
    z_matrix = np.array([e.z for e in explanations])
    correlations = None
    if matrix.n_samples > n_bottlenecks:
        correlations = weight_contrast_correlation(w_matrix, z_matrix)
    bundle = render_report(explanations, memberships, correlations)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "explanations.csv").write_text(bundle.explanations_csv, encoding="utf-8")
    (out_dir / "memberships.csv").write_text(bundle.memberships_csv, encoding="utf-8")
    (out_dir / "correlations.csv").write_text(bundle.correlations_csv, encoding="utf-8")
    (out_dir / "summary.txt").write_text(bundle.summary, encoding="utf-8")
    print(bundle.summary, end="")
    print(f"wrote report files to {out_dir}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    matrix, labels = load_dataset(args.data, args.delta_fraction)
    features = apply_transform(matrix, args.transform)
    lam = cv_select_lambda(features, labels, seed=args.seed)
    model = lasso_logistic_fit(features, labels, lam, transform=args.transform)
    scaled = scaled_magnitudes(model.coef)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "coefficient", "scaled_magnitude"])
        for name, coef, mag in zip(matrix.feature_names, model.coef, scaled):
            writer.writerow([name, f"{coef:.17g}", f"{mag:.17g}"])
        writer.writerow(["(intercept)", f"{model.intercept:.17g}", ""])
    print(f"selected lambda: {lam:.17g}")
    print(f"intercept: {model.intercept:.17g}")
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepcoda",
        description="Learn and inspect log-contrast models for compositional data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    p_sim.add_argument("kind", choices=("toy", "cmyc"))
    p_sim.add_argument("--n", type=int, default=1000, help="number of samples")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_train = sub.add_parser("train", help="train a model on a dataset CSV")
    p_train.add_argument("data")
    p_train.add_argument("--config", help="flat key = value config file")
    p_train.add_argument("--seed", type=int, default=None, help="override config seed")
    p_train.add_argument("--out", required=True, help="model output path")
    p_train.add_argument("--delta-fraction", type=float, default=0.5)
    p_train.set_defaults(func=cmd_train)

    p_bench = sub.add_parser("benchmark", help="repeated-split AUC benchmark")
    p_bench.add_argument("data")
    p_bench.add_argument(
        "--methods",
        default="deepcoda,deepcoda-linear,lasso,lasso-clr",
        help="comma-separated method names",
    )
    p_bench.add_argument("--grid", action="store_true", help="run the full hyper-parameter grid")
    p_bench.add_argument("--splits", type=int, default=20)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--bottlenecks", type=int, default=5)
    p_bench.add_argument("--lambda-s", type=float, default=0.01, dest="lambda_s")
    p_bench.add_argument("--epochs", type=int, default=2000)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--delta-fraction", type=float, default=0.5)
    p_bench.set_defaults(func=cmd_benchmark)

    p_exp = sub.add_parser("explain", help="write interpretability reports")
    p_exp.add_argument("model")
    p_exp.add_argument("data")
    p_exp.add_argument("--out", required=True, help="output directory")
    p_exp.add_argument("--delta-fraction", type=float, default=0.5)
    p_exp.set_defaults(func=cmd_explain)

    p_base = sub.add_parser("baseline", help="cross-validated LASSO fit")
    p_base.add_argument("data")
    p_base.add_argument("--transform", choices=TRANSFORMS, default="none")
    p_base.add_argument("--seed", type=int, default=0)
    p_base.add_argument("--out", required=True)
    p_base.add_argument("--delta-fraction", type=float, default=0.5)
    p_base.set_defaults(func=cmd_baseline)

    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDivergedError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
