"""Split management, rank-based AUC, and the repeated-split benchmark protocol."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .model import HEADS, predict_proba
from .train import TrainConfig, train

__all__ = [
    "B_GRID",
    "LAMBDA_S_GRID",
    "BenchmarkResult",
    "LabeledDataset",
    "Method",
    "auc",
    "benchmark",
    "grid_search",
    "make_deepcoda_method",
    "make_lasso_method",
    "results_to_csv",
    "split",
    "standardize_scores",
]

B_GRID = (1, 3, 5, 10)
LAMBDA_S_GRID = (0.001, 0.01, 0.1, 1.0)
DEFAULT_N_SPLITS = 20


def split(n: int, test_fraction: float = 0.1, seed: int = 0):
    """Disjoint, covering (train, test) index arrays with |test| = round(f * n)."""
    if n < 1:
        raise ValueError("n must be positive")
    n_test = int(round(n * test_fraction))
    if n_test < 1 or n_test >= n:
        raise ValueError(f"n={n} is too small for a nonempty train/test split")
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative; ties count half.

    Computed from average ranks, which equals the pairwise definition
    exactly (tied pairs contribute 0.5 each).
    """
    s = np.asarray(scores, dtype=float)
    yv = np.asarray(labels)
    if s.ndim != 1 or yv.shape != s.shape:
        raise ValueError("scores and labels must be equal-length vectors")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if not np.all((yv == 0) | (yv == 1)):
        raise ValueError("labels must be 0 or 1")
    pos = yv == 1
    n_pos = int(pos.sum())
    n_neg = s.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class LabeledDataset:
    """A named, strictly positive N x D matrix with binary labels."""

    name: str
    X: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class Method:
    """A named fit-and-score routine: (X_train, y_train, X_test, seed) -> scores."""

    name: str
    fit_score: Callable[[np.ndarray, np.ndarray, np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class BenchmarkResult:
    method: str
    dataset: str
    split_index: int
    auc: float
    standardized_auc: float | None = None


def make_deepcoda_method(
    n_bottlenecks: int = 5,
    lambda_s: float = 0.01,
    head: str = "self_explain",
    lambda_c: float = 1.0,
    learning_rate: float = 0.01,
    epochs: int = 2000,
    name: str | None = None,
) -> Method:
    """Method that trains the network on each split (seed = split seed)."""
    if name is None:
        name = f"deepcoda[B={n_bottlenecks};ls={lambda_s:g};{head}]"

    def fit_score(x_train, y_train, x_test, seed):
        cfg = TrainConfig(
            n_bottlenecks=n_bottlenecks,
            lambda_c=lambda_c,
            lambda_s=lambda_s,
            learning_rate=learning_rate,
            epochs=epochs,
            seed=seed,
            head=head,
        )
        report = train(x_train, y_train, cfg)
        return predict_proba(report.params, x_test)

    return Method(name, fit_score)


def make_lasso_method(
    transform: str = "none",
    lambda_grid=None,
    n_folds: int = 5,
    name: str | None = None,
) -> Method:
    """Cross-validated L1 logistic regression on optionally CLR-transformed data."""
    if name is None:
        name = "lasso" if transform == "none" else f"lasso-{transform}"

    def fit_score(x_train, y_train, x_test, seed):
        from .baselines import apply_transform, cv_select_lambda, lasso_logistic_fit

        xt = apply_transform(x_train, transform)
        lam = cv_select_lambda(
            xt, y_train, n_folds=n_folds, lambda_grid=lambda_grid, seed=seed
        )
        model = lasso_logistic_fit(xt, y_train, lam, transform=transform)
        return model.decision(apply_transform(x_test, transform))

    return Method(name, fit_score)


def benchmark(
    dataset: LabeledDataset,
    methods: Sequence[Method],
    n_splits: int = DEFAULT_N_SPLITS,
    base_seed: int = 0,
) -> list[BenchmarkResult]:
    """Test AUC of every method across seeded train/test splits.

    Split s uses seed ``base_seed + s`` for both the split and the method's
    internal randomness, so results are a pure function of the arguments.
    """
    x = np.asarray(dataset.X, dtype=float)
    y = np.asarray(dataset.y)
    results = []
    for s in range(n_splits):
        seed = base_seed + s
        train_idx, test_idx = split(x.shape[0], 0.1, seed)
        for method in methods:
            try:
                scores = method.fit_score(x[train_idx], y[train_idx], x[test_idx], seed)
                value = auc(scores, y[test_idx])
            except Exception as exc:
                raise RuntimeError(
                    f"method {method.name!r} failed on split {s} of {dataset.name!r}: {exc}"
                ) from exc
            results.append(BenchmarkResult(method.name, dataset.name, s, value))
    return results


def standardize_scores(results: Sequence[BenchmarkResult]) -> list[BenchmarkResult]:
    """Center each dataset's AUC values around the dataset mean."""
    if not results:
        raise ValueError("no results to standardize")
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for r in results:
        sums[r.dataset] = sums.get(r.dataset, 0.0) + r.auc
        counts[r.dataset] = counts.get(r.dataset, 0) + 1
    means = {name: sums[name] / counts[name] for name in sums}
    return [replace(r, standardized_auc=r.auc - means[r.dataset]) for r in results]


def grid_search(
    dataset: LabeledDataset,
    B_grid: Sequence[int] = B_GRID,
    lambda_s_grid: Sequence[float] = LAMBDA_S_GRID,
    heads: Sequence[str] = HEADS,
    n_splits: int = DEFAULT_N_SPLITS,
    base_seed: int = 0,
    lambda_c: float = 1.0,
    learning_rate: float = 0.01,
    epochs: int = 2000,
) -> list[BenchmarkResult]:
    """Benchmark the full bottleneck-count x L1-penalty x head cross product."""
    methods = [
        make_deepcoda_method(
            n_bottlenecks=b,
            lambda_s=ls,
            head=head,
            lambda_c=lambda_c,
            learning_rate=learning_rate,
            epochs=epochs,
        )
        for b in B_grid
        for ls in lambda_s_grid
        for head in heads
    ]
    return benchmark(dataset, methods, n_splits=n_splits, base_seed=base_seed)


def results_to_csv(results: Sequence[BenchmarkResult]) -> str:
    """Canonical CSV (sorted rows, 17 significant digits)."""
    lines = ["dataset,method,split,auc,standardized_auc"]
    ordered = sorted(results, key=lambda r: (r.dataset, r.method, r.split_index))
    for r in ordered:
        std = "" if r.standardized_auc is None else f"{r.standardized_auc:.17g}"
        lines.append(f"{r.dataset},{r.method},{r.split_index},{r.auc:.17g},{std}")
    return "\n".join(lines) + "\n"
