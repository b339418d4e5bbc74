"""Full-batch Adam training with seeded initialization and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import HEADS, PARAM_FIELDS, DeepCodaParams, loss_and_gradients

__all__ = [
    "HIDDEN_UNITS",
    "TrainConfig",
    "TrainReport",
    "TrainingDivergedError",
    "init_params",
    "train",
]

HIDDEN_UNITS = 16
INIT_SCALE = 0.1

# Weight tensors drawn uniform(-INIT_SCALE, INIT_SCALE), in this order;
# all bias tensors start at zero.
_WEIGHT_NAMES = ("beta", "mlp_w1", "mlp_w2", "linear_v")


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss leaves the finite range."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters for one training run. Everything is seeded."""

    n_bottlenecks: int = 5
    lambda_c: float = 1.0
    lambda_s: float = 0.01
    learning_rate: float = 0.01
    epochs: int = 2000
    seed: int = 0
    head: str = "self_explain"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.n_bottlenecks < 1:
            raise ValueError("n_bottlenecks must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.lambda_c < 0 or self.lambda_s < 0:
            raise ValueError("penalty weights must be nonnegative")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}")
        if not 0 <= self.adam_beta1 < 1 or not 0 <= self.adam_beta2 < 1:
            raise ValueError("adam moment decays must lie in [0, 1)")
        if self.adam_eps <= 0:
            raise ValueError("adam_eps must be positive")


@dataclass
class TrainReport:
    """Per-epoch loss curve, final zero-sum residuals, and the trained params."""

    loss_history: np.ndarray
    final_constraint_residuals: np.ndarray
    params: DeepCodaParams


def _tensor_rng(seed: int, index: int) -> np.random.Generator:
    # Philox is counter-based: each named tensor gets its own keyed stream,
    # so one tensor's draw never depends on the sizes of the others.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def init_params(
    n_features: int,
    n_bottlenecks: int,
    hidden_units: int = HIDDEN_UNITS,
    seed: int = 0,
    head: str = "self_explain",
) -> DeepCodaParams:
    """Small uniform weights from per-tensor Philox streams; zero biases."""
    if n_features < 1 or n_bottlenecks < 1 or hidden_units < 1:
        raise ValueError("dimensions must be positive")
    shapes = {
        "beta": (n_features, n_bottlenecks),
        "mlp_w1": (n_bottlenecks, hidden_units),
        "mlp_w2": (hidden_units, n_bottlenecks),
        "linear_v": (n_bottlenecks,),
    }
    drawn = {
        name: _tensor_rng(seed, k).uniform(-INIT_SCALE, INIT_SCALE, size=shapes[name])
        for k, name in enumerate(_WEIGHT_NAMES)
    }
    return DeepCodaParams(
        beta=drawn["beta"],
        beta0=np.zeros(n_bottlenecks),
        mlp_w1=drawn["mlp_w1"],
        mlp_b1=np.zeros(hidden_units),
        mlp_w2=drawn["mlp_w2"],
        mlp_b2=np.zeros(n_bottlenecks),
        head=head,
        linear_v=drawn["linear_v"],
        linear_v0=0.0,
    )


def train(X, y, cfg: TrainConfig) -> TrainReport:
    """Run full-batch Adam on the penalized loss for ``cfg.epochs`` steps.

    Pure function of (X, y, cfg): identical inputs give bit-identical
    reports. ``loss_history[t]`` is the loss evaluated before step t.
    Raises TrainingDivergedError naming the epoch if the loss becomes
    non-finite.
    """
    xv = np.asarray(X, dtype=float)
    yv = np.asarray(y)
    if xv.ndim != 2 or yv.shape != (xv.shape[0],):
        raise ValueError("X must be N x D with one label per row")
    if xv.shape[0] < 2 or np.unique(yv).size < 2:
        raise ValueError("need at least two samples with both classes present")

    params = init_params(xv.shape[1], cfg.n_bottlenecks, seed=cfg.seed, head=cfg.head)
    moment1 = {
        name: np.zeros_like(np.asarray(getattr(params, name), dtype=float))
        for name in PARAM_FIELDS
    }
    moment2 = {name: arr.copy() for name, arr in moment1.items()}
    history = np.empty(cfg.epochs)

    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for epoch in range(cfg.epochs):
            try:
                current, grads = loss_and_gradients(
                    params, xv, yv, cfg.lambda_c, cfg.lambda_s
                )
            except FloatingPointError as exc:
                raise TrainingDivergedError(
                    f"training diverged: non-finite loss at epoch {epoch}"
                ) from exc
            if not np.isfinite(current):
                raise TrainingDivergedError(
                    f"training diverged: non-finite loss at epoch {epoch}"
                )
            history[epoch] = current
            step = epoch + 1
            bias1 = 1.0 - cfg.adam_beta1**step
            bias2 = 1.0 - cfg.adam_beta2**step
            for name in PARAM_FIELDS:
                g = np.asarray(grads[name], dtype=float)
                moment1[name] = cfg.adam_beta1 * moment1[name] + (1.0 - cfg.adam_beta1) * g
                moment2[name] = cfg.adam_beta2 * moment2[name] + (1.0 - cfg.adam_beta2) * g * g
                update = cfg.learning_rate * (moment1[name] / bias1) / (
                    np.sqrt(moment2[name] / bias2) + cfg.adam_eps
                )
                value = np.asarray(getattr(params, name), dtype=float) - update
                setattr(params, name, value if value.ndim else float(value))

    residuals = params.beta.sum(axis=0)
    return TrainReport(
        loss_history=history,
        final_constraint_residuals=residuals,
        params=params,
    )
