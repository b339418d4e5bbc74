"""Tests for seeded initialization and the full-batch Adam trainer."""

import numpy as np
import pytest

from deepcoda import (
    TrainConfig,
    TrainingDivergedError,
    gen_toy,
    init_params,
    train,
)
from deepcoda.model import PARAM_FIELDS


class TestInitParams:
    def test_same_seed_identical(self):
        a = init_params(6, 3, seed=11)
        b = init_params(6, 3, seed=11)
        for name in PARAM_FIELDS:
            assert np.array_equal(np.asarray(getattr(a, name)), np.asarray(getattr(b, name)))

    def test_different_seeds_differ(self):
        a = init_params(6, 3, seed=1)
        b = init_params(6, 3, seed=2)
        assert not np.array_equal(a.beta, b.beta)

    def test_weights_bounded_and_biases_zero(self):
        p = init_params(5, 4, seed=3)
        for name in ("beta", "mlp_w1", "mlp_w2", "linear_v"):
            assert np.all(np.abs(np.asarray(getattr(p, name))) <= 0.1)
        for name in ("beta0", "mlp_b1", "mlp_b2"):
            assert np.all(np.asarray(getattr(p, name)) == 0.0)
        assert p.linear_v0 == 0.0

    def test_head_is_stamped(self):
        assert init_params(3, 1, seed=0, head="linear").head == "linear"

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            init_params(0, 1)


@pytest.fixture(scope="module")
def toy200():
    return gen_toy(200, seed=0)


@pytest.fixture(scope="module")
def trained_toy(toy200):
    cfg = TrainConfig(n_bottlenecks=1, lambda_s=0.01, seed=0)
    return train(toy200.relative.values, toy200.labels, cfg)


class TestTrain:
    def test_loss_decreases_on_separable_data(self, trained_toy):
        history = trained_toy.loss_history
        assert history[-1] < history[0]
        assert np.all(np.isfinite(history))

    def test_history_has_one_entry_per_epoch(self, trained_toy):
        assert trained_toy.loss_history.shape == (TrainConfig().epochs,)

    def test_constraint_residual_is_small(self, trained_toy):
        # lambda_c = 1 drives the column sums toward zero
        assert np.all(np.abs(trained_toy.final_constraint_residuals) < 0.01)

    def test_residuals_match_params(self, trained_toy):
        assert np.array_equal(
            trained_toy.final_constraint_residuals, trained_toy.params.beta.sum(axis=0)
        )

    def test_deterministic_reruns(self, toy200):
        cfg = TrainConfig(n_bottlenecks=2, epochs=300, seed=123)
        a = train(toy200.relative.values, toy200.labels, cfg)
        b = train(toy200.relative.values, toy200.labels, cfg)
        assert np.array_equal(a.loss_history, b.loss_history)
        for name in PARAM_FIELDS:
            assert np.array_equal(
                np.asarray(getattr(a.params, name)), np.asarray(getattr(b.params, name))
            )

    def test_divergence_raises_with_epoch(self, toy200):
        cfg = TrainConfig(n_bottlenecks=1, learning_rate=1e200, epochs=10, seed=0)
        with pytest.raises(TrainingDivergedError, match="epoch"):
            train(toy200.relative.values, toy200.labels, cfg)

    def test_rejects_single_class(self, toy200):
        cfg = TrainConfig(epochs=2)
        with pytest.raises(ValueError):
            train(toy200.relative.values, np.zeros(200, dtype=int), cfg)

    def test_rejects_shape_mismatch(self, toy200):
        cfg = TrainConfig(epochs=2)
        with pytest.raises(ValueError):
            train(toy200.relative.values, toy200.labels[:-1], cfg)


class TestTrainConfig:
    def test_defaults_match_headline_configuration(self):
        cfg = TrainConfig()
        assert cfg.n_bottlenecks == 5
        assert cfg.lambda_c == 1.0
        assert cfg.lambda_s == 0.01
        assert cfg.head == "self_explain"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_bottlenecks": 0},
            {"epochs": 0},
            {"learning_rate": 0.0},
            {"lambda_c": -1.0},
            {"head": "other"},
            {"adam_eps": 0.0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)
