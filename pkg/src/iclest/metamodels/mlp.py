"""Two-layer perceptron regressor trained with Adam on squared error."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from iclest.errors import DataError, NumericError
from iclest.features import MetaSample
from iclest.metamodels.common import check_dim, stack_samples

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

PARAM_NAMES = ("w1", "b1", "w2", "b2")


@dataclass(frozen=True)
class MlpConfig:
    # lr 1e-2: full-batch Adam at 1e-3 cannot reach a constant target in 500
    # epochs (per-step movement is bounded by the learning rate)
    hidden_width: int = 64
    epochs: int = 500
    learning_rate: float = 1e-2
    seed: int = 0
    batch_size: Optional[int] = None  # None = full batch

    def validate(self) -> None:
        if self.hidden_width < 1:
            raise DataError("hidden_width must be >= 1")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise DataError("batch_size must be >= 1")


@dataclass
class MlpModel:
    kind = "mlp"
    params: dict[str, np.ndarray]
    feature_dim: int
    config: MlpConfig
    final_mse: float

    def predict(self, features) -> float:
        return mlp_predict(self, features)

    def to_dict(self) -> dict:
        return {
            "params": {k: v.tolist() for k, v in self.params.items()},
            "feature_dim": self.feature_dim,
            "final_mse": self.final_mse,
            "config": {
                "hidden_width": self.config.hidden_width,
                "epochs": self.config.epochs,
                "learning_rate": self.config.learning_rate,
                "seed": self.config.seed,
                "batch_size": self.config.batch_size,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MlpModel":
        return cls(
            params={k: np.asarray(v, dtype=float) for k, v in payload["params"].items()},
            feature_dim=int(payload["feature_dim"]),
            config=MlpConfig(**payload["config"]),
            final_mse=float(payload["final_mse"]),
        )


def init_params(feature_dim: int, hidden_width: int, seed: int) -> dict[str, np.ndarray]:
    """Gaussian weights scaled by 1/sqrt(fan-in); zero biases."""
    rng = np.random.default_rng(seed)
    return {
        "w1": rng.standard_normal((feature_dim, hidden_width)) / np.sqrt(feature_dim),
        "b1": np.zeros(hidden_width),
        "w2": rng.standard_normal((hidden_width, 1)) / np.sqrt(hidden_width),
        "b2": np.zeros(1),
    }


def forward(params: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Raw (unclamped) network output for a batch, shape (n,)."""
    hidden = np.maximum(x @ params["w1"] + params["b1"], 0.0)
    return (hidden @ params["w2"] + params["b2"]).ravel()


def loss_and_grads(params: dict[str, np.ndarray], x: np.ndarray, y: np.ndarray):
    """Mean squared error and its analytic gradients w.r.t. every parameter."""
    n = x.shape[0]
    z1 = x @ params["w1"] + params["b1"]
    hidden = np.maximum(z1, 0.0)
    out = (hidden @ params["w2"] + params["b2"]).ravel()
    err = out - y
    loss = float(np.mean(err**2))

    d_out = (2.0 / n) * err  # (n,)
    grads = {
        "w2": hidden.T @ d_out[:, None],
        "b2": np.array([d_out.sum()]),
    }
    d_hidden = d_out[:, None] * params["w2"].T  # (n, h)
    d_z1 = d_hidden * (z1 > 0)
    grads["w1"] = x.T @ d_z1
    grads["b1"] = d_z1.sum(axis=0)
    return loss, grads


def mlp_fit(samples: Sequence[MetaSample], config: MlpConfig = MlpConfig()) -> MlpModel:
    """Train on squared error with Adam; deterministic for a fixed seed."""
    config.validate()
    x, y, _ = stack_samples(samples)
    if x.shape[0] < 2:
        raise DataError("mlp_fit needs at least 2 samples")

    params = init_params(x.shape[1], config.hidden_width, config.seed)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    rng = np.random.default_rng(config.seed + 1)
    batch = config.batch_size or x.shape[0]
    step = 0
    loss = float("nan")

    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            if batch >= x.shape[0]:
                batches = [np.arange(x.shape[0])]
            else:
                perm = rng.permutation(x.shape[0])
                batches = [perm[i : i + batch] for i in range(0, x.shape[0], batch)]
            for idx in batches:
                loss, grads = loss_and_grads(params, x[idx], y[idx])
                if not np.isfinite(loss):
                    raise NumericError(f"mlp training diverged at epoch {epoch}")
                step += 1
                for name in PARAM_NAMES:
                    g = grads[name]
                    m[name] = ADAM_BETA1 * m[name] + (1 - ADAM_BETA1) * g
                    v[name] = ADAM_BETA2 * v[name] + (1 - ADAM_BETA2) * g**2
                    m_hat = m[name] / (1 - ADAM_BETA1**step)
                    v_hat = v[name] / (1 - ADAM_BETA2**step)
                    params[name] = params[name] - config.learning_rate * m_hat / (
                        np.sqrt(v_hat) + ADAM_EPS
                    )

    final_mse, _ = loss_and_grads(params, x, y)
    if not np.isfinite(final_mse):
        raise NumericError(f"mlp training diverged at epoch {config.epochs - 1}")
    return MlpModel(
        params=params, feature_dim=x.shape[1], config=config, final_mse=final_mse
    )


def mlp_predict(model: MlpModel, features) -> float:
    """Forward pass clamped to [0, 1]."""
    v = check_dim(model, features)
    raw = float(forward(model.params, v[None, :])[0])
    return min(1.0, max(0.0, raw))
