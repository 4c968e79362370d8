"""Gradient-boosted regression trees on squared error, built from scratch.

Boosting starts from the mean target; every round fits a depth-limited
regression tree to the current residuals (leaf value = mean residual in the
leaf, chosen by exact greedy variance-reduction splits) and adds it scaled by
the learning rate.  With subsample = 1 the training MSE never increases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from iclest.errors import DataError
from iclest.features import MetaSample
from iclest.metamodels.common import check_dim, stack_samples


@dataclass(frozen=True)
class GbtConfig:
    n_rounds: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    min_leaf: int = 2
    subsample: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_rounds < 1:
            raise DataError("n_rounds must be >= 1")
        if self.max_depth < 1:
            raise DataError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise DataError("learning_rate must be in (0, 1]")
        if self.min_leaf < 1:
            raise DataError("min_leaf must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise DataError("subsample must be in (0, 1]")


@dataclass
class GbtModel:
    kind = "gbt"
    base: float
    trees: list[dict]
    config: GbtConfig
    feature_dim: int
    train_mse: list[float]  # index 0 = base model, then one entry per round

    def predict(self, features) -> float:
        return gbt_predict(self, features)

    def predict_many(self, x: np.ndarray) -> np.ndarray:
        preds = np.full(x.shape[0], self.base)
        for tree in self.trees:
            preds += self.config.learning_rate * _apply_tree(tree, x)
        return np.clip(preds, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "trees": self.trees,
            "feature_dim": self.feature_dim,
            "train_mse": self.train_mse,
            "config": {
                "n_rounds": self.config.n_rounds,
                "max_depth": self.config.max_depth,
                "learning_rate": self.config.learning_rate,
                "min_leaf": self.config.min_leaf,
                "subsample": self.config.subsample,
                "seed": self.config.seed,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GbtModel":
        return cls(
            base=float(payload["base"]),
            trees=payload["trees"],
            config=GbtConfig(**payload["config"]),
            feature_dim=int(payload["feature_dim"]),
            train_mse=[float(v) for v in payload["train_mse"]],
        )


def _best_split(x: np.ndarray, residuals: np.ndarray, min_leaf: int):
    """Exact greedy split maximizing variance reduction; None if no valid gain.

    Ties go to the smallest feature index, then the smallest split position.
    """
    n, d = x.shape
    if n < 2 * min_leaf:
        return None
    order = np.argsort(x, axis=0, kind="stable")
    xs = np.take_along_axis(x, order, axis=0)
    rs = residuals[order]
    csum = np.cumsum(rs, axis=0)
    total = csum[-1, 0]

    n_left = np.arange(1, n, dtype=float)[:, None]
    s_left = csum[:-1, :]
    n_right = n - n_left
    s_right = total - s_left
    score = s_left**2 / n_left + s_right**2 / n_right

    valid = xs[1:, :] > xs[:-1, :]
    valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)

    flat = np.argmax(score.T)  # feature-major: smallest feature wins ties
    feat, pos = divmod(int(flat), n - 1)
    base_score = total**2 / n
    if score[pos, feat] <= base_score + 1e-12 * max(1.0, abs(base_score)):
        return None

    lo, hi = xs[pos, feat], xs[pos + 1, feat]
    threshold = 0.5 * (lo + hi)
    if threshold <= lo:
        threshold = hi
    return feat, float(threshold)


def _fit_tree(x: np.ndarray, residuals: np.ndarray, max_depth: int, min_leaf: int) -> dict:
    def build(idx: np.ndarray, depth: int) -> dict:
        node_r = residuals[idx]
        if depth == max_depth or idx.size < 2 * min_leaf:
            return {"value": float(node_r.mean())}
        split = _best_split(x[idx], node_r, min_leaf)
        if split is None:
            return {"value": float(node_r.mean())}
        feat, threshold = split
        mask = x[idx, feat] < threshold
        return {
            "feature": feat,
            "threshold": threshold,
            "left": build(idx[mask], depth + 1),
            "right": build(idx[~mask], depth + 1),
        }

    return build(np.arange(x.shape[0]), 0)


def _apply_tree(tree: dict, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0])

    def walk(node: dict, idx: np.ndarray) -> None:
        if "value" in node:
            out[idx] = node["value"]
            return
        mask = x[idx, node["feature"]] < node["threshold"]
        walk(node["left"], idx[mask])
        walk(node["right"], idx[~mask])

    walk(tree, np.arange(x.shape[0]))
    return out


def gbt_fit(samples: Sequence[MetaSample], config: GbtConfig = GbtConfig()) -> GbtModel:
    config.validate()
    x, y, _ = stack_samples(samples)
    if x.shape[0] < 2:
        raise DataError("gbt_fit needs at least 2 samples")

    rng = np.random.default_rng(config.seed)
    base = float(y.mean())
    preds = np.full(x.shape[0], base)
    trees: list[dict] = []
    trace = [float(np.mean((y - preds) ** 2))]

    n = x.shape[0]
    n_sub = max(1, int(round(config.subsample * n)))
    for _ in range(config.n_rounds):
        residuals = y - preds
        if config.subsample < 1.0:
            rows = np.sort(rng.permutation(n)[:n_sub])
        else:
            rows = np.arange(n)
        tree = _fit_tree(x[rows], residuals[rows], config.max_depth, config.min_leaf)
        trees.append(tree)
        preds = preds + config.learning_rate * _apply_tree(tree, x)
        trace.append(float(np.mean((y - preds) ** 2)))

    return GbtModel(
        base=base, trees=trees, config=config, feature_dim=x.shape[1], train_mse=trace
    )


def gbt_predict(model: GbtModel, features) -> float:
    """base + sum of scaled tree outputs, clamped to [0, 1]."""
    v = check_dim(model, features)
    return float(model.predict_many(v[None, :])[0])
