"""Seeded random hyperparameter search scored by grouped inner cross-validation.

Candidate configs are drawn uniformly from a fixed space, scored by 4-fold
cross-validation MAE with folds grouped by task_id (so no task straddles an
inner train/validation boundary), and the winner is refit on all samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from iclest.errors import DataError
from iclest.features import MetaSample
from iclest.metamodels.gbt import GbtConfig, gbt_fit, gbt_predict
from iclest.metamodels.mlp import MlpConfig, mlp_fit, mlp_predict

DEFAULT_TRIALS = 300
INNER_FOLDS = 4

GBT_SEARCH_SPACE = {
    "n_rounds": (50, 500),  # uniform integer range, inclusive
    "max_depth": (1, 2, 3, 4, 5, 6),
    "learning_rate": (0.01, 0.3),  # log-uniform range
    "min_leaf": (1, 2, 5, 10),
    "subsample": (0.6, 0.8, 1.0),
}

MLP_SEARCH_SPACE = {
    "hidden_width": (16, 32, 64, 128),
    "epochs": (100, 1000),  # uniform integer range, inclusive
    "learning_rate": (1e-4, 1e-2),  # log-uniform range
}


@dataclass
class SearchResult:
    config: object
    model: object
    cv_mae: float  # percentage points
    trials: int


def _draw_gbt(rng: np.random.Generator, space: dict) -> GbtConfig:
    lo, hi = space["learning_rate"]
    return GbtConfig(
        n_rounds=int(rng.integers(space["n_rounds"][0], space["n_rounds"][1] + 1)),
        max_depth=int(rng.choice(space["max_depth"])),
        learning_rate=float(math.exp(rng.uniform(math.log(lo), math.log(hi)))),
        min_leaf=int(rng.choice(space["min_leaf"])),
        subsample=float(rng.choice(space["subsample"])),
        seed=int(rng.integers(0, 2**31)),
    )


def _draw_mlp(rng: np.random.Generator, space: dict) -> MlpConfig:
    lo, hi = space["learning_rate"]
    return MlpConfig(
        hidden_width=int(rng.choice(space["hidden_width"])),
        epochs=int(rng.integers(space["epochs"][0], space["epochs"][1] + 1)),
        learning_rate=float(math.exp(rng.uniform(math.log(lo), math.log(hi)))),
        seed=int(rng.integers(0, 2**31)),
    )


def _inner_folds(samples: Sequence[MetaSample], seed: int) -> list[list[int]]:
    tasks = sorted({s.task_id for s in samples})
    if len(tasks) < INNER_FOLDS:
        raise DataError(
            f"random_search needs >= {INNER_FOLDS} distinct task_ids, got {len(tasks)}"
        )
    rng = np.random.default_rng(seed)
    shuffled = [tasks[i] for i in rng.permutation(len(tasks))]
    fold_of = {task: i % INNER_FOLDS for i, task in enumerate(shuffled)}
    folds = [[] for _ in range(INNER_FOLDS)]
    for i, s in enumerate(samples):
        folds[fold_of[s.task_id]].append(i)
    return folds


def _cv_mae(samples: Sequence[MetaSample], config, fit, predict, folds) -> float:
    errors = []
    for held_out in folds:
        held_set = set(held_out)
        train = [s for i, s in enumerate(samples) if i not in held_set]
        model = fit(train, config)
        fold_err = [
            abs(predict(model, samples[i].features) - samples[i].accuracy)
            for i in held_out
        ]
        errors.append(100.0 * float(np.mean(fold_err)))
    return float(np.mean(errors))


def random_search(
    samples: Sequence[MetaSample],
    kind: str = "gbt",
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    space: dict | None = None,
) -> SearchResult:
    """Pick the config with the lowest grouped-CV MAE and refit on all samples.

    Deterministic given the seed; ties keep the earlier-drawn config.
    """
    if len(samples) < 10:
        raise DataError("random_search needs at least 10 samples")
    if trials < 1:
        raise DataError("trials must be >= 1")
    if kind == "gbt":
        draw, fit, predict = _draw_gbt, gbt_fit, gbt_predict
        space = space or GBT_SEARCH_SPACE
    elif kind == "mlp":
        draw, fit, predict = _draw_mlp, mlp_fit, mlp_predict
        space = space or MLP_SEARCH_SPACE
    else:
        raise DataError(f"random_search supports kinds 'gbt' and 'mlp', got {kind!r}")

    folds = _inner_folds(samples, seed)
    rng = np.random.default_rng(seed)
    best_config = None
    best_mae = float("inf")
    for _ in range(trials):
        config = draw(rng, space)
        mae = _cv_mae(samples, config, fit, predict, folds)
        if mae < best_mae:
            best_mae = mae
            best_config = config

    model = fit(samples, best_config)
    return SearchResult(config=best_config, model=model, cv_mae=best_mae, trials=trials)
