"""Shared meta-model plumbing: sample validation and model (de)serialization."""

from __future__ import annotations

import json
import os
from typing import Protocol, Sequence

import numpy as np

from iclest.errors import DataError
from iclest.features import FeatureVector, MetaSample


class MetaModel(Protocol):
    kind: str
    feature_dim: int

    def predict(self, features) -> float: ...


def stack_samples(samples: Sequence[MetaSample]):
    """Validate a training set and return (X, y, task_ids).

    Enforces: nonempty, labeled, common feature kind and dimension, and the
    formulation firewall (no mixing of closed-set- and open-ended-derived
    samples).
    """
    if not samples:
        raise DataError("empty training set")
    kind = samples[0].features.kind
    dim = len(samples[0].features.values)
    formulations = set()
    for s in samples:
        if s.features.kind != kind:
            raise DataError(
                f"training set mixes feature kinds {kind!r} and {s.features.kind!r}"
            )
        if len(s.features.values) != dim:
            raise DataError(
                f"feature dimension mismatch: ({s.task_id}, {s.prompt_id}) has "
                f"{len(s.features.values)}, expected {dim}"
            )
        if s.accuracy is None:
            raise DataError(
                f"unlabeled sample ({s.task_id}, {s.prompt_id}) in training set"
            )
        if s.formulation is not None:
            formulations.add(s.formulation)
    if len(formulations) > 1:
        raise DataError(
            f"training set mixes formulations {sorted(formulations)}; closed-set and "
            "open-ended samples must not be trained together"
        )
    x = np.array([s.features.values for s in samples], dtype=float)
    y = np.array([s.accuracy for s in samples], dtype=float)
    tasks = [s.task_id for s in samples]
    return x, y, tasks


def feature_values(features) -> np.ndarray:
    """Accept a FeatureVector or a plain sequence of floats."""
    if isinstance(features, FeatureVector):
        return np.asarray(features.values, dtype=float)
    return np.asarray(features, dtype=float)


def check_dim(model, features) -> np.ndarray:
    v = feature_values(features)
    if v.ndim != 1 or v.size != model.feature_dim:
        raise DataError(
            f"feature dimension mismatch: got {v.size}, model expects {model.feature_dim}"
        )
    return v


def save_model(model, path: str | os.PathLike) -> None:
    """Write a versioned JSON dump sufficient to reproduce predict exactly."""
    payload = {"v": 1, "kind": model.kind}
    payload.update(model.to_dict())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path: str | os.PathLike):
    if not os.path.exists(path):
        raise DataError(f"model file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("v") != 1:
        raise DataError("unsupported model file version")
    kind = payload.get("kind")
    # local imports avoid a cycle with the concrete model modules
    from iclest.metamodels.gbt import GbtModel
    from iclest.metamodels.knn import KnnModel
    from iclest.metamodels.mlp import MlpModel

    loaders = {"knn": KnnModel, "mlp": MlpModel, "gbt": GbtModel}
    if kind not in loaders:
        raise DataError(f"unknown model kind {kind!r}")
    return loaders[kind].from_dict(payload)
