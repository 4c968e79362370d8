"""k-nearest-neighbor regression with deterministic tie-breaking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from iclest.errors import DataError
from iclest.features import MetaSample
from iclest.metamodels.common import check_dim, stack_samples

DEFAULT_K = 3


@dataclass
class KnnModel:
    kind = "knn"
    features: np.ndarray  # (n, d), insertion order preserved
    accuracies: np.ndarray  # (n,)
    k: int
    feature_dim: int

    def predict(self, features) -> float:
        return knn_predict(self, features)

    def to_dict(self) -> dict:
        return {
            "features": self.features.tolist(),
            "accuracies": self.accuracies.tolist(),
            "k": self.k,
            "feature_dim": self.feature_dim,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "KnnModel":
        return cls(
            features=np.asarray(payload["features"], dtype=float),
            accuracies=np.asarray(payload["accuracies"], dtype=float),
            k=int(payload["k"]),
            feature_dim=int(payload["feature_dim"]),
        )


def knn_fit(samples: Sequence[MetaSample], k: int = DEFAULT_K) -> KnnModel:
    """Store the training set; prediction averages the k nearest accuracies."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    x, y, _ = stack_samples(samples)
    if k > x.shape[0]:
        raise DataError(f"k={k} exceeds the {x.shape[0]} available samples")
    return KnnModel(features=x, accuracies=y, k=k, feature_dim=x.shape[1])


def knn_predict(model: KnnModel, features) -> float:
    """Unweighted mean accuracy of the k nearest stored samples (Euclidean).

    Distance ties at the k-th slot go to the earlier-inserted sample (stable
    sort over squared distances).
    """
    v = check_dim(model, features)
    d2 = np.sum((model.features - v) ** 2, axis=1)
    order = np.argsort(d2, kind="stable")
    return float(np.mean(model.accuracies[order[: model.k]]))
