"""Dataset-level feature construction.

Three feature kinds feed the meta-models: percentile summaries of a run's
sorted confidence scores ("conf"), PCA-reduced mean embeddings ("embed"),
and their concatenation ("ce").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from iclest.errors import DataError

FEATURE_KINDS = ("conf", "embed", "ce")


@dataclass(frozen=True)
class ConfidenceVector:
    """Fixed-length percentile summary of a sorted confidence profile."""

    values: tuple[float, ...]
    d_c: int

    def __post_init__(self):
        if self.d_c < 1:
            raise DataError("d_c must be >= 1")
        if len(self.values) != self.d_c:
            raise DataError(
                f"confidence vector has {len(self.values)} values, expected d_c={self.d_c}"
            )


@dataclass(frozen=True)
class PcaModel:
    """Mean vector plus orthonormal principal directions (rows of `components`)."""

    mean: tuple[float, ...]
    components: tuple[tuple[float, ...], ...]  # d_e rows, each of length H
    d_e: int
    explained_variance: tuple[float, ...] = ()


@dataclass(frozen=True)
class FeatureVector:
    """Meta-model input: kind tells which featurization produced `values`."""

    kind: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise DataError(f"unknown feature kind {self.kind!r}")


@dataclass(frozen=True)
class MetaSample:
    """One (feature vector, dataset accuracy) observation for a (task, prompt) run.

    `accuracy` is None for unlabeled estimation-only targets.  `formulation`
    is in-memory provenance used to keep closed-set and open-ended training
    data apart; it is not part of the persisted feature-store schema.
    """

    features: FeatureVector
    accuracy: Optional[float]
    task_id: str
    prompt_id: str
    formulation: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.accuracy is not None and not 0.0 <= self.accuracy <= 1.0:
            raise DataError(
                f"accuracy {self.accuracy} outside [0, 1] for run "
                f"({self.task_id}, {self.prompt_id})"
            )


def confidence_profile(scores: Sequence[float]) -> list[float]:
    """Sort per-example confidence scores ascending."""
    if len(scores) == 0:
        raise DataError("cannot build a confidence profile from zero scores")
    return sorted(float(s) for s in scores)


def confidence_vector(sorted_scores: Sequence[float], d_c: int) -> ConfidenceVector:
    """Summarize an ascending score list into d_c interpolated percentile values.

    Component i (1-based) linearly interpolates between the scores at 1-based
    positions floor(n*i/d_c) and ceil(n*i/d_c), with the interpolation weight
    equal to the fractional part of n*i/d_c.  Positions are clamped to [1, n],
    so d_c may exceed n (values then repeat).
    """
    if d_c < 1:
        raise DataError("d_c must be >= 1")
    s = np.asarray(sorted_scores, dtype=float)
    n = s.size
    if n == 0:
        raise DataError("empty confidence profile")
    if np.any(np.diff(s) < 0):
        raise DataError("confidence_vector requires ascending scores")

    t = n * np.arange(1, d_c + 1, dtype=float) / d_c
    lo = np.clip(np.floor(t), 1, n).astype(int)
    hi = np.clip(np.ceil(t), 1, n).astype(int)
    w = t - np.floor(t)
    vals = (1.0 - w) * s[lo - 1] + w * s[hi - 1]
    return ConfidenceVector(values=tuple(float(v) for v in vals), d_c=d_c)


def conf_feature(scores: Sequence[float], d_c: int) -> FeatureVector:
    """Profile + percentile summary in one step, as a kind="conf" feature."""
    vec = confidence_vector(confidence_profile(scores), d_c)
    return FeatureVector(kind="conf", values=vec.values)


def mean_embedding(run) -> list[float]:
    """Componentwise mean of the per-record embeddings of a run."""
    vectors = []
    dim = None
    for rec in run.records:
        if rec.embedding is None:
            raise DataError(
                f"record {rec.example_id!r} in run ({run.task_id}, {run.prompt_id}) "
                "has no embedding"
            )
        if dim is None:
            dim = len(rec.embedding)
        elif len(rec.embedding) != dim:
            raise DataError(
                f"embedding length {len(rec.embedding)} for record {rec.example_id!r} "
                f"does not match {dim}"
            )
        vectors.append(rec.embedding)
    mean = np.asarray(vectors, dtype=float).mean(axis=0)
    return [float(v) for v in mean]


def fit_pca(vectors: Sequence[Sequence[float]], d_e: int) -> PcaModel:
    """Fit principal directions by SVD of the mean-centered data matrix.

    Components are ordered by descending explained variance.  Sign convention:
    the entry of largest magnitude in each component is made positive, so fits
    are deterministic across runs.
    """
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("fit_pca needs at least 2 vectors of common length")
    n, h = x.shape
    if d_e < 1 or d_e > min(n - 1, h):
        raise DataError(f"d_e={d_e} must be in [1, min(n-1={n - 1}, H={h})]")

    mean = x.mean(axis=0)
    centered = x - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:d_e].copy()
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    variances = (svals[:d_e] ** 2) / (n - 1)
    return PcaModel(
        mean=tuple(float(v) for v in mean),
        components=tuple(tuple(float(v) for v in row) for row in components),
        d_e=d_e,
        explained_variance=tuple(float(v) for v in variances),
    )


def project_pca(model: PcaModel, vector: Sequence[float]) -> list[float]:
    """Project a vector onto the model's components after mean-centering."""
    v = np.asarray(vector, dtype=float)
    mean = np.asarray(model.mean, dtype=float)
    if v.shape != mean.shape:
        raise DataError(
            f"vector length {v.size} does not match PCA input length {mean.size}"
        )
    comps = np.asarray(model.components, dtype=float)
    out = comps @ (v - mean)
    return [float(x) for x in out]


def concat_features(conf: ConfidenceVector, embed: Sequence[float]) -> FeatureVector:
    """Confidence values followed by embedding values, as a kind="ce" feature."""
    values = tuple(conf.values) + tuple(float(v) for v in embed)
    return FeatureVector(kind="ce", values=values)


def feature_dim(samples: Sequence[MetaSample]) -> int:
    """Common feature length of a nonempty sample list (error on mismatch)."""
    if not samples:
        raise DataError("no samples")
    dim = len(samples[0].features.values)
    for s in samples:
        if len(s.features.values) != dim:
            raise DataError(
                f"feature dimension mismatch: run ({s.task_id}, {s.prompt_id}) has "
                f"{len(s.features.values)}, expected {dim}"
            )
    return dim
