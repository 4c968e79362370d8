"""Reference accuracy estimators: Avg, ACE, ATC, and the labeled-sample oracle.

Avg predicts the mean in-distribution accuracy.  ACE predicts the mean
confidence of the unlabeled target set (closed-set only; open-ended scores do
not share the [0, 1] range of the accuracy metric).  ATC learns one
confidence threshold per source dataset matching that source's error rate and
averages the per-source estimates.  oracle_l reports the expected error of
simply labeling l target examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from iclest.errors import DataError, NumericError

ORACLE_GRID = (8, 16, 32, 64, 128)
ORACLE_TRIALS = 1000

# cap on trials*population elements drawn at once to bound memory
_CHUNK_ELEMENTS = 5_000_000


@dataclass(frozen=True)
class AtcThreshold:
    source_task_id: str
    threshold: float
    source_error_rate: float


@dataclass(frozen=True)
class OracleCurve:
    """Expected MAE (percentage points) at increasing annotation budgets."""

    levels: tuple[tuple[int, float, int], ...]  # (l, expected_mae, trials)

    def __post_init__(self):
        ls = [l for l, _, _ in self.levels]
        if any(b <= a for a, b in zip(ls, ls[1:])):
            raise DataError("oracle curve levels must be strictly increasing in l")


def avg_baseline(train_accuracies: Sequence[float]) -> float:
    """Arithmetic mean of the in-distribution accuracies."""
    if len(train_accuracies) == 0:
        raise DataError("avg_baseline needs at least one accuracy")
    return float(np.mean(train_accuracies))


def ace_estimate(test_scores: Sequence[float], formulation: str) -> float:
    """Mean confidence over the target set, valid for closed-set tasks only."""
    if formulation != "closed_set":
        raise DataError(
            "ACE undefined for open-ended tasks: confidence and accuracy ranges differ"
        )
    if len(test_scores) == 0:
        raise DataError("ace_estimate needs at least one score")
    return float(np.mean(test_scores))


def atc_threshold(
    source_scores: Sequence[float],
    source_correctness: Sequence[float],
    source_task_id: str = "",
) -> AtcThreshold:
    """Threshold whose below-side fraction matches the source error rate.

    error_rate = 1 - mean(correctness); the threshold is the
    ceil(error_rate * n)-th smallest source score, or -inf when the source is
    error-free.
    """
    if len(source_scores) != len(source_correctness):
        raise DataError(
            f"scores ({len(source_scores)}) and correctness "
            f"({len(source_correctness)}) lengths differ"
        )
    if len(source_scores) == 0:
        raise DataError("atc_threshold needs at least one scored example")
    error_rate = 1.0 - float(np.mean(source_correctness))
    n = len(source_scores)
    k = math.ceil(error_rate * n)
    if k <= 0:
        threshold = -math.inf
    else:
        threshold = float(np.sort(np.asarray(source_scores, dtype=float))[k - 1])
    return AtcThreshold(
        source_task_id=source_task_id,
        threshold=threshold,
        source_error_rate=error_rate,
    )


def atc_estimate(
    test_scores: Sequence[float], thresholds: Sequence[AtcThreshold]
) -> float:
    """Mean over sources of the fraction of target scores at or above threshold."""
    if len(test_scores) == 0:
        raise DataError("atc_estimate needs at least one target score")
    if len(thresholds) == 0:
        raise DataError("atc_estimate needs at least one threshold")
    scores = np.asarray(test_scores, dtype=float)
    fracs = [float(np.mean(scores >= t.threshold)) for t in thresholds]
    return float(np.mean(fracs))


def oracle_l(
    test_correctness: Sequence[float],
    true_accuracy: float,
    l: int,
    trials: int = ORACLE_TRIALS,
    seed: int = 0,
) -> tuple[float, list[float]]:
    """Expected |sample accuracy - true accuracy| when labeling l examples.

    Each trial draws l examples uniformly without replacement and measures
    accuracy on them.  Returns the mean absolute deviation (same [0, 1] scale
    as the accuracies) and the per-trial sample accuracies.
    """
    correctness = np.asarray(test_correctness, dtype=float)
    n = correctness.size
    if l < 1:
        raise DataError("l must be >= 1")
    if l > n:
        raise DataError(f"l={l} exceeds the population size {n}")
    if trials < 1:
        raise DataError("trials must be >= 1")

    rng = np.random.default_rng(seed)
    means = np.empty(trials)
    chunk = max(1, _CHUNK_ELEMENTS // n)
    done = 0
    while done < trials:
        block = min(chunk, trials - done)
        u = rng.random((block, n))
        if l == n:
            idx = np.broadcast_to(np.arange(n), (block, n))
        else:
            # the l smallest uniforms select a uniform l-subset per row
            idx = np.argpartition(u, l, axis=1)[:, :l]
        means[done : done + block] = correctness[idx].mean(axis=1)
        done += block
    maes = np.abs(means - true_accuracy)
    return float(maes.mean()), [float(m) for m in means]


def oracle_bracket(method_mae: float, curve: OracleCurve) -> int | None:
    """Largest annotation budget l whose expected MAE still exceeds the method's.

    None when the method is worse than even the smallest budget.  The curve
    must be non-increasing in l.
    """
    if not curve.levels:
        raise DataError("empty oracle curve")
    maes = [mae for _, mae, _ in curve.levels]
    if any(b > a for a, b in zip(maes, maes[1:])):
        raise NumericError("oracle curve not monotone")
    bracket = None
    for l, mae, _ in curve.levels:
        if mae >= method_mae:
            bracket = l
    return bracket
