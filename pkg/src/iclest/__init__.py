"""Estimate dataset-level in-context-learning accuracy from confidence profiles.

The package ingests per-example model outputs (label probabilities or
generated token log-probs), turns each (task, prompt) run into a fixed-length
confidence feature vector, trains meta-models on observed (features, accuracy)
pairs, and benchmarks them against reference estimators under grouped 5-fold
cross-validation.
"""

__version__ = "0.1.0"

from iclest.errors import DataError, NumericError

__all__ = ["DataError", "NumericError", "__version__"]
