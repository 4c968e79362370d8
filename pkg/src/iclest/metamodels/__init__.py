"""Regressors mapping dataset-level feature vectors to estimated accuracy.

Three architectures: k-nearest-neighbor regression, a two-layer perceptron,
and gradient-boosted regression trees, plus seeded random hyperparameter
search with grouped inner cross-validation.
"""

from iclest.metamodels.common import (
    MetaModel,
    load_model,
    save_model,
    stack_samples,
)
from iclest.metamodels.gbt import GbtConfig, GbtModel, gbt_fit, gbt_predict
from iclest.metamodels.knn import KnnModel, knn_fit, knn_predict
from iclest.metamodels.mlp import MlpConfig, MlpModel, mlp_fit, mlp_predict
from iclest.metamodels.search import (
    GBT_SEARCH_SPACE,
    MLP_SEARCH_SPACE,
    SearchResult,
    random_search,
)

__all__ = [
    "MetaModel",
    "KnnModel",
    "knn_fit",
    "knn_predict",
    "MlpConfig",
    "MlpModel",
    "mlp_fit",
    "mlp_predict",
    "GbtConfig",
    "GbtModel",
    "gbt_fit",
    "gbt_predict",
    "random_search",
    "SearchResult",
    "GBT_SEARCH_SPACE",
    "MLP_SEARCH_SPACE",
    "stack_samples",
    "save_model",
    "load_model",
]
