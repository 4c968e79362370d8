"""Evaluation protocol: meta-samples, grouped 5-fold CV, MAE, and ablations.

Meta-samples are per (task, prompt) run.  Folds group by task so every prompt
of a task sits on one side of each train/test split; MAE is reported in
percentage points.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from iclest.baselines import (
    ORACLE_GRID,
    ORACLE_TRIALS,
    OracleCurve,
    atc_estimate,
    atc_threshold,
    avg_baseline,
    ace_estimate,
    oracle_bracket,
    oracle_l,
)
from iclest.errors import DataError
from iclest.features import (
    FeatureVector,
    MetaSample,
    concat_features,
    confidence_profile,
    confidence_vector,
    fit_pca,
    mean_embedding,
    project_pca,
)
from iclest.metamodels import (
    GbtConfig,
    MlpConfig,
    gbt_fit,
    knn_fit,
    mlp_fit,
)
from iclest.records import CorpusManifest, DatasetRun
from iclest.scoring import dataset_accuracy, run_correctness, run_scores

METHODS = ("mlp", "knn", "gbt", "avg", "ace", "atc")
META_MODEL_METHODS = ("mlp", "knn", "gbt")
N_FOLDS = 5

__all__ = [
    "FoldPlan",
    "SettingResult",
    "make_folds",
    "mae",
    "build_meta_samples",
    "run_setting",
    "oracle_bracket",
    "OracleCurve",
    "oracle_curve_for_runs",
    "ablate_m",
    "ablate_shots",
    "AblationGrid",
    "METHODS",
    "N_FOLDS",
]


@dataclass(frozen=True)
class FoldPlan:
    """Task-to-fold assignment for grouped cross-validation."""

    fold_assignments: dict[str, int]
    n_folds: int
    seed: int

    def tasks_in_fold(self, fold: int) -> list[str]:
        return sorted(t for t, f in self.fold_assignments.items() if f == fold)


@dataclass(frozen=True)
class SettingResult:
    """MAE summary of one (feature kind, method) evaluation."""

    model_id: str
    collection_id: str
    feature_kind: Optional[str]
    method: str
    fold_maes: tuple[float, ...]  # percentage points, one per fold
    mean_mae: float
    accuracy_mean: float  # percentage points across (task, prompt) runs
    accuracy_std: float  # population std, percentage points
    oracle_bracket: Optional[int] = None


def make_folds(task_ids: Sequence[str], n_folds: int = N_FOLDS, seed: int = 0) -> FoldPlan:
    """Seeded shuffle of the sorted task ids, assigned round-robin to folds."""
    tasks = sorted(set(task_ids))
    if n_folds < 2:
        raise DataError("n_folds must be >= 2")
    if len(tasks) < n_folds:
        raise DataError(f"need at least {n_folds} tasks, got {len(tasks)}")
    rng = np.random.default_rng(seed)
    shuffled = [tasks[i] for i in rng.permutation(len(tasks))]
    return FoldPlan(
        fold_assignments={task: i % n_folds for i, task in enumerate(shuffled)},
        n_folds=n_folds,
        seed=seed,
    )


def mae(predicted: Sequence[float], actual: Sequence[float]) -> float:
    """Mean absolute error in percentage points (inputs on the [0, 1] scale)."""
    if len(predicted) == 0 or len(predicted) != len(actual):
        raise DataError(
            f"mae needs equal nonempty lengths, got {len(predicted)} and {len(actual)}"
        )
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    return float(np.mean(np.abs(p - a))) * 100.0


def build_meta_samples(
    runs: Sequence[DatasetRun],
    feature_kind: str = "conf",
    d_c: int = 100,
    pca=None,
    d_e: Optional[int] = None,
) -> list[MetaSample]:
    """One MetaSample per run; accuracy present only for fully labeled runs.

    For "embed"/"ce", a PCA model is fit on all runs' mean embeddings unless
    one is supplied; its output dimension d_e defaults to d_c and is capped
    at what the data supports (runs - 1, embedding width).
    """
    if not runs:
        raise DataError("no runs to featurize")
    formulations = {r.formulation for r in runs}
    if len(formulations) > 1:
        raise DataError(f"runs mix formulations {sorted(formulations)}")
    if feature_kind not in ("conf", "embed", "ce"):
        raise DataError(f"unknown feature kind {feature_kind!r}")

    embeds = {}
    if feature_kind in ("embed", "ce"):
        for run in runs:
            if any(rec.embedding is None for rec in run.records):
                raise DataError(
                    f"feature kind {feature_kind!r} requires embeddings; run "
                    f"({run.task_id}, {run.prompt_id}) lacks them"
                )
            embeds[(run.task_id, run.prompt_id)] = mean_embedding(run)
        if pca is None:
            want = d_e if d_e is not None else d_c
            h = len(next(iter(embeds.values())))
            feasible = min(len(runs) - 1, h)
            pca = fit_pca(list(embeds.values()), min(want, feasible))

    samples = []
    for run in runs:
        accuracy = dataset_accuracy(run) if run.is_labeled else None
        if feature_kind == "conf":
            vec = confidence_vector(confidence_profile(run_scores(run)), d_c)
            features = FeatureVector(kind="conf", values=vec.values)
        elif feature_kind == "embed":
            projected = project_pca(pca, embeds[(run.task_id, run.prompt_id)])
            features = FeatureVector(kind="embed", values=tuple(projected))
        else:
            vec = confidence_vector(confidence_profile(run_scores(run)), d_c)
            projected = project_pca(pca, embeds[(run.task_id, run.prompt_id)])
            features = concat_features(vec, projected)
        samples.append(
            MetaSample(
                features=features,
                accuracy=accuracy,
                task_id=run.task_id,
                prompt_id=run.prompt_id,
                formulation=run.formulation,
            )
        )
    return samples


@dataclass
class _ProtocolData:
    """Everything one evaluation needs, keyed by (task_id, prompt_id).

    `samples` carry the (possibly rebuilt) features and the full-run target
    accuracies.  `test_scores` are the scores available on the unlabeled test
    side (subsampled during the m ablation); `source_scores` and
    `source_correctness` come from the fully labeled in-distribution side.
    """

    samples: list[MetaSample]
    formulation: str
    test_scores: dict[tuple[str, str], list[float]]
    source_scores: dict[tuple[str, str], list[float]]
    source_correctness: dict[tuple[str, str], list[float]]


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def _fit_and_predict(method, train, test, fold_seed):
    if method == "knn":
        model = knn_fit(train)
    elif method == "mlp":
        model = mlp_fit(train, MlpConfig(seed=fold_seed))
    elif method == "gbt":
        model = gbt_fit(train, GbtConfig(seed=fold_seed))
    else:
        raise DataError(f"unknown meta-model method {method!r}")
    return [model.predict(s.features) for s in test]


def _evaluate_folds(data: _ProtocolData, plan: FoldPlan, method: str, seed: int):
    fold_maes = []
    for fold in range(plan.n_folds):
        test_tasks = set(plan.tasks_in_fold(fold))
        train = [s for s in data.samples if s.task_id not in test_tasks]
        test = [s for s in data.samples if s.task_id in test_tasks]
        if not train or not test:
            raise DataError(f"fold {fold} has an empty train or test side")

        if method in META_MODEL_METHODS:
            preds = _fit_and_predict(method, train, test, _fold_seed(seed, fold))
        elif method == "avg":
            estimate = avg_baseline([s.accuracy for s in train])
            preds = [estimate] * len(test)
        elif method == "ace":
            preds = [
                ace_estimate(
                    data.test_scores[(s.task_id, s.prompt_id)], data.formulation
                )
                for s in test
            ]
        elif method == "atc":
            thresholds = [
                atc_threshold(
                    data.source_scores[(s.task_id, s.prompt_id)],
                    data.source_correctness[(s.task_id, s.prompt_id)],
                    source_task_id=s.task_id,
                )
                for s in train
            ]
            preds = [
                atc_estimate(data.test_scores[(s.task_id, s.prompt_id)], thresholds)
                for s in test
            ]
        else:
            raise DataError(f"unknown method {method!r}")

        fold_maes.append(mae(preds, [s.accuracy for s in test]))
    return fold_maes


def _protocol_data(
    manifest: CorpusManifest,
    feature_kind: str,
    method: str,
    samples: Optional[list[MetaSample]] = None,
    test_scores: Optional[dict] = None,
) -> _ProtocolData:
    for run in manifest.runs:
        if not run.is_labeled:
            raise DataError(
                f"evaluation requires true accuracies; run ({run.task_id}, "
                f"{run.prompt_id}) is not fully labeled"
            )
    if samples is None:
        samples = build_meta_samples(
            manifest.runs, feature_kind, manifest.d_c, d_e=manifest.d_e
        )
    scores = {}
    correctness = {}
    need_scores = method == "atc" or (method == "ace" and test_scores is None)
    if need_scores:
        for run in manifest.runs:
            key = (run.task_id, run.prompt_id)
            scores[key] = run_scores(run)
            if method == "atc":
                correctness[key] = run_correctness(run)
    return _ProtocolData(
        samples=samples,
        formulation=manifest.formulation,
        test_scores=test_scores if test_scores is not None else scores,
        source_scores=scores,
        source_correctness=correctness,
    )


def run_setting(
    manifest: CorpusManifest,
    feature_kind: str,
    method: str,
    seed: int = 0,
    n_folds: int = N_FOLDS,
    plan: Optional[FoldPlan] = None,
    _samples: Optional[list[MetaSample]] = None,
    _test_scores: Optional[dict] = None,
) -> SettingResult:
    """Grouped k-fold evaluation of one method; returns per-fold and mean MAE."""
    if method not in METHODS:
        raise DataError(f"method must be one of {METHODS}, got {method!r}")
    data = _protocol_data(manifest, feature_kind, method, _samples, _test_scores)
    if plan is None:
        plan = make_folds([s.task_id for s in data.samples], n_folds, seed)
    fold_maes = _evaluate_folds(data, plan, method, seed)

    accuracies = np.array([s.accuracy for s in data.samples])
    return SettingResult(
        model_id=manifest.model_id,
        collection_id=manifest.collection_id,
        feature_kind=feature_kind if method in META_MODEL_METHODS else None,
        method=method,
        fold_maes=tuple(fold_maes),
        mean_mae=float(np.mean(fold_maes)),
        accuracy_mean=float(accuracies.mean()) * 100.0,
        accuracy_std=float(accuracies.std()) * 100.0,
    )


def _run_subseed(seed: int, task_id: str, prompt_id: str) -> int:
    tag = zlib.crc32(f"{task_id}|{prompt_id}".encode("utf-8"))
    return int(np.random.SeedSequence([seed, tag]).generate_state(1)[0])


def _subsample_run(run: DatasetRun, m: int, seed: int) -> DatasetRun:
    rng = np.random.default_rng(_run_subseed(seed, run.task_id, run.prompt_id))
    keep = np.sort(rng.permutation(run.size)[:m])
    records = tuple(run.records[i] for i in keep)
    return replace(
        run, records=records, n_labeled=sum(1 for r in records if r.is_labeled)
    )


def oracle_curve_for_runs(
    runs: Sequence[DatasetRun],
    levels: Sequence[int] = ORACLE_GRID,
    trials: int = ORACLE_TRIALS,
    seed: int = 0,
) -> OracleCurve:
    """Average per-run expected oracle MAE across runs, in percentage points.

    Levels larger than the smallest run are dropped (they are infeasible).
    """
    feasible = sorted({int(l) for l in levels if l <= min(r.size for r in runs)})
    if not feasible:
        raise DataError("no feasible oracle levels for these run sizes")
    ordered = sorted(runs, key=lambda r: (r.task_id, r.prompt_id))
    per_level = []
    for l in feasible:
        maes = []
        for i, run in enumerate(ordered):
            correctness = run_correctness(run)
            true_acc = float(np.mean(correctness))
            sub_seed = int(np.random.SeedSequence([seed, i, l]).generate_state(1)[0])
            expected, _ = oracle_l(correctness, true_acc, l, trials, sub_seed)
            maes.append(expected)
        per_level.append((l, float(np.mean(maes)) * 100.0, trials))
    return OracleCurve(levels=tuple(per_level))


@dataclass(frozen=True)
class AblationGrid:
    """Mean MAE per (m, d_c) cell, percentage points."""

    m_values: tuple[int, ...]
    d_c_values: tuple[int, ...]
    maes: tuple[tuple[float, ...], ...]  # rows follow m_values, columns d_c_values


def ablate_m(
    manifest: CorpusManifest,
    m_values: Sequence[int],
    d_c_values: Sequence[int],
    method: str = "gbt",
    seed: int = 0,
    feature_kind: str = "conf",
    n_folds: int = N_FOLDS,
) -> AblationGrid:
    """Rebuild test-side features from m subsampled records at each d_c.

    Target accuracies stay those of the full runs; ATC thresholds keep the
    full labeled source data.
    """
    min_size = min(run.size for run in manifest.runs)
    for m in m_values:
        if m < 1 or m > min_size:
            raise DataError(f"m={m} outside [1, {min_size}] for this corpus")

    plan = make_folds([r.task_id for r in manifest.runs], n_folds, seed)
    full_accuracy = {
        (r.task_id, r.prompt_id): dataset_accuracy(r) for r in manifest.runs
    }

    rows = []
    for m in m_values:
        subruns = [_subsample_run(run, int(m), seed) for run in manifest.runs]
        sub_scores = {
            (r.task_id, r.prompt_id): run_scores(r) for r in subruns
        }
        row = []
        for d_c in d_c_values:
            samples = build_meta_samples(subruns, feature_kind, int(d_c))
            samples = [
                replace(s, accuracy=full_accuracy[(s.task_id, s.prompt_id)])
                for s in samples
            ]
            result = run_setting(
                manifest,
                feature_kind,
                method,
                seed=seed,
                n_folds=n_folds,
                plan=plan,
                _samples=samples,
                _test_scores=sub_scores,
            )
            row.append(result.mean_mae)
        rows.append(tuple(row))
    return AblationGrid(
        m_values=tuple(int(m) for m in m_values),
        d_c_values=tuple(int(d) for d in d_c_values),
        maes=tuple(rows),
    )


def ablate_shots(
    manifest: CorpusManifest,
    shot_filters: Sequence[set[int]],
    method: str = "gbt",
    seed: int = 0,
    feature_kind: str = "conf",
    n_folds: int = N_FOLDS,
) -> list[SettingResult]:
    """Evaluate restricted to runs whose shot count falls in each filter."""
    results = []
    for shots in shot_filters:
        runs = [r for r in manifest.runs if r.shots in shots]
        if not runs:
            raise DataError(f"no runs match shot filter {sorted(shots)}")
        sub_manifest = CorpusManifest(
            model_id=manifest.model_id,
            collection_id=manifest.collection_id,
            formulation=manifest.formulation,
            d_c=manifest.d_c,
            d_e=manifest.d_e,
            seed=manifest.seed,
            runs=tuple(runs),
        )
        results.append(
            run_setting(sub_manifest, feature_kind, method, seed=seed, n_folds=n_folds)
        )
    return results
