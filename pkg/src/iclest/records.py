"""Record schemas, ingestion, grouping, and persistence.

Record files are newline-delimited JSON, one object per line, UTF-8, with a
required schema version field "v": 1.  Keys match the ExampleRecord field
names.  Probabilities may alternatively be supplied as log-probabilities via
the key "label_logprobs"; ingestion exponentiates once and keeps
linear-domain values.  Unknown keys are ignored.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

from iclest.errors import DataError
from iclest.features import FEATURE_KINDS, FeatureVector, MetaSample

SCHEMA_VERSION = 1
FORMULATIONS = ("closed_set", "open_ended")
SPLITS = ("train", "test")


@dataclass(frozen=True)
class ExampleRecord:
    """One model output for one test example."""

    task_id: str
    prompt_id: str
    shots: int
    split: str
    example_id: str
    formulation: str
    label_probs: Optional[dict[str, float]] = None
    gold_label: Optional[str] = None
    token_logprobs: Optional[list[float]] = None
    generated_text: Optional[str] = None
    gold_answers: Optional[list[str]] = None
    embedding: Optional[list[float]] = None

    @property
    def is_labeled(self) -> bool:
        if self.formulation == "closed_set":
            return self.gold_label is not None
        return bool(self.gold_answers)


@dataclass(frozen=True)
class DatasetRun:
    """All test-split records for one (task, prompt) pair plus metadata."""

    task_id: str
    prompt_id: str
    shots: int
    model_id: str
    collection_id: str
    formulation: str
    records: tuple[ExampleRecord, ...]
    n_labeled: int

    @property
    def size(self) -> int:
        return len(self.records)

    @property
    def is_labeled(self) -> bool:
        return self.n_labeled == len(self.records)


@dataclass(frozen=True)
class CorpusManifest:
    """A coherent collection of runs for one model and dataset collection."""

    model_id: str
    collection_id: str
    formulation: str
    d_c: int
    d_e: int
    seed: int
    runs: tuple[DatasetRun, ...]

    def __post_init__(self):
        for run in self.runs:
            if (
                run.model_id != self.model_id
                or run.collection_id != self.collection_id
                or run.formulation != self.formulation
            ):
                raise DataError(
                    f"run ({run.task_id}, {run.prompt_id}) does not match manifest "
                    f"(model_id={self.model_id}, collection_id={self.collection_id}, "
                    f"formulation={self.formulation})"
                )

    @property
    def task_ids(self) -> list[str]:
        return sorted({run.task_id for run in self.runs})


def _ids(obj: dict) -> str:
    return (
        f"task_id={obj.get('task_id')!r} prompt_id={obj.get('prompt_id')!r} "
        f"example_id={obj.get('example_id')!r}"
    )


def _check_finite_list(values, name: str, ids: str) -> list[float]:
    out = []
    for v in values:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise DataError(f"non-finite or non-numeric value in {name} ({ids})")
        out.append(float(v))
    return out


def record_from_dict(obj: dict, where: str = "") -> ExampleRecord:
    """Validate one parsed JSON object and build an ExampleRecord."""
    ids = _ids(obj)
    ctx = f"{where}: " if where else ""

    if obj.get("v") != SCHEMA_VERSION:
        raise DataError(f"{ctx}missing or unsupported schema version 'v' ({ids})")

    for key in ("task_id", "prompt_id", "example_id", "split", "formulation"):
        if not isinstance(obj.get(key), str) or not obj[key]:
            raise DataError(f"{ctx}field {key!r} missing or not a string ({ids})")
    shots = obj.get("shots")
    if not isinstance(shots, int) or isinstance(shots, bool) or shots < 0:
        raise DataError(f"{ctx}field 'shots' must be a nonnegative integer ({ids})")
    split = obj["split"]
    if split not in SPLITS:
        raise DataError(f"{ctx}split must be one of {SPLITS} ({ids})")
    formulation = obj["formulation"]
    if formulation not in FORMULATIONS:
        raise DataError(f"{ctx}formulation must be one of {FORMULATIONS} ({ids})")

    label_probs = obj.get("label_probs")
    label_logprobs = obj.get("label_logprobs")
    if label_probs is not None and label_logprobs is not None:
        raise DataError(f"{ctx}both label_probs and label_logprobs present ({ids})")
    if label_logprobs is not None:
        if not isinstance(label_logprobs, dict) or not label_logprobs:
            raise DataError(f"{ctx}label_logprobs must be a nonempty object ({ids})")
        label_probs = {
            k: math.exp(v)
            for k, v in zip(
                label_logprobs.keys(),
                _check_finite_list(label_logprobs.values(), "label_logprobs", ids),
            )
        }

    token_logprobs = obj.get("token_logprobs")
    embedding = obj.get("embedding")
    gold_answers = obj.get("gold_answers")
    gold_label = obj.get("gold_label")

    if formulation == "closed_set":
        if not isinstance(label_probs, dict) or not label_probs:
            raise DataError(f"{ctx}label_probs required for closed_set records ({ids})")
        probs = dict(
            zip(label_probs.keys(), _check_finite_list(label_probs.values(), "label_probs", ids))
        )
        if any(v < 0 for v in probs.values()):
            raise DataError(f"{ctx}label_probs has negative values ({ids})")
        if all(v == 0.0 for v in probs.values()):
            raise DataError(f"{ctx}label_probs are all zero ({ids})")
        label_probs = probs
        token_logprobs = None
    else:
        if not isinstance(token_logprobs, list) or not token_logprobs:
            raise DataError(f"{ctx}token_logprobs required for open_ended records ({ids})")
        token_logprobs = _check_finite_list(token_logprobs, "token_logprobs", ids)
        if any(v > 0 for v in token_logprobs):
            raise DataError(f"{ctx}token_logprobs must all be <= 0 ({ids})")
        label_probs = None

    if gold_label is not None and not isinstance(gold_label, str):
        raise DataError(f"{ctx}gold_label must be a string ({ids})")
    if gold_answers is not None:
        if not isinstance(gold_answers, list) or not all(
            isinstance(a, str) for a in gold_answers
        ):
            raise DataError(f"{ctx}gold_answers must be a list of strings ({ids})")
    if embedding is not None:
        if not isinstance(embedding, list) or not embedding:
            raise DataError(f"{ctx}embedding must be a nonempty list ({ids})")
        embedding = _check_finite_list(embedding, "embedding", ids)
    generated_text = obj.get("generated_text")
    if generated_text is not None and not isinstance(generated_text, str):
        raise DataError(f"{ctx}generated_text must be a string ({ids})")

    return ExampleRecord(
        task_id=obj["task_id"],
        prompt_id=obj["prompt_id"],
        shots=shots,
        split=split,
        example_id=obj["example_id"],
        formulation=formulation,
        label_probs=label_probs,
        gold_label=gold_label,
        token_logprobs=token_logprobs,
        generated_text=generated_text,
        gold_answers=gold_answers,
        embedding=embedding,
    )


def record_to_dict(rec: ExampleRecord) -> dict:
    """Inverse of record_from_dict; omits absent optional fields."""
    obj = {
        "v": SCHEMA_VERSION,
        "task_id": rec.task_id,
        "prompt_id": rec.prompt_id,
        "shots": rec.shots,
        "split": rec.split,
        "example_id": rec.example_id,
        "formulation": rec.formulation,
    }
    for key in (
        "label_probs",
        "gold_label",
        "token_logprobs",
        "generated_text",
        "gold_answers",
        "embedding",
    ):
        value = getattr(rec, key)
        if value is not None:
            obj[key] = value
    return obj


def read_records(path: str | os.PathLike) -> list[ExampleRecord]:
    """Read and validate a newline-delimited record file, preserving order."""
    if not os.path.exists(path):
        raise DataError(f"record file not found: {path}")
    records: list[ExampleRecord] = []
    seen: set[tuple[str, str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: malformed JSON line ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{where}: line is not a JSON object")
            rec = record_from_dict(obj, where=where)
            key = (rec.task_id, rec.prompt_id, rec.example_id)
            if key in seen:
                raise DataError(
                    f"{where}: duplicate (task_id, prompt_id, example_id) = {key}"
                )
            seen.add(key)
            records.append(rec)
    return records


def write_records(records: Sequence[ExampleRecord], path: str | os.PathLike) -> None:
    """Write records in the newline-delimited format read_records accepts."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_dict(rec)) + "\n")


def group_runs(
    records: Sequence[ExampleRecord],
    model_id: str = "",
    collection_id: str = "",
) -> list[DatasetRun]:
    """Partition test-split records into one DatasetRun per (task, prompt).

    Train-split records are accepted but do not form runs.  Output is ordered
    lexicographically by (task_id, prompt_id).
    """
    groups: dict[tuple[str, str], list[ExampleRecord]] = {}
    seen: set[tuple[str, str, str]] = set()
    for rec in records:
        key = (rec.task_id, rec.prompt_id, rec.example_id)
        if key in seen:
            raise DataError(f"duplicate (task_id, prompt_id, example_id) = {key}")
        seen.add(key)
        if rec.split != "test":
            continue
        groups.setdefault((rec.task_id, rec.prompt_id), []).append(rec)

    runs = []
    for (task_id, prompt_id) in sorted(groups):
        members = groups[(task_id, prompt_id)]
        formulations = {r.formulation for r in members}
        if len(formulations) > 1:
            raise DataError(
                f"run ({task_id}, {prompt_id}) mixes formulations {sorted(formulations)}"
            )
        shot_values = {r.shots for r in members}
        if len(shot_values) > 1:
            raise DataError(
                f"run ({task_id}, {prompt_id}) mixes shot counts {sorted(shot_values)}"
            )
        emb_lengths = {len(r.embedding) for r in members if r.embedding is not None}
        if len(emb_lengths) > 1:
            raise DataError(
                f"run ({task_id}, {prompt_id}) has embeddings of lengths "
                f"{sorted(emb_lengths)}"
            )
        runs.append(
            DatasetRun(
                task_id=task_id,
                prompt_id=prompt_id,
                shots=members[0].shots,
                model_id=model_id,
                collection_id=collection_id,
                formulation=members[0].formulation,
                records=tuple(members),
                n_labeled=sum(1 for r in members if r.is_labeled),
            )
        )
    return runs


def build_manifest(
    runs: Sequence[DatasetRun], d_c: int, d_e: int, seed: int
) -> CorpusManifest:
    """Assemble a manifest from runs that must agree on model/collection/formulation."""
    if not runs:
        raise DataError("cannot build a manifest from zero runs")
    formulations = {r.formulation for r in runs}
    if len(formulations) > 1:
        raise DataError(f"runs mix formulations {sorted(formulations)}")
    models = {r.model_id for r in runs}
    collections = {r.collection_id for r in runs}
    if len(models) > 1 or len(collections) > 1:
        raise DataError("runs mix model_id or collection_id values")
    return CorpusManifest(
        model_id=runs[0].model_id,
        collection_id=runs[0].collection_id,
        formulation=runs[0].formulation,
        d_c=d_c,
        d_e=d_e,
        seed=seed,
        runs=tuple(runs),
    )


def load_manifest(
    records_path: str | os.PathLike,
    d_c: int,
    d_e: int,
    seed: int,
    model_id: str = "",
    collection_id: str = "",
) -> CorpusManifest:
    """read_records + group_runs + build_manifest in one step."""
    records = read_records(records_path)
    runs = group_runs(records, model_id=model_id, collection_id=collection_id)
    return build_manifest(runs, d_c=d_c, d_e=d_e, seed=seed)


def write_feature_store(samples: Sequence[MetaSample], path: str | os.PathLike) -> None:
    """Persist meta-samples as newline-delimited JSON.

    Rows carry exactly {task_id, prompt_id, kind, features, accuracy}; all
    samples must share one feature dimensionality.
    """
    if samples:
        dim = len(samples[0].features.values)
        for s in samples:
            if len(s.features.values) != dim:
                raise DataError(
                    f"feature dimension mismatch on write: run ({s.task_id}, "
                    f"{s.prompt_id}) has {len(s.features.values)}, expected {dim}"
                )
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            row = {
                "task_id": s.task_id,
                "prompt_id": s.prompt_id,
                "kind": s.features.kind,
                "features": list(s.features.values),
                "accuracy": s.accuracy,
            }
            fh.write(json.dumps(row) + "\n")


def read_feature_store(path: str | os.PathLike) -> list[MetaSample]:
    """Read meta-samples written by write_feature_store."""
    if not os.path.exists(path):
        raise DataError(f"feature store not found: {path}")
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: malformed JSON line ({exc.msg})") from exc
            for key in ("task_id", "prompt_id", "kind", "features"):
                if key not in row:
                    raise DataError(f"{where}: missing key {key!r}")
            if row["kind"] not in FEATURE_KINDS:
                raise DataError(f"{where}: unknown feature kind {row['kind']!r}")
            features = _check_finite_list(
                row["features"], "features", f"line {lineno}"
            )
            accuracy = row.get("accuracy")
            if accuracy is not None:
                accuracy = float(accuracy)
            samples.append(
                MetaSample(
                    features=FeatureVector(kind=row["kind"], values=tuple(features)),
                    accuracy=accuracy,
                    task_id=row["task_id"],
                    prompt_id=row["prompt_id"],
                )
            )
    return samples
