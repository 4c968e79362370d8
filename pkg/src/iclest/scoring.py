"""Per-example confidence scores, correctness metrics, and dataset accuracy.

Closed-set confidence is the normalized probability of the argmax label over
the label space; open-ended confidence is the summed log-probability of the
generated tokens.  Correctness uses exact match for closed-set tasks and
token-level F1 (max over gold answers) for open-ended tasks.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from iclest.errors import DataError
from iclest.records import DatasetRun, ExampleRecord

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


@dataclass(frozen=True)
class ScoredExample:
    example_id: str
    confidence: float
    correctness: Optional[float] = None


def closed_set_confidence(label_probs: Mapping[str, float]) -> float:
    """max probability / total probability over the label space.

    Invariant under rescaling all probabilities by a positive constant; the
    result lies in [1/n_labels, 1].
    """
    if len(label_probs) < 2:
        raise DataError("degenerate label space: need at least 2 labels")
    total = float(sum(label_probs.values()))
    if total <= 0.0:
        raise DataError("all label probabilities are zero")
    if any(v < 0 for v in label_probs.values()):
        raise DataError("negative label probability")
    return float(max(label_probs.values())) / total


def closed_set_prediction(label_probs: Mapping[str, float]) -> str:
    """Argmax label; ties go to the lexicographically smallest label."""
    if len(label_probs) < 2:
        raise DataError("degenerate label space: need at least 2 labels")
    if float(sum(label_probs.values())) <= 0.0:
        raise DataError("all label probabilities are zero")
    best = max(sorted(label_probs), key=lambda k: label_probs[k])
    return best


def open_ended_confidence(token_logprobs: Sequence[float]) -> float:
    """Sum of per-token log-probabilities of the generated sequence (<= 0)."""
    if len(token_logprobs) == 0:
        raise DataError("empty sequence")
    return float(sum(token_logprobs))


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation and articles (a/an/the), collapse whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def exact_match(prediction: str, gold: str) -> int:
    """1 iff the normalized strings are identical."""
    return int(normalize_answer(prediction) == normalize_answer(gold))


def token_f1(prediction: str, golds: Sequence[str]) -> float:
    """Best token-multiset F1 of the prediction against any gold answer."""
    if not golds:
        raise DataError("token_f1 needs at least one gold answer")
    return max(_f1_single(prediction, g) for g in golds)


def _f1_single(prediction: str, gold: str) -> float:
    pred_tokens = normalize_answer(prediction).split()
    gold_tokens = normalize_answer(gold).split()
    if not pred_tokens or not gold_tokens:
        return float(pred_tokens == gold_tokens)
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def record_confidence(rec: ExampleRecord) -> float:
    """Dispatch to the formulation-appropriate confidence score."""
    if rec.formulation == "closed_set":
        return closed_set_confidence(rec.label_probs)
    return open_ended_confidence(rec.token_logprobs)


def record_correctness(rec: ExampleRecord) -> Optional[float]:
    """EM against gold_label (closed-set) or max-F1 against gold_answers.

    Returns None when the record carries no gold annotation.
    """
    if rec.formulation == "closed_set":
        if rec.gold_label is None:
            return None
        return float(exact_match(closed_set_prediction(rec.label_probs), rec.gold_label))
    if not rec.gold_answers:
        return None
    return token_f1(rec.generated_text or "", rec.gold_answers)


def score_record(rec: ExampleRecord) -> ScoredExample:
    return ScoredExample(
        example_id=rec.example_id,
        confidence=record_confidence(rec),
        correctness=record_correctness(rec),
    )


def run_scores(run: DatasetRun) -> list[float]:
    """Per-record confidence scores of a run, in record order."""
    return [record_confidence(rec) for rec in run.records]


def run_correctness(run: DatasetRun) -> list[float]:
    """Per-record correctness of a fully labeled run, in record order."""
    out = []
    for rec in run.records:
        c = record_correctness(rec)
        if c is None:
            raise DataError(
                f"record {rec.example_id!r} in run ({run.task_id}, {run.prompt_id}) "
                "is unlabeled"
            )
        out.append(c)
    return out


def dataset_accuracy(run: DatasetRun) -> float:
    """Mean per-example correctness of a fully labeled run."""
    correctness = run_correctness(run)
    return float(sum(correctness) / len(correctness))
