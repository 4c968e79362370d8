"""Confidence scores, exact match, token F1, and dataset accuracy."""

import math

import pytest
from hypothesis import given, strategies as st

from iclest.errors import DataError
from iclest.records import DatasetRun, ExampleRecord
from iclest.scoring import (
    closed_set_confidence,
    closed_set_prediction,
    dataset_accuracy,
    exact_match,
    normalize_answer,
    open_ended_confidence,
    token_f1,
)


def brute_force_normalized_max(probs: dict) -> float:
    """Independent oracle: normalize to sum 1 first, then take the max."""
    total = sum(probs.values())
    normalized = {k: v / total for k, v in probs.items()}
    return max(normalized.values())


class TestClosedSetConfidence:
    def test_uniform_four_way(self):
        assert closed_set_confidence({"A": 0.25, "B": 0.25, "C": 0.25, "D": 0.25}) == 0.25

    def test_already_normalized(self):
        assert closed_set_confidence({"A": 0.6, "B": 0.3, "C": 0.1}) == pytest.approx(0.6)

    def test_unnormalized_matches_oracle(self):
        probs = {"A": 0.3, "B": 0.1}
        assert closed_set_confidence(probs) == pytest.approx(
            brute_force_normalized_max(probs)
        )
        assert closed_set_confidence(probs) == pytest.approx(0.75)

    def test_single_label_rejected(self):
        with pytest.raises(DataError, match="degenerate"):
            closed_set_confidence({"A": 1.0})

    def test_all_zero_rejected(self):
        with pytest.raises(DataError):
            closed_set_confidence({"A": 0.0, "B": 0.0})

    @given(
        st.dictionaries(
            st.sampled_from(list("ABCDEFGH")),
            st.one_of(
                st.just(0.0), st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)
            ),
            min_size=2,
            max_size=8,
        ).filter(lambda d: sum(d.values()) > 0),
        st.floats(min_value=1e-3, max_value=1e3, allow_nan=False),
    )
    def test_scale_invariance_and_bounds(self, probs, c):
        base = closed_set_confidence(probs)
        scaled = closed_set_confidence({k: v * c for k, v in probs.items()})
        assert scaled == pytest.approx(base, rel=1e-9)
        assert 1.0 / len(probs) - 1e-12 <= base <= 1.0 + 1e-12
        assert closed_set_prediction(probs) == closed_set_prediction(
            {k: v * c for k, v in probs.items()}
        )


class TestClosedSetPrediction:
    def test_argmax(self):
        assert closed_set_prediction({"A": 0.9, "B": 0.1}) == "A"

    def test_tie_break_lexicographic(self):
        assert closed_set_prediction({"A": 0.5, "B": 0.5}) == "A"
        assert closed_set_prediction({"B": 0.5, "A": 0.5}) == "A"

    def test_middle_winner(self):
        assert closed_set_prediction({"X": 0.2, "Y": 0.5, "Z": 0.3}) == "Y"


class TestOpenEndedConfidence:
    def test_product_of_probabilities(self):
        got = open_ended_confidence([math.log(0.5), math.log(0.5)])
        assert got == pytest.approx(math.log(0.25))

    def test_certain_single_token(self):
        assert open_ended_confidence([0.0]) == 0.0

    def test_summation(self):
        assert open_ended_confidence([-1.0, -2.0, -0.5]) == -3.5

    def test_empty_rejected(self):
        with pytest.raises(DataError, match="empty sequence"):
            open_ended_confidence([])

    def test_additive_over_concatenation(self):
        a, b = [-0.25, -1.5], [-0.75]
        assert open_ended_confidence(a + b) == pytest.approx(
            open_ended_confidence(a) + open_ended_confidence(b)
        )


class TestExactMatch:
    def test_identical(self):
        assert exact_match("(C)", "(C)") == 1

    def test_article_stripping(self):
        assert exact_match("the cat", "cat") == 1

    def test_mismatch(self):
        assert exact_match("dog", "cat") == 0

    def test_label_identifier_normalization(self):
        assert exact_match("(C)", "C") == 1
        assert normalize_answer("(C)") == "c"


class TestTokenF1:
    def test_identical_after_normalization(self):
        assert token_f1("cleveland cavaliers", ["Cleveland Cavaliers"]) == 1.0

    def test_half_overlap(self):
        # hand count: pred {x, b}, gold {b, c}: precision = recall = 1/2
        assert token_f1("x b", ["b c"]) == pytest.approx(0.5)

    def test_article_stripped_before_overlap(self):
        # "a" is an article, so pred reduces to {b}: precision 1, recall 1/2
        assert token_f1("a b", ["b c"]) == pytest.approx(2.0 / 3.0)

    def test_max_over_golds(self):
        # best gold "x z": precision 1, recall 1/2, F1 = 2/3
        assert token_f1("x", ["y", "x z"]) == pytest.approx(2.0 / 3.0)

    def test_empty_cases(self):
        assert token_f1("", [""]) == 1.0
        assert token_f1("", ["something"]) == 0.0
        assert token_f1("something", [""]) == 0.0

    def test_no_golds_rejected(self):
        with pytest.raises(DataError):
            token_f1("x", [])

    @given(
        st.text(alphabet="xyzw ", max_size=20),
        st.text(alphabet="xyzw ", max_size=20),
    )
    def test_single_gold_symmetry(self, a, b):
        assert token_f1(a, [b]) == pytest.approx(token_f1(b, [a]))

    def test_multiset_counts_matter(self):
        # pred {q, q}, gold {q}: precision 1/2, recall 1, F1 = 2/3
        assert token_f1("q q", ["q"]) == pytest.approx(2.0 / 3.0)


def closed_record(example_id, probs, gold):
    return ExampleRecord(
        task_id="t",
        prompt_id="p",
        shots=4,
        split="test",
        example_id=example_id,
        formulation="closed_set",
        label_probs=probs,
        gold_label=gold,
    )


def open_record(example_id, text, golds):
    return ExampleRecord(
        task_id="t",
        prompt_id="p",
        shots=4,
        split="test",
        example_id=example_id,
        formulation="open_ended",
        token_logprobs=[-1.0],
        generated_text=text,
        gold_answers=golds,
    )


def run_of(records, formulation="closed_set"):
    return DatasetRun(
        task_id="t",
        prompt_id="p",
        shots=4,
        model_id="",
        collection_id="",
        formulation=formulation,
        records=tuple(records),
        n_labeled=sum(1 for r in records if r.is_labeled),
    )


class TestDatasetAccuracy:
    def test_all_correct(self):
        records = [
            closed_record(f"e{i}", {"A": 0.9, "B": 0.1}, "A") for i in range(5)
        ]
        assert dataset_accuracy(run_of(records)) == 1.0

    def test_em_mean(self):
        golds = ["A", "B", "A", "B"]
        records = [
            closed_record(f"e{i}", {"A": 0.9, "B": 0.1}, g) for i, g in enumerate(golds)
        ]
        assert dataset_accuracy(run_of(records)) == 0.5

    def test_f1_mean(self):
        records = [
            open_record("e0", "x y", ["x y"]),       # 1.0
            open_record("e1", "x q", ["x z"]),       # 0.5
            open_record("e2", "q", ["x"]),           # 0.0
        ]
        run = run_of(records, formulation="open_ended")
        assert dataset_accuracy(run) == pytest.approx(0.5)

    def test_unlabeled_record_rejected(self):
        records = [
            closed_record("e0", {"A": 0.9, "B": 0.1}, "A"),
            closed_record("e1", {"A": 0.9, "B": 0.1}, None),
        ]
        with pytest.raises(DataError, match="unlabeled"):
            dataset_accuracy(run_of(records))
