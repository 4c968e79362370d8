"""Option scoring, greedy decoding, and embedding extraction."""

import math

import pytest

from icl_extractor.extract import (
    extract_embedding,
    generate_open_ended,
    score_closed_set,
)
from icl_extractor.model import STOP_TOKEN, StubLM


def two_option_stub():
    return StubLM(
        {
            "Answer:": {"(A)": 1.0, "(B)": 1.0},
            "(A)": {"x": 1.0, "y": 1.0},
            "(B)": {"x": 1.0, "y": 1.0},
        },
        context_boost=2.0,
    )


class TestScoreClosedSet:
    def test_hand_computed_two_label_probs(self):
        model = two_option_stub()
        # "x" occurs twice in the question block, "y" once: after either
        # letter, P(x) = 4/6 and P(y) = 2/6; the letter step is 1/2 each
        # (both letters appear once in the block).
        question = "q x ?\n(A) x\n(B) y\n\nAnswer:"
        probs = score_closed_set(model, "", question, ["x", "y"])
        assert probs["A"] == pytest.approx(0.5 * 4.0 / 6.0)
        assert probs["B"] == pytest.approx(0.5 * 2.0 / 6.0)

    def test_deterministic_across_calls(self):
        model = two_option_stub()
        question = "q ?\n(A) x\n(B) y\n\nAnswer:"
        assert score_closed_set(model, "", question, ["x", "y"]) == score_closed_set(
            model, "", question, ["x", "y"]
        )

    def test_missing_label_text_rejected(self):
        model = two_option_stub()
        with pytest.raises(ValueError, match="missing label text"):
            score_closed_set(model, "", "q ?\n\nAnswer:", ["x", "  "])

    def test_unnormalized_probabilities(self):
        model = two_option_stub()
        question = "q ?\n(A) x\n(B) y\n\nAnswer:"
        probs = score_closed_set(model, "", question, ["x", "y"])
        assert 0 < sum(probs.values()) < 1  # sequence probs, not a distribution


class TestGenerateOpenEnded:
    def test_table_lookup_generation(self):
        model = StubLM(
            {"s": {"m": 2.0, "n": 1.0}, "m": {STOP_TOKEN: 1.0}}, context_boost=1.0
        )
        text, logprobs = generate_open_ended(model, "", "s", max_tokens=5)
        assert text == "m"
        assert logprobs == [pytest.approx(math.log(2.0 / 3.0))]

    def test_max_tokens_one(self):
        model = StubLM({"s": {"m": 1.0}, "m": {"m": 1.0}})
        text, logprobs = generate_open_ended(model, "", "s", max_tokens=1)
        assert text == "m"
        assert len(logprobs) == 1

    def test_logprobs_nonpositive(self):
        model = StubLM({"s": {"m": 1.0, "n": 2.0}, "m": {"n": 1.0}, "n": {"m": 1.0}})
        _, logprobs = generate_open_ended(model, "", "s", max_tokens=4)
        assert all(lp <= 0 for lp in logprobs)

    def test_immediate_stop_rejected(self):
        model = StubLM({"s": {STOP_TOKEN: 1.0}})
        with pytest.raises(ValueError, match="empty generation"):
            generate_open_ended(model, "", "s", max_tokens=3)

    def test_greedy_tie_breaks_lexicographically(self):
        model = StubLM({"s": {"b": 1.0, "a": 1.0}, "a": {STOP_TOKEN: 1.0}})
        text, _ = generate_open_ended(model, "", "s", max_tokens=2)
        assert text == "a"


class TestExtractEmbedding:
    def test_known_vector_from_injected_table(self):
        table = {"q": [1.0, 0.0], "?": [0.0, 1.0], "Answer:": [1.0, 1.0]}
        model = StubLM({"a": {"b": 1.0}}, hidden_size=2, embed_table=table)
        assert extract_embedding(model, "", "q ? Answer:") == [2.0, 2.0]

    def test_prompt_affects_state(self):
        model = StubLM({"a": {"b": 1.0}}, hidden_size=4)
        with_prompt = extract_embedding(model, "demo block", "q ?")
        without = extract_embedding(model, "", "q ?")
        assert with_prompt != without
