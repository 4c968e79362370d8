"""Model-facing operations: option scoring, greedy decoding, embeddings."""

from __future__ import annotations

import math
from typing import Sequence

from icl_extractor.datasets import LETTERS
from icl_extractor.model import STOP_TOKEN, CausalLM


def score_closed_set(
    model: CausalLM, prompt: str, question: str, options: Sequence[str]
) -> dict[str, float]:
    """Per-option sequence probability after the prompt, keyed by letter.

    Emitted unnormalized; consumers normalize across the label space.
    """
    if not options:
        raise ValueError("no options to score")
    context = _join(prompt, question)
    probs = {}
    for i, text in enumerate(options):
        if not text or not text.strip():
            raise ValueError(f"missing label text for option {LETTERS[i]}")
        continuation = f"({LETTERS[i]}) {text}"
        probs[LETTERS[i]] = math.exp(model.continuation_logprob(context, continuation))
    return probs


def generate_open_ended(
    model: CausalLM, prompt: str, question: str, max_tokens: int = 16
) -> tuple[str, list[float]]:
    """Greedy decode until the stop token or max_tokens; never empty."""
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    context = _join(prompt, question)
    tokens: list[str] = []
    logprobs: list[float] = []
    running = context
    for _ in range(max_tokens):
        dist = model.distribution(running)
        # argmax with lexicographic tie-break for determinism
        best = max(sorted(dist), key=lambda t: dist[t])
        if best == STOP_TOKEN:
            break
        tokens.append(best)
        logprobs.append(float(math.log(dist[best])))
        running = running + " " + best
    if not tokens:
        raise ValueError("empty generation: model stopped before any token")
    return " ".join(tokens), logprobs


def extract_embedding(model: CausalLM, prompt: str, question: str) -> list[float]:
    """Final-layer state at the last input position; length = hidden size."""
    vector = model.hidden_state(_join(prompt, question))
    if len(vector) != model.hidden_size:
        raise ValueError(
            f"model returned a length-{len(vector)} state, expected {model.hidden_size}"
        )
    return vector


def _join(prompt: str, question: str) -> str:
    return f"{prompt}\n\n{question}" if prompt else question
