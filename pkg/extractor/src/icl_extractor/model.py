"""Minimal causal-LM scoring protocol and a deterministic stub implementation.

The stub is a bigram model over whitespace tokens with one context feature:
tokens already present in the context get a multiplicative boost, so prompts
and questions actually shift the scores.  Everything is exactly computable by
hand from the transition table, which the tests rely on.
"""

from __future__ import annotations

import zlib
from collections import Counter
from typing import Mapping, Protocol, Sequence

import numpy as np

STOP_TOKEN = "\n"


class CausalLM(Protocol):
    """What the extraction client needs from a model."""

    hidden_size: int

    def distribution(self, context: str) -> dict[str, float]:
        """Next-token probabilities given the context."""
        ...

    def continuation_logprob(self, context: str, continuation: str) -> float:
        """Log-probability of the continuation tokens after the context."""
        ...

    def hidden_state(self, context: str) -> list[float]:
        """Final-layer state at the last context position."""
        ...


def tokenize(text: str) -> list[str]:
    return text.split()


class StubLM:
    """Bigram stub with context-occurrence boosting.

    P(tok | context) is proportional to transitions[last][tok] times
    `context_boost` raised to the number of times tok already occurs in the
    context (capped at BOOST_CAP, so repeated mentions saturate).  Unknown
    previous tokens fall back to a uniform distribution over the vocabulary;
    unknown continuation tokens are an error.
    """

    BOOST_CAP = 4

    def __init__(
        self,
        transitions: Mapping[str, Mapping[str, float]],
        context_boost: float = 2.0,
        hidden_size: int = 8,
        embed_table: Mapping[str, Sequence[float]] | None = None,
    ):
        self.transitions = {p: dict(d) for p, d in transitions.items()}
        self.context_boost = float(context_boost)
        self.hidden_size = int(hidden_size)
        self.vocab = sorted(
            set(self.transitions) | {t for d in self.transitions.values() for t in d}
        )
        self._embed_table = (
            {t: [float(v) for v in vec] for t, vec in embed_table.items()}
            if embed_table is not None
            else None
        )
        self._embed_cache: dict[str, np.ndarray] = {}

    def _candidates(self, prev: str | None) -> dict[str, float]:
        if prev is not None and prev in self.transitions:
            return self.transitions[prev]
        return {t: 1.0 for t in self.vocab}

    def distribution(self, context: str) -> dict[str, float]:
        tokens = tokenize(context)
        prev = tokens[-1] if tokens else None
        counts = Counter(tokens)
        weights = {
            t: w * self.context_boost ** min(counts[t], self.BOOST_CAP)
            for t, w in self._candidates(prev).items()
            if w > 0
        }
        total = sum(weights.values())
        if total <= 0:
            raise ValueError(f"no continuations available after {prev!r}")
        return {t: w / total for t, w in sorted(weights.items())}

    def continuation_logprob(self, context: str, continuation: str) -> float:
        tokens = tokenize(continuation)
        if not tokens:
            raise ValueError("empty continuation")
        running = context
        total = 0.0
        for tok in tokens:
            dist = self.distribution(running)
            if tok not in dist:
                raise ValueError(f"unknown continuation token {tok!r}")
            total += float(np.log(dist[tok]))
            running = running + " " + tok
        return total

    def _token_vector(self, token: str) -> np.ndarray:
        if token not in self._embed_cache:
            if self._embed_table is not None:
                vec = np.asarray(
                    self._embed_table.get(token, [0.0] * self.hidden_size), dtype=float
                )
            else:
                rng = np.random.default_rng(zlib.crc32(token.encode("utf-8")))
                vec = rng.standard_normal(self.hidden_size)
            self._embed_cache[token] = vec
        return self._embed_cache[token]

    def hidden_state(self, context: str) -> list[float]:
        state = np.zeros(self.hidden_size)
        for tok in tokenize(context):
            state = state + self._token_vector(tok)
        return [float(v) for v in state]
