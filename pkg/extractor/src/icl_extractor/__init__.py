"""Extraction client: prompts a causal LM and emits confidence record files.

The client is model-agnostic behind a small scoring protocol (per-token
distributions, continuation log-probabilities, hidden states).  A
deterministic stub LM ships for demos and tests; any real model can be used
by implementing the same protocol.
"""

__version__ = "0.1.0"
