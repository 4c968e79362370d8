"""Prompt construction: seeded sampling from the training pool plus templating.

Templates are data files (templates/*.txt) with {question}, {options}, and
{answer} slots.  Demonstrations come only from the training split; the query
block ends with the bare answer cue for the model to complete.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from icl_extractor.datasets import LETTERS, DatasetExample, ToyDataset

TEMPLATE_IDS = ("mcqa", "cbqa")


@dataclass(frozen=True)
class PromptSpec:
    template_id: str
    k: int
    example_ids: tuple[str, ...]
    seed: int


def load_template(template_id: str) -> str:
    if template_id not in TEMPLATE_IDS:
        raise ValueError(f"unknown template {template_id!r}")
    ref = resources.files("icl_extractor") / "templates" / f"{template_id}.txt"
    return ref.read_text(encoding="utf-8")


def template_for(dataset: ToyDataset) -> str:
    return "mcqa" if dataset.formulation == "closed_set" else "cbqa"


def build_prompts(
    dataset: ToyDataset, k: int, n_prompts: int, seed: int
) -> list[PromptSpec]:
    """n_prompts independent draws of k training examples, without replacement
    within each prompt."""
    if k < 0:
        raise ValueError("k must be >= 0")
    pool = dataset.split_ids("train")
    if len(pool) < k:
        raise ValueError(f"training pool has {len(pool)} examples, need k={k}")
    rng = np.random.default_rng(seed)
    template_id = template_for(dataset)
    specs = []
    for _ in range(n_prompts):
        if k == 0:
            ids: tuple[str, ...] = ()
        else:
            picks = rng.choice(len(pool), size=k, replace=False)
            ids = tuple(pool[i] for i in picks)
        specs.append(PromptSpec(template_id=template_id, k=k, example_ids=ids, seed=seed))
    return specs


def _options_block(ex: DatasetExample) -> str:
    return "\n".join(
        f"({LETTERS[i]}) {text}" for i, text in enumerate(ex.options)
    )


def render_example(template: str, ex: DatasetExample) -> str:
    """One demonstration block, answer included."""
    if ex.options is not None:
        answer = f"({ex.label}) {ex.gold_text}"
        return template.format(
            question=ex.question, options=_options_block(ex), answer=answer
        )
    return template.format(question=ex.question, answer=ex.gold_text)


def render_query(template: str, ex: DatasetExample) -> str:
    """The block for the example under test, ending with the bare answer cue."""
    if ex.options is not None:
        block = template.format(
            question=ex.question, options=_options_block(ex), answer=""
        )
    else:
        block = template.format(question=ex.question, answer="")
    return block.rstrip(" ")


def render_demos(dataset: ToyDataset, spec: PromptSpec) -> str:
    """All demonstration blocks, blank-line separated; empty for k=0.

    Refuses test-split examples: demonstrations may come only from the
    training pool.
    """
    template = load_template(spec.template_id)
    by_id = {ex.id: ex for ex in dataset.examples}
    test_ids = set(dataset.split_ids("test"))
    blocks = []
    for ex_id in spec.example_ids:
        if ex_id in test_ids:
            raise ValueError(f"prompt uses test-split example {ex_id!r}")
        blocks.append(render_example(template, by_id[ex_id]))
    return "\n\n".join(blocks)


def render_context(dataset: ToyDataset, spec: PromptSpec, query: DatasetExample) -> str:
    """Demonstrations followed by the query block, blank-line separated."""
    demos = render_demos(dataset, spec)
    query_block = render_query(load_template(spec.template_id), query)
    return f"{demos}\n\n{query_block}" if demos else query_block
