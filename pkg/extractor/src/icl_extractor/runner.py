"""Runs a model over every (prompt, test example) pair and writes record files.

Output lines follow the consumer's record schema: one JSON object per line,
"v": 1, per-example label probabilities (closed-set, unnormalized) or
generated tokens with log-probs (open-ended), plus optional embeddings.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from icl_extractor.datasets import ToyDataset
from icl_extractor.extract import (
    extract_embedding,
    generate_open_ended,
    score_closed_set,
)
from icl_extractor.model import CausalLM
from icl_extractor.prompts import (
    PromptSpec,
    build_prompts,
    load_template,
    render_demos,
    render_query,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExtractionConfig:
    k: int = 2
    n_prompts: int = 2
    seed: int = 0
    max_tokens: int = 8
    with_embeddings: bool = False


def extraction_records(
    model: CausalLM, dataset: ToyDataset, config: ExtractionConfig
) -> tuple[list[dict], list[PromptSpec]]:
    """All record dicts for the dataset's test split, plus the prompts used."""
    specs = build_prompts(dataset, config.k, config.n_prompts, config.seed)
    template = load_template(specs[0].template_id if specs else "mcqa")
    records = []
    for p_idx, spec in enumerate(specs):
        demos = render_demos(dataset, spec)
        prompt_id = f"p{p_idx:02d}"
        for ex in dataset.split_examples("test"):
            query = render_query(template, ex)
            rec: dict = {
                "v": SCHEMA_VERSION,
                "task_id": dataset.name,
                "prompt_id": prompt_id,
                "shots": config.k,
                "split": "test",
                "example_id": ex.id,
                "formulation": dataset.formulation,
            }
            if dataset.formulation == "closed_set":
                rec["label_probs"] = score_closed_set(model, demos, query, ex.options)
                rec["gold_label"] = ex.label
            else:
                text, logprobs = generate_open_ended(
                    model, demos, query, config.max_tokens
                )
                rec["generated_text"] = text
                rec["token_logprobs"] = logprobs
                rec["gold_answers"] = list(ex.answers)
            if config.with_embeddings:
                rec["embedding"] = extract_embedding(model, demos, query)
            records.append(rec)
    return records, specs


def run_extraction(
    model: CausalLM,
    dataset: ToyDataset,
    config: ExtractionConfig,
    out_path: str | os.PathLike,
    prompts_path: str | os.PathLike | None = None,
) -> list[PromptSpec]:
    """Write the record file (and optionally the prompt specs used)."""
    records, specs = extraction_records(model, dataset, config)
    with open(out_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    if prompts_path is not None:
        with open(prompts_path, "w", encoding="utf-8") as fh:
            json.dump(
                [
                    {
                        "template_id": s.template_id,
                        "k": s.k,
                        "example_ids": list(s.example_ids),
                        "seed": s.seed,
                    }
                    for s in specs
                ],
                fh,
                indent=2,
            )
    return specs
