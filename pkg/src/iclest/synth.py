"""Synthetic closed-set corpus generator for desk-scale verification.

Each task draws a latent difficulty; per-example confidences are drawn around
it, and gold labels are assigned so that the realized dataset accuracy equals
the mean confidence plus a Gaussian calibration error clipped to [0, 1],
within a 1/m rounding.  With zero calibration noise the corpus is perfectly
calibrated, so mean-confidence estimation is near-exact by construction.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from iclest.errors import DataError
from iclest.records import (
    CorpusManifest,
    ExampleRecord,
    build_manifest,
    group_runs,
    write_records,
)

LABELS = ("A", "B", "C", "D")
MAX_SIGMA = 0.2

# confidences stay strictly above 1/|labels| so the argmax is unique, and
# below 1 so the normalized score never saturates
CONF_LO = 0.26
CONF_HI = 0.995


@dataclass(frozen=True)
class SynthConfig:
    n_tasks: int = 40
    prompts_per_task: int = 3
    m: int = 500
    sigma: float = 0.05
    seed: int = 0
    shots: int = 4
    d_c: int = 100
    model_id: str = "synth-model"
    collection_id: str = "synth"

    def validate(self) -> None:
        if self.n_tasks < 10:
            raise DataError("n_tasks must be >= 10")
        if self.prompts_per_task < 1:
            raise DataError("prompts_per_task must be >= 1")
        if self.m < 1:
            raise DataError("m must be >= 1")
        if self.sigma < 0 or self.sigma > MAX_SIGMA:
            raise DataError(
                f"sigma={self.sigma} cannot be clipped sensibly; use [0, {MAX_SIGMA}]"
            )


def synth_generate(
    config: SynthConfig, records_path: str | os.PathLike
) -> CorpusManifest:
    """Write a record file and return the matching manifest."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    records: list[ExampleRecord] = []

    for t in range(config.n_tasks):
        task_id = f"task{t:03d}"
        task_mean = rng.uniform(0.3, 0.9)
        task_spread = rng.uniform(0.05, 0.15)
        for p in range(config.prompts_per_task):
            prompt_id = f"p{p:02d}"
            prompt_mean = float(
                np.clip(task_mean + rng.normal(0.0, 0.02), CONF_LO + 0.02, CONF_HI)
            )
            conf = np.clip(
                rng.normal(prompt_mean, task_spread, size=config.m), CONF_LO, CONF_HI
            )
            intended = float(np.clip(conf.mean() + rng.normal(0.0, config.sigma), 0, 1))
            n_correct = int(round(intended * config.m))
            correct = np.zeros(config.m, dtype=bool)
            correct[rng.permutation(config.m)[:n_correct]] = True

            gold_idx = rng.integers(0, len(LABELS), size=config.m)
            for i in range(config.m):
                gold = LABELS[gold_idx[i]]
                if correct[i]:
                    top = gold
                else:
                    others = [lab for lab in LABELS if lab != gold]
                    top = others[int(rng.integers(0, len(others)))]
                rest = (1.0 - conf[i]) / (len(LABELS) - 1)
                label_probs = {lab: (conf[i] if lab == top else rest) for lab in LABELS}
                records.append(
                    ExampleRecord(
                        task_id=task_id,
                        prompt_id=prompt_id,
                        shots=config.shots,
                        split="test",
                        example_id=f"e{i:05d}",
                        formulation="closed_set",
                        label_probs={k: float(v) for k, v in label_probs.items()},
                        gold_label=gold,
                    )
                )

    write_records(records, records_path)
    runs = group_runs(
        records, model_id=config.model_id, collection_id=config.collection_id
    )
    return build_manifest(runs, d_c=config.d_c, d_e=config.d_c, seed=config.seed)
