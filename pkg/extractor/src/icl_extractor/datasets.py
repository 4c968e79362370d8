"""Toy dataset format: one JSON object per line with an explicit train/test split.

Fields: id, question, split, and either options + label (closed-set) or
answers (open-ended).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from icl_extractor.model import STOP_TOKEN, StubLM

LETTERS = "ABCDEFGH"

# question/answer pairs for the bundled color-world demo; the palette is
# wider than the answer set so option lists only partially overlap any prompt
_COLOR_QA = [
    ("what color is the sky ?", "blue"),
    ("what color is grass ?", "green"),
    ("what color is blood ?", "red"),
    ("what color is snow ?", "white"),
    ("what color is coal ?", "black"),
    ("what color is the sun ?", "yellow"),
    ("what color is a carrot ?", "orange"),
    ("what color is an eggplant ?", "purple"),
    ("what color is a flamingo ?", "pink"),
    ("what color is mud ?", "brown"),
]
_COLORS = sorted(
    {a for _, a in _COLOR_QA}
    | {"gray", "silver", "gold", "cyan", "magenta", "beige"}
)


@dataclass(frozen=True)
class DatasetExample:
    id: str
    question: str
    split: str  # "train" or "test"
    options: Optional[tuple[str, ...]] = None  # closed-set
    label: Optional[str] = None  # gold option letter, closed-set
    answers: Optional[tuple[str, ...]] = None  # open-ended

    @property
    def gold_text(self) -> str:
        if self.options is not None:
            return self.options[LETTERS.index(self.label)]
        return self.answers[0]


@dataclass(frozen=True)
class ToyDataset:
    name: str
    formulation: str  # "closed_set" or "open_ended"
    examples: tuple[DatasetExample, ...]

    def split_ids(self, split: str) -> list[str]:
        return [ex.id for ex in self.examples if ex.split == split]

    def split_examples(self, split: str) -> list[DatasetExample]:
        return [ex for ex in self.examples if ex.split == split]


def load_dataset(path: str | os.PathLike, name: str | None = None) -> ToyDataset:
    examples = []
    formulation = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            for key in ("id", "question", "split"):
                if key not in obj:
                    raise ValueError(f"{path}:{lineno}: missing field {key!r}")
            if "options" in obj:
                kind = "closed_set"
                ex = DatasetExample(
                    id=str(obj["id"]),
                    question=obj["question"],
                    split=obj["split"],
                    options=tuple(obj["options"]),
                    label=obj["label"],
                )
                if ex.label not in LETTERS[: len(ex.options)]:
                    raise ValueError(f"{path}:{lineno}: label {ex.label!r} out of range")
            else:
                kind = "open_ended"
                ex = DatasetExample(
                    id=str(obj["id"]),
                    question=obj["question"],
                    split=obj["split"],
                    answers=tuple(obj["answers"]),
                )
            formulation = formulation or kind
            if kind != formulation:
                raise ValueError(f"{path}:{lineno}: mixed example kinds in one dataset")
            examples.append(ex)
    if not examples:
        raise ValueError(f"{path}: empty dataset")
    return ToyDataset(
        name=name or os.path.splitext(os.path.basename(path))[0],
        formulation=formulation,
        examples=tuple(examples),
    )


def save_dataset(dataset: ToyDataset, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in dataset.examples:
            obj = {"id": ex.id, "question": ex.question, "split": ex.split}
            if ex.options is not None:
                obj["options"] = list(ex.options)
                obj["label"] = ex.label
            else:
                obj["answers"] = list(ex.answers)
            fh.write(json.dumps(obj) + "\n")


def make_toy_closed(seed: int = 0, n_train: int = 4, name: str = "toy-colors") -> ToyDataset:
    """10 four-option color questions; the first n_train are the training pool."""
    rng = np.random.default_rng(seed)
    examples = []
    for i, (question, answer) in enumerate(_COLOR_QA):
        distractors = [c for c in _COLORS if c != answer]
        picks = [distractors[j] for j in rng.permutation(len(distractors))[:3]]
        options = picks + [answer]
        options = [options[j] for j in rng.permutation(4)]
        examples.append(
            DatasetExample(
                id=f"q{i:02d}",
                question=question,
                split="train" if i < n_train else "test",
                options=tuple(options),
                label=LETTERS[options.index(answer)],
            )
        )
    return ToyDataset(name=name, formulation="closed_set", examples=tuple(examples))


def make_toy_open(seed: int = 0, n_train: int = 4, name: str = "toy-colors-open") -> ToyDataset:
    del seed  # layout is fixed; kept for signature symmetry with make_toy_closed
    examples = [
        DatasetExample(
            id=f"q{i:02d}",
            question=question,
            split="train" if i < n_train else "test",
            answers=(answer,),
        )
        for i, (question, answer) in enumerate(_COLOR_QA)
    ]
    return ToyDataset(name=name, formulation="open_ended", examples=tuple(examples))


def make_toy_model(
    formulation: str = "closed_set",
    hidden_size: int = 8,
    context_boost: float = 2.0,
) -> StubLM:
    """Stub LM whose transition table covers the color world.

    Closed-set: after "Answer:" the model proposes option letters, and after a
    letter any color, so full option continuations "(B) blue" are scorable.
    Open-ended: after "Answer:" it proposes colors directly and stops after
    one.
    """
    transitions: dict[str, dict[str, float]] = {}
    if formulation == "closed_set":
        letter_tokens = [f"({letter})" for letter in LETTERS[:4]]
        transitions["Answer:"] = {t: 1.0 for t in letter_tokens}
        for tok in letter_tokens:
            transitions[tok] = {c: 1.0 for c in _COLORS}
    else:
        transitions["Answer:"] = {c: 1.0 for c in _COLORS}
    for color in _COLORS:
        transitions[color] = {STOP_TOKEN: 1.0}
    return StubLM(
        transitions, context_boost=context_boost, hidden_size=hidden_size
    )
