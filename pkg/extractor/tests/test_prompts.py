"""Prompt sampling and template rendering."""

import pytest

from icl_extractor.datasets import make_toy_closed, make_toy_open
from icl_extractor.prompts import (
    PromptSpec,
    build_prompts,
    load_template,
    render_context,
    render_demos,
    render_query,
)


class TestBuildPrompts:
    def test_pool_of_k_single_possible_prompt(self):
        dataset = make_toy_closed(seed=0, n_train=2)
        specs = build_prompts(dataset, k=2, n_prompts=5, seed=1)
        assert all(sorted(s.example_ids) == ["q00", "q01"] for s in specs)

    def test_same_seed_same_prompts(self):
        dataset = make_toy_closed(seed=0)
        a = build_prompts(dataset, k=3, n_prompts=4, seed=7)
        b = build_prompts(dataset, k=3, n_prompts=4, seed=7)
        assert a == b

    def test_zero_shot(self):
        dataset = make_toy_closed(seed=0)
        [spec] = build_prompts(dataset, k=0, n_prompts=1, seed=0)
        assert spec.example_ids == ()
        context = render_context(dataset, spec, dataset.split_examples("test")[0])
        # header only: exactly one question block, ending with the answer cue
        assert context.endswith("Answer:")
        assert context.count("Answer:") == 1

    def test_pool_too_small_rejected(self):
        dataset = make_toy_closed(seed=0, n_train=2)
        with pytest.raises(ValueError, match="pool"):
            build_prompts(dataset, k=3, n_prompts=1, seed=0)

    def test_prompts_only_from_training_split(self):
        dataset = make_toy_closed(seed=0)
        train = set(dataset.split_ids("train"))
        test = set(dataset.split_ids("test"))
        for spec in build_prompts(dataset, k=4, n_prompts=20, seed=3):
            assert set(spec.example_ids) <= train
            assert not set(spec.example_ids) & test

    def test_no_replacement_within_prompt(self):
        dataset = make_toy_closed(seed=0)
        for spec in build_prompts(dataset, k=4, n_prompts=20, seed=5):
            assert len(set(spec.example_ids)) == spec.k


class TestRendering:
    def test_mcqa_block_shape(self):
        dataset = make_toy_closed(seed=0)
        template = load_template("mcqa")
        ex = dataset.examples[0]  # the sky question, training split
        block = render_query(template, ex)
        lines = block.split("\n")
        assert lines[0] == "what color is the sky ?"
        assert [line[:4] for line in lines[1:5]] == ["(A) ", "(B) ", "(C) ", "(D) "]
        assert lines[5] == ""
        assert lines[6] == "Answer:"
        assert block.endswith("Answer:")

    def test_demo_block_contains_gold_answer(self):
        dataset = make_toy_closed(seed=0)
        spec = PromptSpec(template_id="mcqa", k=1, example_ids=("q00",), seed=0)
        demos = render_demos(dataset, spec)
        ex = dataset.examples[0]
        assert f"Answer: ({ex.label}) {ex.gold_text}" in demos

    def test_blocks_joined_by_blank_lines(self):
        dataset = make_toy_closed(seed=0)
        spec = PromptSpec(template_id="mcqa", k=2, example_ids=("q00", "q01"), seed=0)
        query = dataset.split_examples("test")[0]
        context = render_context(dataset, spec, query)
        blocks = context.split("\n\n")
        # 2 demos x (question+options, answer line) + query question + cue
        assert len(blocks) == 6
        assert blocks[1].startswith("Answer: (")
        assert blocks[-1] == "Answer:"

    def test_cbqa_template(self):
        dataset = make_toy_open(seed=0)
        spec = PromptSpec(template_id="cbqa", k=1, example_ids=("q00",), seed=0)
        query = dataset.split_examples("test")[0]
        context = render_context(dataset, spec, query)
        assert "Answer: blue" in context
        assert context.endswith("Answer:")
        assert "(A)" not in context

    def test_test_split_demo_rejected(self):
        dataset = make_toy_closed(seed=0)
        spec = PromptSpec(template_id="mcqa", k=1, example_ids=("q09",), seed=0)
        with pytest.raises(ValueError, match="test-split"):
            render_demos(dataset, spec)
