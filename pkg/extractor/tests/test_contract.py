"""Cross-component contract: emitted files must satisfy the consumer toolkit.

The consumer is exercised only through its public surfaces: the record-file
format on disk and the `iclest ingest` command.
"""

import json
import subprocess
import sys

import pytest

from icl_extractor.datasets import make_toy_closed, make_toy_model, make_toy_open
from icl_extractor.runner import ExtractionConfig, run_extraction


def ingest(path):
    return subprocess.run(
        [sys.executable, "-m", "iclest.cli", "ingest", "--records", str(path)],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="module")
def closed_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("contract") / "records.jsonl"
    dataset = make_toy_closed(seed=1)  # 10 examples: 4 train, 6 test
    model = make_toy_model("closed_set")
    config = ExtractionConfig(k=2, n_prompts=3, seed=1, with_embeddings=True)
    specs = run_extraction(model, dataset, config, out)
    return dataset, specs, out


class TestClosedSetContract:
    def test_consumer_validates_with_zero_errors(self, closed_run):
        _, _, path = closed_run
        result = ingest(path)
        assert result.returncode == 0, result.stderr
        assert "records=18" in result.stdout  # 3 prompts x 6 test examples
        assert "runs=3" in result.stdout

    def test_normalized_confidences_in_bounds(self, closed_run):
        _, _, path = closed_run
        for line in path.read_text().strip().split("\n"):
            rec = json.loads(line)
            probs = rec["label_probs"]
            confidence = max(probs.values()) / sum(probs.values())
            assert 1.0 / len(probs) - 1e-12 <= confidence <= 1.0 + 1e-12

    def test_prompts_never_use_test_split(self, closed_run):
        dataset, specs, _ = closed_run
        test_ids = set(dataset.split_ids("test"))
        train_ids = set(dataset.split_ids("train"))
        for spec in specs:
            assert set(spec.example_ids) <= train_ids
            assert not set(spec.example_ids) & test_ids

    def test_embeddings_constant_length(self, closed_run):
        _, _, path = closed_run
        lengths = {
            len(json.loads(line)["embedding"])
            for line in path.read_text().strip().split("\n")
        }
        assert lengths == {8}

    def test_gold_labels_present(self, closed_run):
        _, _, path = closed_run
        for line in path.read_text().strip().split("\n"):
            rec = json.loads(line)
            assert rec["gold_label"] in "ABCD"
            assert rec["v"] == 1


class TestOpenEndedContract:
    def test_consumer_validates_open_ended(self, tmp_path):
        out = tmp_path / "open_records.jsonl"
        dataset = make_toy_open(seed=2)
        model = make_toy_model("open_ended")
        run_extraction(model, dataset, ExtractionConfig(k=2, n_prompts=2, seed=2), out)
        result = ingest(out)
        assert result.returncode == 0, result.stderr
        for line in out.read_text().strip().split("\n"):
            rec = json.loads(line)
            assert rec["generated_text"]
            assert all(lp <= 0 for lp in rec["token_logprobs"])
            assert rec["gold_answers"]


class TestCliPath:
    def test_make_toy_then_run_then_ingest(self, tmp_path):
        from icl_extractor.cli import main

        toy = tmp_path / "toy.jsonl"
        records = tmp_path / "records.jsonl"
        prompts = tmp_path / "prompts.json"
        assert main(["make-toy", "--out", str(toy), "--seed", "3"]) == 0
        assert (
            main(
                ["run", "--dataset", str(toy), "--out", str(records), "--k", "2",
                 "--prompts", "2", "--seed", "3", "--embeddings",
                 "--prompts-out", str(prompts)]
            )
            == 0
        )
        assert ingest(records).returncode == 0
        spec_doc = json.loads(prompts.read_text())
        assert len(spec_doc) == 2
        assert all(len(s["example_ids"]) == 2 for s in spec_doc)

    def test_run_deterministic_bytes(self, tmp_path):
        from icl_extractor.cli import main

        toy = tmp_path / "toy.jsonl"
        assert main(["make-toy", "--out", str(toy), "--seed", "4"]) == 0
        blobs = []
        for name in ("a.jsonl", "b.jsonl"):
            out = tmp_path / name
            assert (
                main(["run", "--dataset", str(toy), "--out", str(out), "--seed", "4"])
                == 0
            )
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]
