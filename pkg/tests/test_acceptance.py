"""Acceptance criteria for the primary component.

Each test enforces one criterion at its stated tolerance and time budget and
prints a single pass/fail line (run with `pytest -s tests/test_acceptance.py`
to see them).  The synthetic end-to-end corpus is shared between the
benchmark criterion and the leakage audit.
"""

import itertools
import json
import time

import numpy as np
import pytest

from iclest.baselines import oracle_l
from iclest.benchmark import ablate_m, build_meta_samples, make_folds
from iclest.cli import main
from iclest.features import confidence_profile, confidence_vector
from iclest.metamodels import GbtConfig, MlpConfig, gbt_fit, knn_fit, knn_predict
from iclest.metamodels.mlp import init_params, loss_and_grads
from iclest.records import read_records
from iclest.report import run_benchmark
from iclest.synth import SynthConfig, synth_generate
from tests.test_metamodels import make_samples


def announce(criterion: int, passed: bool, detail: str, elapsed: float, limit: float):
    status = "PASS" if passed and elapsed < limit else "FAIL"
    print(f"criterion {criterion:2d} {status}: {detail} ({elapsed:.1f}s < {limit:.0f}s)")
    assert passed, detail
    assert elapsed < limit, f"criterion {criterion} exceeded {limit}s ({elapsed:.1f}s)"


@pytest.fixture(scope="module")
def end_to_end(tmp_path_factory):
    """Criterion 7 run, shared with the leakage audit (criterion 10)."""
    root = tmp_path_factory.mktemp("accept")
    t0 = time.time()
    config = SynthConfig(n_tasks=40, prompts_per_task=3, m=500, sigma=0.05, seed=7)
    manifest = synth_generate(config, root / "records.jsonl")
    report = run_benchmark(manifest, feature_kinds=("conf",), seed=7)
    # perfectly calibrated rerun for the ACE bound
    zero_config = SynthConfig(n_tasks=40, prompts_per_task=3, m=500, sigma=0.0, seed=7)
    zero_manifest = synth_generate(zero_config, root / "records_sigma0.jsonl")
    zero_report = run_benchmark(
        zero_manifest, methods=("ace",), feature_kinds=("conf",), seed=7,
        oracle_levels=(8,), oracle_trials=100,
    )
    return manifest, report, zero_report, time.time() - t0


def test_c01_featurizer_oracle():
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 51))
        d_c = int(rng.integers(1, 21))
        profile = confidence_profile(rng.uniform(-10, 10, size=n))
        vec = np.asarray(confidence_vector(profile, d_c).values)
        positions = n * np.arange(1, d_c + 1, dtype=float) / d_c
        oracle = np.interp(positions, np.arange(1, n + 1, dtype=float), profile)
        worst = max(worst, float(np.max(np.abs(vec - oracle))))
    announce(1, worst < 1e-12, f"featurizer vs quantile oracle, max diff {worst:.2e}",
             time.time() - t0, 5.0)


def test_c02_knn_oracle():
    t0 = time.time()
    rng = np.random.default_rng(102)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(5, 501))
        dim = int(rng.integers(1, 101))
        k = int(rng.choice([1, 3, 5]))
        if k > n:
            k = 1
        x = rng.standard_normal((n, dim))
        y = rng.random(n)
        model = knn_fit(make_samples(x, y), k=k)
        for _ in range(3):
            q = rng.standard_normal(dim)
            got = knn_predict(model, q)
            d2 = [(float(np.sum((row - q) ** 2)), i) for i, row in enumerate(x)]
            d2.sort()
            want = float(np.mean([y[i] for _, i in d2[:k]]))
            if got != want:
                mismatches += 1
    announce(2, mismatches == 0, f"knn vs exhaustive oracle, {mismatches} mismatches",
             time.time() - t0, 10.0)


def test_c03_mlp_gradient_check():
    t0 = time.time()
    rng = np.random.default_rng(103)
    worst = 0.0
    checked = 0
    while checked < 10:
        dim = int(rng.integers(2, 9))
        hidden = int(rng.integers(2, 9))
        n = int(rng.integers(3, 10))
        params = init_params(dim, hidden, int(rng.integers(0, 2**31)))
        x = rng.standard_normal((n, dim))
        z1 = x @ params["w1"] + params["b1"]
        x = x[np.min(np.abs(z1), axis=1) > 1e-3]  # keep clear of the ReLU kink
        if x.shape[0] < 2:
            continue
        checked += 1
        y = rng.random(x.shape[0])
        _, grads = loss_and_grads(params, x, y)
        h = 1e-5
        for name in params:
            flat = params[name].reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + h
                lp, _ = loss_and_grads(params, x, y)
                flat[j] = orig - h
                lm, _ = loss_and_grads(params, x, y)
                flat[j] = orig
                numeric = (lp - lm) / (2 * h)
                analytic = grads[name].reshape(-1)[j]
                denom = max(abs(analytic) + abs(numeric), 1e-8)
                worst = max(worst, abs(analytic - numeric) / denom)
    announce(3, worst < 1e-4, f"mlp analytic vs central differences, max rel err {worst:.2e}",
             time.time() - t0, 10.0)


def test_c04_gbt_monotone_loss():
    t0 = time.time()
    rng = np.random.default_rng(104)
    ok = True
    detail = []
    for trial in range(5):
        n = int(rng.integers(40, 120))
        dim = int(rng.integers(2, 8))
        x = rng.standard_normal((n, dim))
        y = np.clip(
            0.5 + 0.25 * x[:, 0] - 0.15 * x[:, 1 % dim] + 0.05 * rng.standard_normal(n),
            0.0,
            1.0,
        )
        model = gbt_fit(
            make_samples(x, y),
            GbtConfig(n_rounds=100, learning_rate=0.1, subsample=1.0, min_leaf=1),
        )
        trace = model.train_mse
        monotone = all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
        halved = trace[-1] < trace[0] / 2
        ok = ok and monotone and halved
        detail.append(f"{trace[0]:.4f}->{trace[-1]:.6f}")
    announce(4, ok, "gbt training MSE non-increasing and halved: " + " ".join(detail),
             time.time() - t0, 20.0)


def test_c05_atc_self_consistency():
    t0 = time.time()
    from iclest.baselines import atc_estimate, atc_threshold

    rng = np.random.default_rng(105)
    worst = 0.0
    ok = True
    for _ in range(100):
        n = int(rng.integers(5, 500))
        scores = rng.random(n)
        correctness = (rng.random(n) < rng.random()).astype(float)
        acc = float(correctness.mean())
        estimate = atc_estimate(scores, [atc_threshold(scores, correctness)])
        gap = abs(estimate - acc)
        worst = max(worst, gap * n)
        ok = ok and gap <= 1.0 / n + 1e-12
    announce(5, ok, f"atc source->source within 1/n (worst gap*n {worst:.3f})",
             time.time() - t0, 5.0)


def test_c06_oracle_curve():
    t0 = time.time()
    population = [1, 0, 1, 0, 1, 0, 1, 0, 1, 0]
    true_acc = 0.5
    exact = np.mean(
        [
            abs(np.mean([population[i] for i in subset]) - true_acc)
            for subset in itertools.combinations(range(10), 2)
        ]
    )
    approx, _ = oracle_l(population, true_acc, l=2, trials=100_000, seed=106)
    enum_ok = abs(approx - float(exact)) < 0.01

    rng = np.random.default_rng(107)
    big = (rng.random(1000) < 0.6).astype(float)
    acc = float(big.mean())
    curve = [
        oracle_l(big, acc, l=l, trials=10_000, seed=200 + l)[0]
        for l in (8, 16, 32, 64, 128)
    ]
    mono_ok = all(b <= a + 0.002 for a, b in zip(curve, curve[1:]))
    announce(
        6,
        enum_ok and mono_ok,
        f"oracle MC {approx:.4f} vs exact {exact:.4f}; curve "
        + ",".join(f"{100*c:.2f}" for c in curve),
        time.time() - t0,
        30.0,
    )


def test_c07_synthetic_end_to_end(end_to_end):
    manifest, report, zero_report, elapsed = end_to_end
    by_method = {s.method: s for s in report.settings}
    gbt_mae = by_method["gbt"].mean_mae
    avg_mae = by_method["avg"].mean_mae
    ace_zero = {s.method: s for s in zero_report.settings}["ace"].mean_mae
    ok = gbt_mae <= avg_mae and gbt_mae <= 5.0 and ace_zero <= 2.0
    announce(
        7,
        ok,
        f"gbt {gbt_mae:.2f} <= avg {avg_mae:.2f} and <= 5.0; "
        f"ace(sigma=0) {ace_zero:.2f} <= 2.0",
        elapsed,
        60.0,
    )


def test_c08_ablation_direction(tmp_path):
    t0 = time.time()
    config = SynthConfig(n_tasks=40, prompts_per_task=3, m=1000, sigma=0.02, seed=7)
    manifest = synth_generate(config, tmp_path / "records.jsonl")
    grid = ablate_m(manifest, [200, 1000], [20, 50, 100], method="gbt", seed=7)
    mean_200 = float(np.mean(grid.maes[0]))
    mean_1000 = float(np.mean(grid.maes[1]))
    trend_ok = mean_1000 <= mean_200 + 0.3
    spreads = [max(row) - min(row) for row in grid.maes]
    spread_ok = all(s < 1.0 for s in spreads)
    announce(
        8,
        trend_ok and spread_ok,
        f"m=1000 mean {mean_1000:.2f} <= m=200 mean {mean_200:.2f}+0.3; "
        f"d_c spreads {', '.join(f'{s:.2f}' for s in spreads)} < 1.0",
        time.time() - t0,
        120.0,
    )


def test_c09_benchmark_determinism(tmp_path, capsys):
    t0 = time.time()
    corpus_dir = tmp_path / "corpus"
    code = main(
        ["synth", "--out", str(corpus_dir), "--tasks", "12", "--prompts", "2",
         "--m", "60", "--sigma", "0.05", "--seed", "5", "--dc", "20"]
    )
    assert code == 0
    blobs = []
    for name in ("r1", "r2"):
        out_dir = tmp_path / name
        code = main(
            ["benchmark", "--records", str(corpus_dir / "records.jsonl"),
             "--out", str(out_dir), "--dc", "20", "--seed", "17", "--trials", "300"]
        )
        assert code == 0
        blobs.append((out_dir / "report.json").read_bytes())
    capsys.readouterr()
    identical = blobs[0] == blobs[1]
    announce(9, identical, "repeated cmd_benchmark reports byte-identical",
             time.time() - t0, 120.0)


def test_c10_leakage_audit(end_to_end):
    t0 = time.time()
    manifest, report, _, _ = end_to_end
    plan = report.fold_plan
    samples = build_meta_samples(manifest.runs, "conf", manifest.d_c)
    all_tasks = set(plan.fold_assignments)
    violations = 0
    for fold in range(plan.n_folds):
        test_tasks = set(plan.tasks_in_fold(fold))
        train_tasks = all_tasks - test_tasks
        if test_tasks & train_tasks:
            violations += 1
        train = [s for s in samples if s.task_id not in test_tasks]
        test = [s for s in samples if s.task_id in test_tasks]
        if {s.task_id for s in train} & {s.task_id for s in test}:
            violations += 1
        if len(train) + len(test) != len(samples):
            violations += 1
        # every prompt of a task sits on the side its task was assigned to
        for s in test:
            if plan.fold_assignments[s.task_id] != fold:
                violations += 1
    sizes = [len(plan.tasks_in_fold(f)) for f in range(plan.n_folds)]
    balanced = max(sizes) - min(sizes) <= 1
    announce(
        10,
        violations == 0 and balanced,
        f"no train/test task overlap across {plan.n_folds} folds, sizes {sizes}",
        time.time() - t0,
        30.0,
    )


def test_record_files_validate(end_to_end, tmp_path_factory):
    # sanity anchor for the shared corpus: files reload cleanly
    manifest, _, _, _ = end_to_end
    assert len(manifest.runs) == 120
