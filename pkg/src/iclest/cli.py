"""Command-line front door.

Subcommands: ingest, featurize, estimate, benchmark, ablate, synth.
Results go to stdout or the --out directory; diagnostics go to stderr.
Exit codes: 0 ok, 2 usage, 3 data error, 4 numeric failure.

Configuration precedence is flags > config file (--config, JSON object whose
keys are flag names with underscores) > built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter

from iclest.baselines import ORACLE_GRID, ORACLE_TRIALS, ace_estimate, atc_estimate, atc_threshold, avg_baseline
from iclest.benchmark import METHODS, N_FOLDS, ablate_m, ablate_shots, build_meta_samples
from iclest.errors import DataError, NumericError
from iclest.features import fit_pca, mean_embedding
from iclest.metamodels import GbtConfig, MlpConfig, gbt_fit, knn_fit, mlp_fit
from iclest.records import (
    build_manifest,
    group_runs,
    read_records,
    write_feature_store,
)
from iclest.report import run_benchmark, write_report
from iclest.scoring import run_scores
from iclest.synth import SynthConfig, synth_generate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

DEFAULT_DC = 100


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise DataError(f"expected a comma-separated integer list, got {text!r}") from exc


def _parse_shot_filters(text: str) -> list[set[int]]:
    filters = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        filters.append(set(_parse_int_list(part)))
    if not filters:
        raise DataError(f"no shot filters in {text!r}")
    return filters


def _load_runs(args):
    records = read_records(args.records)
    return group_runs(records, model_id=args.model_id, collection_id=args.collection_id)


def _manifest_from_args(args):
    runs = _load_runs(args)
    d_e = args.de if args.de is not None else args.dc
    return build_manifest(runs, d_c=args.dc, d_e=d_e, seed=args.seed)


def cmd_ingest(args) -> int:
    records = read_records(args.records)
    runs = group_runs(records, model_id=args.model_id, collection_id=args.collection_id)
    split_counts = Counter(r.split for r in records)
    form_counts = Counter(r.formulation for r in records)
    print(f"records={len(records)} runs={len(runs)} tasks={len({r.task_id for r in runs})}")
    for split in sorted(split_counts):
        print(f"split={split} count={split_counts[split]}")
    for form in sorted(form_counts):
        print(f"formulation={form} count={form_counts[form]}")
    for run in runs:
        print(
            f"run task={run.task_id} prompt={run.prompt_id} shots={run.shots} "
            f"size={run.size} labeled={run.n_labeled}"
        )
    return EXIT_OK


def cmd_featurize(args) -> int:
    manifest = _manifest_from_args(args)
    samples = build_meta_samples(
        manifest.runs, args.feature, manifest.d_c, d_e=manifest.d_e
    )
    write_feature_store(samples, args.out)
    print(f"wrote {len(samples)} samples to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_estimate(args) -> int:
    manifest_runs = _load_runs(args)
    labeled = [r for r in manifest_runs if r.is_labeled]
    targets = [r for r in manifest_runs if not r.is_labeled]
    if not labeled:
        raise DataError("no training data: every run is unlabeled")
    if not targets:
        print("no unlabeled target runs; nothing to estimate", file=sys.stderr)
        return EXIT_OK

    d_e = args.de if args.de is not None else args.dc
    pca = None
    if args.feature in ("embed", "ce"):
        means = [mean_embedding(r) for r in manifest_runs]
        h = len(means[0])
        pca = fit_pca(means, min(d_e, len(means) - 1, h))
    train = build_meta_samples(labeled, args.feature, args.dc, pca=pca)
    target_samples = build_meta_samples(targets, args.feature, args.dc, pca=pca)

    if args.method in ("mlp", "knn", "gbt"):
        if args.method == "knn":
            model = knn_fit(train)
        elif args.method == "mlp":
            model = mlp_fit(train, MlpConfig(seed=args.seed))
        else:
            model = gbt_fit(train, GbtConfig(seed=args.seed))
        preds = {(s.task_id, s.prompt_id): model.predict(s.features) for s in target_samples}
    elif args.method == "avg":
        estimate = avg_baseline([s.accuracy for s in train])
        preds = {(r.task_id, r.prompt_id): estimate for r in targets}
    elif args.method == "ace":
        preds = {
            (r.task_id, r.prompt_id): ace_estimate(run_scores(r), r.formulation)
            for r in targets
        }
    elif args.method == "atc":
        from iclest.scoring import run_correctness

        thresholds = [
            atc_threshold(run_scores(r), run_correctness(r), source_task_id=r.task_id)
            for r in labeled
        ]
        preds = {
            (r.task_id, r.prompt_id): atc_estimate(run_scores(r), thresholds)
            for r in targets
        }
    else:
        raise DataError(f"unknown method {args.method!r}")

    for (task_id, prompt_id) in sorted(preds):
        print(f"{task_id}\t{prompt_id}\t{preds[(task_id, prompt_id)]:.6f}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    manifest = _manifest_from_args(args)
    methods = args.method.split(",") if args.method else list(METHODS)
    kinds = args.feature.split(",")
    report = run_benchmark(
        manifest,
        methods=methods,
        feature_kinds=kinds,
        seed=args.seed,
        n_folds=args.folds,
        oracle_levels=_parse_int_list(args.oracle_grid),
        oracle_trials=args.trials,
        jobs=args.jobs,
    )
    paths = write_report(report, args.out)
    print(paths["json"])
    print(paths["txt"])
    return EXIT_OK


def cmd_ablate(args) -> int:
    manifest = _manifest_from_args(args)
    ran = False
    os.makedirs(args.out, exist_ok=True)
    if args.m_grid:
        grid = ablate_m(
            manifest,
            _parse_int_list(args.m_grid),
            _parse_int_list(args.dc_grid) if args.dc_grid else [manifest.d_c],
            method=args.method or "gbt",
            seed=args.seed,
            feature_kind=args.feature,
            n_folds=args.folds,
        )
        from iclest.report import ablation_csv

        csv_path = os.path.join(args.out, "ablation_m_dc.csv")
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(ablation_csv(grid))
        print(csv_path)
        ran = True
    if args.shots:
        filters = _parse_shot_filters(args.shots)
        results = ablate_shots(
            manifest,
            filters,
            method=args.method or "gbt",
            seed=args.seed,
            feature_kind=args.feature,
            n_folds=args.folds,
        )
        doc = [
            {
                "filter": ",".join(str(s) for s in sorted(filt)),
                "method": res.method,
                "mean_mae": res.mean_mae,
                "fold_maes": list(res.fold_maes),
            }
            for filt, res in zip(filters, results)
        ]
        shots_path = os.path.join(args.out, "ablation_shots.json")
        with open(shots_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(shots_path)
        ran = True
    if not ran:
        raise DataError("ablate needs --m-grid and/or --shots")
    return EXIT_OK


def cmd_synth(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    config = SynthConfig(
        n_tasks=args.tasks,
        prompts_per_task=args.prompts,
        m=args.m,
        sigma=args.sigma,
        seed=args.seed,
        d_c=args.dc,
    )
    records_path = os.path.join(args.out, "records.jsonl")
    manifest = synth_generate(config, records_path)
    print(records_path)
    print(
        f"tasks={len(manifest.task_ids)} runs={len(manifest.runs)} "
        f"m={config.m} sigma={config.sigma} seed={config.seed}",
        file=sys.stderr,
    )
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, records: bool = True) -> None:
    if records:
        parser.add_argument("--records", required=True, help="newline-delimited record file")
    parser.add_argument("--model-id", default="", help="model identifier for grouping")
    parser.add_argument("--collection-id", default="", help="collection identifier")
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iclest",
        description="Estimate dataset-level in-context-learning accuracy from "
        "confidence profiles.",
    )
    parser.add_argument("--config", help="JSON file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and summarize a record file")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", help="build and persist meta-samples")
    _add_common(p)
    p.add_argument("--out", required=True, help="feature store path")
    p.add_argument("--dc", type=int, default=DEFAULT_DC)
    p.add_argument("--de", type=int, default=None)
    p.add_argument("--feature", choices=("conf", "embed", "ce"), default="conf")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("estimate", help="train on labeled runs, estimate unlabeled ones")
    _add_common(p)
    p.add_argument("--method", choices=METHODS, default="gbt")
    p.add_argument("--dc", type=int, default=DEFAULT_DC)
    p.add_argument("--de", type=int, default=None)
    p.add_argument("--feature", choices=("conf", "embed", "ce"), default="conf")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("benchmark", help="full cross-validated benchmark + report")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dc", type=int, default=DEFAULT_DC)
    p.add_argument("--de", type=int, default=None)
    p.add_argument("--feature", default="conf", help="comma list of conf,embed,ce")
    p.add_argument("--method", default=None, help="comma list; default all methods")
    p.add_argument("--folds", type=int, default=N_FOLDS)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument(
        "--oracle-grid", default=",".join(str(l) for l in ORACLE_GRID)
    )
    p.add_argument("--trials", type=int, default=ORACLE_TRIALS)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("ablate", help="m/d_c and shots ablations")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dc", type=int, default=DEFAULT_DC)
    p.add_argument("--de", type=int, default=None)
    p.add_argument("--feature", choices=("conf", "embed", "ce"), default="conf")
    p.add_argument("--method", default="gbt")
    p.add_argument("--folds", type=int, default=N_FOLDS)
    p.add_argument("--m-grid", default=None, help="comma list of m values")
    p.add_argument("--dc-grid", default=None, help="comma list of d_c values")
    p.add_argument("--shots", default=None, help="semicolon-separated shot sets, e.g. 4;5;4,5")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="generate a synthetic closed-set corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--tasks", type=int, default=40)
    p.add_argument("--prompts", type=int, default=3)
    p.add_argument("--m", type=int, default=500)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dc", type=int, default=DEFAULT_DC)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    # pre-scan for --config so its values become defaults, overridable by flags
    argv = list(sys.argv[1:] if argv is None else argv)
    if "--config" in argv:
        idx = argv.index("--config")
        if idx + 1 >= len(argv):
            parser.error("--config needs a path")
        config_path = argv[idx + 1]
        try:
            with open(config_path, encoding="utf-8") as fh:
                defaults = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {config_path}: {exc}", file=sys.stderr)
            return EXIT_DATA
        if not isinstance(defaults, dict):
            print("error: config file must hold a JSON object", file=sys.stderr)
            return EXIT_DATA
        for action in parser._subparsers._group_actions:
            for sub_parser in action.choices.values():
                known = {a.dest for a in sub_parser._actions}
                sub_parser.set_defaults(
                    **{k: v for k, v in defaults.items() if k in known}
                )

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
