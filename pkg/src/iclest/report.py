"""Benchmark report assembly and emission.

Reports come in two forms: an aligned human-readable table (methods as rows,
feature kinds as columns, baselines spanning, an oracle row with the bracket
of the best meta-model, and an accuracy summary row), and a machine-readable
JSON document carrying every number at full precision.  Emission is
deterministic: identical inputs and seed produce identical bytes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional, Sequence

from iclest.baselines import ORACLE_GRID, ORACLE_TRIALS, OracleCurve
from iclest.benchmark import (
    META_MODEL_METHODS,
    METHODS,
    N_FOLDS,
    AblationGrid,
    FoldPlan,
    SettingResult,
    make_folds,
    oracle_bracket,
    oracle_curve_for_runs,
    run_setting,
)
from iclest.errors import DataError
from iclest.records import CorpusManifest

BASELINE_METHODS = ("avg", "ace", "atc")


@dataclass
class BenchmarkReport:
    manifest: dict
    fold_plan: FoldPlan
    settings: list[SettingResult]
    oracle_curve: Optional[OracleCurve]
    ablation_m_dc: Optional[AblationGrid] = None
    ablation_shots: Optional[list[tuple[str, SettingResult]]] = None


def _manifest_echo(manifest: CorpusManifest) -> dict:
    sizes = [run.size for run in manifest.runs]
    return {
        "model_id": manifest.model_id,
        "collection_id": manifest.collection_id,
        "formulation": manifest.formulation,
        "d_c": manifest.d_c,
        "d_e": manifest.d_e,
        "seed": manifest.seed,
        "n_runs": len(manifest.runs),
        "n_tasks": len(manifest.task_ids),
        "min_run_size": min(sizes),
        "max_run_size": max(sizes),
    }


def run_benchmark(
    manifest: CorpusManifest,
    methods: Sequence[str] = METHODS,
    feature_kinds: Sequence[str] = ("conf",),
    seed: int = 0,
    n_folds: int = N_FOLDS,
    oracle_levels: Sequence[int] = ORACLE_GRID,
    oracle_trials: int = ORACLE_TRIALS,
    jobs: int = 1,
) -> BenchmarkReport:
    """Evaluate every requested method under one shared fold plan.

    Meta-models run once per feature kind; baselines once.  Every setting gets
    an oracle bracket against the corpus-wide oracle curve.
    """
    for method in methods:
        if method not in METHODS:
            raise DataError(f"unknown method {method!r}")
    plan = make_folds([r.task_id for r in manifest.runs], n_folds, seed)

    jobs_list: list[tuple[str, Optional[str]]] = []
    for method in methods:
        if method in META_MODEL_METHODS:
            jobs_list.extend((method, kind) for kind in feature_kinds)
        else:
            jobs_list.append((method, None))

    def one(method: str, kind: Optional[str]) -> SettingResult:
        return run_setting(
            manifest, kind or "conf", method, seed=seed, n_folds=n_folds, plan=plan
        )

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            settings = list(pool.map(lambda mk: one(*mk), jobs_list))
    else:
        settings = [one(method, kind) for method, kind in jobs_list]

    curve = oracle_curve_for_runs(manifest.runs, oracle_levels, oracle_trials, seed)
    settings = [
        SettingResult(
            model_id=s.model_id,
            collection_id=s.collection_id,
            feature_kind=s.feature_kind,
            method=s.method,
            fold_maes=s.fold_maes,
            mean_mae=s.mean_mae,
            accuracy_mean=s.accuracy_mean,
            accuracy_std=s.accuracy_std,
            oracle_bracket=oracle_bracket(s.mean_mae, curve),
        )
        for s in settings
    ]
    return BenchmarkReport(
        manifest=_manifest_echo(manifest),
        fold_plan=plan,
        settings=settings,
        oracle_curve=curve,
    )


def report_to_dict(report: BenchmarkReport) -> dict:
    doc = {
        "manifest": report.manifest,
        "protocol": {
            "n_folds": report.fold_plan.n_folds,
            "seed": report.fold_plan.seed,
            "fold_assignments": dict(sorted(report.fold_plan.fold_assignments.items())),
        },
        "settings": [
            {
                "method": s.method,
                "feature_kind": s.feature_kind,
                "fold_maes": list(s.fold_maes),
                "mean_mae": s.mean_mae,
                "oracle_bracket": s.oracle_bracket,
                "accuracy_mean": s.accuracy_mean,
                "accuracy_std": s.accuracy_std,
            }
            for s in sorted(
                report.settings, key=lambda s: (s.method, s.feature_kind or "")
            )
        ],
    }
    if report.oracle_curve is not None:
        doc["oracle_curve"] = [
            {"l": l, "expected_mae": m, "trials": t}
            for l, m, t in report.oracle_curve.levels
        ]
    if report.ablation_m_dc is not None:
        grid = report.ablation_m_dc
        doc["ablation_m_dc"] = {
            "m_values": list(grid.m_values),
            "d_c_values": list(grid.d_c_values),
            "maes": [list(row) for row in grid.maes],
        }
    if report.ablation_shots is not None:
        doc["ablation_shots"] = [
            {
                "filter": name,
                "method": s.method,
                "feature_kind": s.feature_kind,
                "mean_mae": s.mean_mae,
                "fold_maes": list(s.fold_maes),
            }
            for name, s in report.ablation_shots
        ]
    return doc


def report_json(report: BenchmarkReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def _best_meta_mae(settings: Sequence[SettingResult]) -> Optional[float]:
    maes = [s.mean_mae for s in settings if s.method in META_MODEL_METHODS]
    return min(maes) if maes else None


def render_table(report: BenchmarkReport) -> str:
    """Aligned text table: meta-models by feature kind, then baselines."""
    kinds = sorted(
        {s.feature_kind for s in report.settings if s.feature_kind is not None}
    )
    lines = []
    m = report.manifest
    lines.append(
        f"model={m['model_id']} collection={m['collection_id']} "
        f"formulation={m['formulation']} d_c={m['d_c']} seed={m['seed']} "
        f"runs={m['n_runs']} tasks={m['n_tasks']}"
    )
    lines.append("MAE in percentage points, mean over folds; lower is better")
    lines.append("")

    width = 10
    header = "method".ljust(width) + "".join(k.rjust(width) for k in kinds)
    lines.append(header)
    by_key = {(s.method, s.feature_kind): s for s in report.settings}
    for method in META_MODEL_METHODS:
        if not any(s.method == method for s in report.settings):
            continue
        row = method.ljust(width)
        for kind in kinds:
            s = by_key.get((method, kind))
            row += (f"{s.mean_mae:.2f}" if s else "-").rjust(width)
        lines.append(row)
    for method in BASELINE_METHODS:
        s = by_key.get((method, None))
        if s is not None:
            lines.append(method.ljust(width) + f"{s.mean_mae:.2f}".rjust(width))

    if report.oracle_curve is not None:
        best = _best_meta_mae(report.settings)
        if best is not None:
            bracket = oracle_bracket(best, report.oracle_curve)
            if bracket is not None:
                level_mae = dict(
                    (l, mae) for l, mae, _ in report.oracle_curve.levels
                )[bracket]
                lines.append(
                    "oracle".ljust(width)
                    + f"{level_mae:.2f} ({bracket})".rjust(width + 6)
                )
            else:
                lines.append("oracle".ljust(width) + "(below grid)".rjust(width + 6))
        curve_str = "  ".join(
            f"l={l}:{mae:.2f}" for l, mae, _ in report.oracle_curve.levels
        )
        lines.append("oracle curve: " + curve_str)

    if report.settings:
        s = report.settings[0]
        lines.append(
            "acc".ljust(width)
            + f"{s.accuracy_mean:.2f} +/- {s.accuracy_std:.2f}".rjust(width + 8)
        )

    if report.ablation_m_dc is not None:
        lines.append("")
        lines.append(ablation_csv(report.ablation_m_dc).rstrip())
    if report.ablation_shots is not None:
        lines.append("")
        lines.append("shots ablation:")
        for name, s in report.ablation_shots:
            lines.append(f"  shots={name} method={s.method} mae={s.mean_mae:.2f}")
    return "\n".join(lines) + "\n"


def ablation_csv(grid: AblationGrid) -> str:
    """Plot-ready comma-separated grid: rows = m values, columns = d_c values."""
    lines = ["m\\d_c," + ",".join(str(d) for d in grid.d_c_values)]
    for m, row in zip(grid.m_values, grid.maes):
        lines.append(f"{m}," + ",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def write_report(report: BenchmarkReport, out_dir: str | os.PathLike) -> dict[str, str]:
    """Write report.json and report.txt (plus ablation CSV when present)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    json_path = os.path.join(out_dir, "report.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(report_json(report))
    paths["json"] = json_path
    txt_path = os.path.join(out_dir, "report.txt")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(render_table(report))
    paths["txt"] = txt_path
    if report.ablation_m_dc is not None:
        csv_path = os.path.join(out_dir, "ablation_m_dc.csv")
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(ablation_csv(report.ablation_m_dc))
        paths["ablation_csv"] = csv_path
    return paths
