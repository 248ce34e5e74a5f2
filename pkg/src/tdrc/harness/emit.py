"""Result files: per-run CSV, long-format curve CSV and a JSON summary.

Floats are written with ``repr`` so that reading the CSVs back and
re-aggregating reproduces the JSON summary exactly.  Each CSV starts with a
``#`` provenance line carrying the config hash and design flags.
"""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..metrics import RunResult, SweepSummary, aggregate, select_best
from .config import DESIGN_FLAGS

RUN_COLUMNS = ["run_id", "environment", "algorithm", "optimizer", "alpha", "eta", "beta",
               "seed", "auc", "diverged"]
CURVE_COLUMNS = ["run_id", "step", "value"]
HYPER_KEYS = ("alpha", "eta", "beta")


def _provenance(config_hash: str) -> str:
    return "# " + json.dumps({"config_hash": config_hash, "flags": DESIGN_FLAGS}, sort_keys=True)


def hyper_key(hypers: dict) -> tuple:
    return tuple(float(hypers.get(k, float("nan"))) for k in HYPER_KEYS)


def group_results(results: list[RunResult]) -> dict[tuple, list[RunResult]]:
    groups: dict[tuple, list[RunResult]] = defaultdict(list)
    for r in results:
        groups[(r.environment, r.algorithm, r.optimizer) + hyper_key(r.hypers)].append(r)
    return dict(groups)


def summarise(results: list[RunResult], baseline_auc: float | None = None) -> dict:
    """SweepSummary per configuration plus the selected best."""
    groups = group_results(results)
    summaries = {k: aggregate(v, baseline_auc) for k, v in sorted(groups.items())}
    best = select_best(list(summaries.values())) if summaries else None
    return {"summaries": summaries, "best": best}


def summary_to_dict(s: SweepSummary) -> dict:
    return {"mean_auc": s.mean_auc, "stderr": s.stderr, "n_runs": s.n_runs, "hypers": s.hypers,
            "normalized": s.normalized, "baseline_auc": s.baseline_auc,
            "mean_curve": [float(v) for v in s.mean_curve]}


def write_results(results: list[RunResult], outdir: str | Path, config=None,
                  baseline_auc: float | None = None, stem: str = "results") -> dict[str, Path]:
    """Write ``<stem>_runs.csv``, ``<stem>_curves.csv`` and ``<stem>_summary.json``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config.config_hash() if config is not None else ""
    paths = {"runs": out / f"{stem}_runs.csv", "curves": out / f"{stem}_curves.csv",
             "summary": out / f"{stem}_summary.json"}
    with paths["runs"].open("w", newline="") as fh:
        fh.write(_provenance(chash) + "\n")
        wr = csv.writer(fh)
        wr.writerow(RUN_COLUMNS)
        for i, r in enumerate(results):
            wr.writerow([i, r.environment, r.algorithm, r.optimizer,
                         *(repr(float(r.hypers.get(k, float("nan")))) for k in HYPER_KEYS),
                         r.seed, repr(r.auc), int(r.diverged)])
    with paths["curves"].open("w", newline="") as fh:
        fh.write(_provenance(chash) + "\n")
        wr = csv.writer(fh)
        wr.writerow(CURVE_COLUMNS)
        for i, r in enumerate(results):
            for step, v in enumerate(np.asarray(r.curve, dtype=float)):
                wr.writerow([i, step, repr(float(v))])
    summ = summarise(results, baseline_auc)
    payload = {
        "config_hash": chash,
        "config": config.to_dict() if config is not None else None,
        "flags": DESIGN_FLAGS,
        "configurations": [
            {"environment": k[0], "algorithm": k[1], "optimizer": k[2], **summary_to_dict(s)}
            for k, s in summ["summaries"].items()
        ],
        "best": summary_to_dict(summ["best"]) if summ["best"] is not None else None,
    }
    if results:
        payload["run_metadata"] = {k: v for k, v in results[0].metadata.items()
                                   if k not in ("episode_lengths", "episode_ends", "flags")}
    paths["summary"].write_text(json.dumps(payload, indent=2, sort_keys=True, default=float))
    return paths


def _rows(path: Path):
    with path.open(newline="") as fh:
        yield from csv.DictReader(line for line in fh if not line.startswith("#"))


def read_results(outdir: str | Path, stem: str = "results") -> list[RunResult]:
    """Rebuild RunResults from the two CSV files."""
    out = Path(outdir)
    curves: dict[int, list[float]] = defaultdict(list)
    for row in _rows(out / f"{stem}_curves.csv"):
        curves[int(row["run_id"])].append(float(row["value"]))
    results = []
    for row in _rows(out / f"{stem}_runs.csv"):
        rid = int(row["run_id"])
        results.append(RunResult(
            np.array(curves[rid]), int(row["seed"]),
            {k: float(row[k]) for k in HYPER_KEYS}, bool(int(row["diverged"])),
            row["environment"], row["algorithm"], row["optimizer"]))
    return results


def format_table(summary_paths: list[str | Path]) -> str:
    """Markdown table of the best mean AUC ± stderr per algorithm × environment."""
    cells: dict[tuple, str] = {}
    envs: list[str] = []
    algs: list[str] = []
    for p in summary_paths:
        data = json.loads(Path(p).read_text())
        best = data.get("best")
        if not best or not data["configurations"]:
            continue
        env = data["configurations"][0]["environment"]
        alg = data["configurations"][0]["algorithm"]
        envs += [env] if env not in envs else []
        algs += [alg] if alg not in algs else []
        cells[(alg, env)] = f"{best['mean_auc']:.3f} ± {best['stderr']:.3f}"
    lines = ["| algorithm | " + " | ".join(envs) + " |",
             "|---" * (len(envs) + 1) + "|"]
    for a in algs:
        lines.append(f"| {a} | " + " | ".join(cells.get((a, e), "") for e in envs) + " |")
    return "\n".join(lines)
