"""Replicated simulation experiments.

Every replicate draws a fresh dataset, estimates its spectrum once and
clusters it under each requested metric. Replicate ``m`` gets its own child of
``SeedSequence(seed)``; from that child come the data seed and the k-means
seed. Results therefore do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .evaluation import mean_sd, score
from .kmeans import KMeansConfig, run_kmeans
from .metrics import MetricChoice
from .simgen import GROUP_LABELS, ScenarioSpec, generate
from .spectral import spectrum_of

DEFAULT_LOG10P_GRID = (-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0)
STUDY_METRICS = ("l2", "truncated:3", "dp:-2", "dp:8")


def replicate_seeds(seed: int, M: int) -> list[tuple[int, int]]:
    """``(data_seed, kmeans_seed)`` for each of ``M`` replicates."""
    out = []
    for child in np.random.SeedSequence(int(seed)).spawn(M):
        data_ss, km_ss = child.spawn(2)
        out.append(
            (int(data_ss.generate_state(1, np.uint64)[0]), int(km_ss.generate_state(1, np.uint64)[0]))
        )
    return out


@dataclass(frozen=True)
class _Task:
    scenario: ScenarioSpec
    metrics: tuple
    kmeans_seed: int
    max_iter: int
    n_restarts: int


def _run_replicate(task: _Task) -> list[dict]:
    sample = generate(task.scenario)
    spectrum = spectrum_of(sample) if any(m.needs_spectrum for m in task.metrics) else None
    out = []
    for choice in task.metrics:
        cfg = KMeansConfig(2, choice.bind(spectrum), task.max_iter, task.n_restarts, task.kmeans_seed)
        res = run_kmeans(sample, cfg)
        rep = score(res.labels, sample.labels)
        out.append(
            {
                "matrix": rep.aligned().tolist(),
                "correct_rate": rep.correct_rate,
                "converged": bool(res.converged),
                "iterations": int(res.iterations),
            }
        )
    return out


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def run_experiment(
    scenario: ScenarioSpec,
    metrics: Sequence[MetricChoice],
    M: int = 50,
    seed: int = 0,
    max_iter: int = 200,
    n_restarts: int = 1,
    jobs: int = 1,
) -> dict:
    """Aggregate confusion matrices over ``M`` replicated datasets.

    ``scenario.seed`` is ignored; replicate seeds derive from ``seed``. The
    returned dict is JSON-ready. For each metric it holds the mean aligned
    confusion matrix (rows are clusters matched to groups ``X``, ``Y``), the
    standard deviation of each diagonal count, and the mean and standard
    deviation of the correct classification rate.
    """
    if M < 1:
        raise ValueError("M must be positive")
    metrics = tuple(metrics)
    if not metrics:
        raise ValueError("no metrics requested")
    seeds = replicate_seeds(seed, M)
    tasks = [_Task(scenario.with_seed(ds), metrics, ks, max_iter, n_restarts) for ds, ks in seeds]
    per_rep = _map(_run_replicate, tasks, jobs)

    results = []
    for j, choice in enumerate(metrics):
        mats = np.array([rep[j]["matrix"] for rep in per_rep], dtype=float)
        rates = [rep[j]["correct_rate"] for rep in per_rep]
        rate_mean, rate_sd = mean_sd(rates)
        diag = np.array([np.diag(m) for m in mats])
        results.append(
            {
                "metric": str(choice),
                "mean_matrix": mats.mean(axis=0).tolist(),
                "sd_diagonal": [
                    float(np.std(diag[:, i], ddof=1)) if M > 1 else 0.0 for i in range(diag.shape[1])
                ],
                "correct_rate": rate_mean,
                "correct_rate_sd": rate_sd,
                "converged_fraction": float(np.mean([rep[j]["converged"] for rep in per_rep])),
                "rates": rates,
            }
        )
    return {
        "scenario": {k: v for k, v in scenario.to_dict().items() if k != "seed"},
        "groups": list(GROUP_LABELS),
        "M": M,
        "seed": int(seed),
        "max_iter": max_iter,
        "n_restarts": n_restarts,
        "replicate_seeds": [list(s) for s in seeds],
        "results": results,
    }


def write_experiment(result: dict, json_path, csv_path) -> None:
    with open(json_path, "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    groups = result["groups"]
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "cluster", "group", "mean_count", "sd_count", "correct_rate", "correct_rate_sd"])
        for r in result["results"]:
            for i, row in enumerate(r["mean_matrix"]):
                for j, val in enumerate(row):
                    sd = r["sd_diagonal"][i] if i == j else ""
                    w.writerow(
                        [r["metric"], i + 1, groups[j], repr(val), repr(sd) if sd != "" else "",
                         repr(r["correct_rate"]), repr(r["correct_rate_sd"])]
                    )


def _sweep_replicate(args) -> list[float]:
    scenario, kmeans_seed, grid, max_iter, n_restarts = args
    sample = generate(scenario)
    spectrum = spectrum_of(sample)
    errs = []
    for lg in grid:
        choice = MetricChoice("dp", log10p=lg)
        res = run_kmeans(sample, KMeansConfig(2, choice.bind(spectrum), max_iter, n_restarts, kmeans_seed))
        errs.append(1.0 - score(res.labels, sample.labels).correct_rate)
    return errs


def sweep_scenario(
    scenario: ScenarioSpec,
    log10_grid: Sequence[float] = DEFAULT_LOG10P_GRID,
    M: int = 50,
    seed: int = 0,
    max_iter: int = 200,
    n_restarts: int = 1,
    jobs: int = 1,
) -> list[tuple[float, float, float]]:
    """Misclassified proportion of ``dp`` k-means against ``log10(p)``, over ``M`` datasets."""
    if len(log10_grid) == 0:
        raise ValueError("empty p grid")
    grid = tuple(float(g) for g in log10_grid)
    tasks = [
        (scenario.with_seed(ds), ks, grid, max_iter, n_restarts) for ds, ks in replicate_seeds(seed, M)
    ]
    errs = np.array(_map(_sweep_replicate, tasks, jobs))
    rows = []
    for j, lg in enumerate(grid):
        m, sd = mean_sd(errs[:, j])
        rows.append((lg, m, sd))
    return rows


def write_sweep(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["log10_p", "misclassified_proportion", "sd"])
        for lg, m, sd in rows:
            w.writerow([repr(lg), repr(m), repr(sd)])
