"""Command line interface.

Commands: ``simulate``, ``cluster``, ``experiment``, ``silhouette``, ``sweep``,
plus ``replay`` (re-run a manifest) and ``import-growth``. Every command
writes a JSON run manifest recording its arguments, input digests and timings.

Exit codes: 0 success, 2 usage error, 3 ingestion error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from . import datasets, experiment, io
from .evaluation import score, silhouette, sweep_p
from .exceptions import DimensionError, IngestionError, NumericalError
from .kmeans import KMeansConfig, run_kmeans
from .metrics import MetricChoice
from .simgen import CASES, ScenarioSpec, generate
from .spectral import spectrum_of

EXIT_OK, EXIT_USAGE, EXIT_INGESTION, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("mfkmeans")


class UsageError(Exception):
    pass


def _tool_version() -> str:
    try:
        return version("mfkmeans")
    except PackageNotFoundError:
        return "unknown"


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _metric_choice(args) -> MetricChoice:
    if args.metric == "dp":
        if args.log10p is None:
            raise UsageError("--metric dp needs --log10p")
        return MetricChoice("dp", log10p=args.log10p)
    if args.metric == "truncated":
        if args.K is None:
            raise UsageError("--metric truncated needs --K")
        return MetricChoice("truncated", K=args.K)
    return MetricChoice("l2")


def _add_metric_args(p):
    p.add_argument("--metric", choices=["dp", "truncated", "l2"], default="dp")
    p.add_argument("--log10p", type=float, help="log10 of p for --metric dp")
    p.add_argument("--K", type=_positive_int, help="number of components for --metric truncated")


def _add_data_args(p, truth=True):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="curve CSV (curve_id,component,t_index,value)")
    src.add_argument("--growth", action="store_true", help="use the Berkeley growth data")
    p.add_argument("--grid", type=Path, help="grid JSON; default is [0, 1]")
    if truth:
        p.add_argument("--truth", type=Path, help="true labels CSV (curve_id,label)")


def _scenario(args) -> ScenarioSpec:
    over = {}
    if getattr(args, "scenario", None):
        over = json.loads(Path(args.scenario).read_text())
        over.pop("case_id", None)
        over.pop("seed", None)
    for key, attr in (("T", "T"), ("K_tilde", "K_tilde"), ("n1", "n1"), ("n2", "n2")):
        val = getattr(args, attr, None)
        if val is not None:
            over[key] = val
    return ScenarioSpec(args.case, seed=getattr(args, "seed", 0), **over)


def _add_scenario_args(p):
    p.add_argument("--scenario", type=Path, help="JSON overriding T, K_tilde, n1, n2")
    p.add_argument("--T", type=_positive_int)
    p.add_argument("--K-tilde", dest="K_tilde", type=_positive_int)
    p.add_argument("--n1", type=_positive_int)
    p.add_argument("--n2", type=_positive_int)


def _load(args, inputs):
    if args.growth:
        sample = datasets.load_growth()
        d = datasets.growth_dir()
        for f in ("growth.csv", "growth_labels.csv", "growth_grid.json"):
            inputs[str(d / f)] = io.file_digest(d / f)
        return sample
    grid = None
    if args.grid is not None:
        grid = io.read_grid(args.grid)
        inputs[str(args.grid)] = io.file_digest(args.grid)
    truth = getattr(args, "truth", None)
    sample = io.read_sample(args.data, grid, truth)
    inputs[str(args.data)] = io.file_digest(args.data)
    if truth is not None:
        inputs[str(truth)] = io.file_digest(truth)
    return sample


# -- commands ---------------------------------------------------------------


def cmd_simulate(args, inputs, outputs):
    spec = _scenario(args)
    sample = generate(spec)
    io.write_sample(sample, args.out)
    outputs.append(str(args.out))
    if args.labels:
        io.write_labels(sample.ids, sample.labels, args.labels)
        outputs.append(str(args.labels))
    if args.grid_out:
        io.write_grid(sample.grid, args.grid_out)
        outputs.append(str(args.grid_out))
    return {"scenario": spec.to_dict(), "n": sample.n, "J": sample.n_components, "T": sample.grid.size}


def _fit(sample, choice, args):
    spectrum = spectrum_of(sample) if choice.needs_spectrum else None
    metric = choice.bind(spectrum)
    cfg = KMeansConfig(args.k, metric, args.max_iter, args.restarts, args.seed)
    return run_kmeans(sample, cfg), metric, spectrum


def cmd_cluster(args, inputs, outputs):
    sample = _load(args, inputs)
    if args.k > sample.n:
        raise UsageError(f"--k {args.k} exceeds the number of curves ({sample.n})")
    choice = _metric_choice(args)
    res, metric, spectrum = _fit(sample, choice, args)
    io.write_labels(sample.ids, res.labels, args.out_labels, header=["curve_id", "cluster"])
    outputs.append(str(args.out_labels))
    report = {
        "metric": str(choice),
        "k": args.k,
        "n": sample.n,
        "objective": res.objective,
        "iterations": res.iterations,
        "converged": res.converged,
        "cluster_sizes": [int((res.labels == l).sum()) for l in range(1, args.k + 1)],
    }
    if sample.labels is not None:
        conf = score(res.labels, sample.labels)
        report["confusion"] = {
            "matrix": conf.matrix.tolist(),
            "clusters": list(conf.found_levels),
            "groups": list(conf.truth_levels),
            "matching": {str(k): v for k, v in conf.matching.items()},
            "correct_rate": conf.correct_rate,
        }
    if args.spectrum is not None:
        if spectrum is None:
            spectrum = spectrum_of(sample)
        spectrum.to_csv(args.spectrum)
        outputs.append(str(args.spectrum))
    io.write_json(report, args.report)
    outputs.append(str(args.report))
    return report


def _write_silhouette(sample, labels, rep, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve_id", "cluster", "silhouette"])
        for i in rep.order:
            w.writerow([sample.ids[i], int(labels[i]), repr(float(rep.values[i]))])


def cmd_silhouette(args, inputs, outputs):
    sample = _load(args, inputs)
    choice = _metric_choice(args)
    spectrum = spectrum_of(sample) if choice.needs_spectrum else None
    metric = choice.bind(spectrum)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    summary = {}
    if args.labels is not None:
        lab = io.read_labels(args.labels)
        inputs[str(args.labels)] = io.file_digest(args.labels)
        try:
            labels = [int(lab[str(cid)]) for cid in sample.ids]
        except (KeyError, ValueError) as exc:
            raise IngestionError(f"labels do not match the sample: {exc}", args.labels) from None
        runs = [("given", labels)]
    else:
        runs = []
        for k in args.k_list:
            if k > sample.n:
                raise UsageError(f"k = {k} exceeds the number of curves ({sample.n})")
            cfg = KMeansConfig(k, metric, args.max_iter, args.restarts, args.seed)
            runs.append((k, run_kmeans(sample, cfg).labels))
    for k, labels in runs:
        rep = silhouette(sample, labels, metric)
        path = args.out_dir / f"silhouette_k{k}.csv"
        _write_silhouette(sample, labels, rep, path)
        outputs.append(str(path))
        summary[str(k)] = {
            "overall_mean": rep.overall_mean,
            "cluster_means": {str(c): m for c, m in rep.cluster_means.items()},
        }
    io.write_json(summary, args.out_dir / "silhouette_summary.json")
    outputs.append(str(args.out_dir / "silhouette_summary.json"))
    return summary


def cmd_experiment(args, inputs, outputs):
    spec = _scenario(args)
    metrics = [MetricChoice.parse(m) for m in args.metrics]
    result = experiment.run_experiment(
        spec, metrics, M=args.M, seed=args.seed, max_iter=args.max_iter,
        n_restarts=args.restarts, jobs=args.jobs,
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    jp, cp = args.out_dir / "experiment.json", args.out_dir / "experiment.csv"
    experiment.write_experiment(result, jp, cp)
    outputs += [str(jp), str(cp)]
    return {r["metric"]: r["correct_rate"] for r in result["results"]}


def cmd_sweep(args, inputs, outputs):
    grid = args.log10p_grid or list(experiment.DEFAULT_LOG10P_GRID)
    if args.case is not None:
        rows = experiment.sweep_scenario(
            _scenario(args), grid, M=args.M, seed=args.seed, max_iter=args.max_iter,
            n_restarts=args.restarts, jobs=args.jobs,
        )
    else:
        if args.data is None and not args.growth:
            raise UsageError("sweep needs --case, --data or --growth")
        sample = _load(args, inputs)
        if sample.labels is None:
            raise UsageError("sweep on a data file needs --truth")
        rows = sweep_p(sample, sample.labels, args.k, grid, n_runs=args.M, seed=args.seed,
                       n_restarts=args.restarts, max_iter=args.max_iter)
    experiment.write_sweep(rows, args.out)
    outputs.append(str(args.out))
    return {"rows": [list(r) for r in rows]}


def cmd_import_growth(args, inputs, outputs):
    sample = datasets.import_growth_tables(args.boys, args.girls, args.out_dir)
    inputs[str(args.boys)] = io.file_digest(args.boys)
    inputs[str(args.girls)] = io.file_digest(args.girls)
    outputs.append(str(datasets.growth_dir(args.out_dir)))
    return {"n": sample.n}


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfkmeans", description="k-means clustering of multivariate functional data"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def manifest_arg(p):
        p.add_argument("--manifest", type=Path, help="where to write the run manifest")

    p = sub.add_parser("simulate", help="generate a simulated two-group sample")
    p.add_argument("--case", choices=CASES, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    _add_scenario_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--labels", type=Path)
    p.add_argument("--grid-out", type=Path)
    manifest_arg(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cluster", help="cluster a sample with functional k-means")
    _add_data_args(p)
    p.add_argument("--k", type=_positive_int, required=True)
    _add_metric_args(p)
    p.add_argument("--restarts", type=_positive_int, default=10)
    p.add_argument("--max-iter", type=_positive_int, default=200)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out-labels", type=Path, default=Path("clusters.csv"))
    p.add_argument("--report", type=Path, default=Path("report.json"))
    p.add_argument("--spectrum", type=Path, help="also write eigenvalues (k,eigenvalue) here")
    manifest_arg(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("experiment", help="replicated simulation study")
    p.add_argument("--case", choices=CASES, required=True)
    p.add_argument("--metrics", nargs="+", default=list(experiment.STUDY_METRICS),
                   help="l2, truncated:<K>, dp:<log10 p>")
    p.add_argument("--M", type=_positive_int, default=50)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--restarts", type=_positive_int, default=1)
    p.add_argument("--max-iter", type=_positive_int, default=200)
    p.add_argument("--jobs", type=_positive_int, default=1)
    _add_scenario_args(p)
    p.add_argument("--out-dir", type=Path, required=True)
    manifest_arg(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("silhouette", help="silhouette values for one or more k")
    _add_data_args(p, truth=False)
    _add_metric_args(p)
    p.add_argument("--k-list", type=_positive_int, nargs="+", default=[2, 3, 4, 5])
    p.add_argument("--labels", type=Path, help="score these labels instead of clustering")
    p.add_argument("--restarts", type=_positive_int, default=10)
    p.add_argument("--max-iter", type=_positive_int, default=200)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    manifest_arg(p)
    p.set_defaults(func=cmd_silhouette)

    p = sub.add_parser("sweep", help="misclassification of dp k-means against log10(p)")
    p.add_argument("--case", choices=CASES)
    p.add_argument("--data", type=Path)
    p.add_argument("--growth", action="store_true")
    p.add_argument("--grid", type=Path)
    p.add_argument("--truth", type=Path)
    p.add_argument("--k", type=_positive_int, default=2)
    p.add_argument("--log10p-grid", type=float, nargs="+")
    p.add_argument("--M", type=_positive_int, default=50,
                   help="replicate datasets (--case) or k-means runs (--data/--growth)")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--restarts", type=_positive_int, default=1)
    p.add_argument("--max-iter", type=_positive_int, default=200)
    p.add_argument("--jobs", type=_positive_int, default=1)
    _add_scenario_args(p)
    p.add_argument("--out", type=Path, required=True)
    manifest_arg(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest_file", type=Path)
    p.set_defaults(func=None)

    p = sub.add_parser("import-growth", help="convert R exports of growth$hgtm / growth$hgtf")
    p.add_argument("boys", type=Path)
    p.add_argument("girls", type=Path)
    p.add_argument("--out-dir", type=Path, help=f"default: ${datasets.ENV_VAR} or the package data dir")
    manifest_arg(p)
    p.set_defaults(func=cmd_import_growth)
    return parser


def _default_manifest(args) -> Path:
    for attr in ("out_dir",):
        d = getattr(args, attr, None)
        if d is not None:
            return Path(d) / "manifest.json"
    for attr in ("out", "report"):
        f = getattr(args, attr, None)
        if f is not None:
            return Path(f).with_name(Path(f).stem + ".manifest.json")
    return Path("manifest.json")


def _params(args) -> dict:
    skip = {"func", "manifest", "verbose"}
    return {
        k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k not in skip
    }


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "replay":
        try:
            manifest = json.loads(args.manifest_file.read_text())
            replay_argv = manifest["argv"]
        except (OSError, ValueError, KeyError) as exc:
            print(f"mfkmeans: cannot read manifest: {exc}", file=sys.stderr)
            return EXIT_INGESTION
        return run(replay_argv)

    inputs: dict = {}
    outputs: list = []
    started = time.time()
    t0 = time.perf_counter()
    try:
        summary = args.func(args, inputs, outputs)
    except UsageError as exc:
        print(f"mfkmeans {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestionError, FileNotFoundError) as exc:
        print(f"mfkmeans {args.command}: ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except (NumericalError, ArithmeticError, DimensionError) as exc:
        print(f"mfkmeans {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"mfkmeans {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    elapsed = time.perf_counter() - t0

    manifest = {
        "command": args.command,
        "argv": list(argv),
        "parameters": _params(args),
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "outputs": outputs,
        "tool": {"name": "mfkmeans", "version": _tool_version()},
        "timings": {"started_unix": started, "wall_seconds": elapsed},
        "summary": summary,
    }
    io.write_json(manifest, args.manifest or _default_manifest(args))
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
