"""Command line interface.

Exit codes: 0 on success, 2 for invalid input (bad files, configurations or
arguments), 3 when a numerical solver fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .communities import QuadratureError, estimate_c
from .datasets import ValidationError, load_manifest, sample_dataset, validate, write_manifest
from .frechet import FitConfig, FitError, GraphDataset, fit_frechet_mean
from .graph import GraphError, spectrum, spectral_distance, truncated_spectral_distance
from .io import read_graph, write_graph
from .models import ModelError
from .spectral import RootFindError

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3


def _common() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--threads", type=int, help="worker threads for dataset generation")
    common.add_argument("--out", help="output file or directory")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="graphfrechet", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw graphs from a model configuration")
    p.add_argument("--model", required=True, help="model configuration JSON file")
    p.add_argument("--N", type=int, default=1, help="number of graphs")
    p.add_argument("--format", choices=["edgelist", "json"], default="edgelist")

    p = sub.add_parser("spectrum", parents=[common], help="adjacency spectrum of a graph file")
    p.add_argument("graph")
    p.add_argument("--c", type=int, help="keep only the c largest eigenvalues")

    p = sub.add_parser("distance", parents=[common], help="spectral distance between two graph files")
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.add_argument("--c", type=int, help="truncate to the c largest eigenvalues")

    p = sub.add_parser("estimate-communities", parents=[common], help="estimate the number of communities")
    p.add_argument("--dataset", required=True, help="dataset manifest JSON")
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--cap", type=int, default=20)

    p = sub.add_parser("frechet-mean", parents=[common], help="fit a block model Fréchet mean")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="fit configuration JSON")
    p.add_argument("--report", help="directory for trace/histogram CSVs and figures")

    p = sub.add_parser("regress", parents=[common], help="Fréchet regression on a predictor")
    p.add_argument("--dataset", required=True, help="manifest whose entries carry predictor values")
    p.add_argument("--times", required=True, help="comma-separated query values")
    p.add_argument("--config", help="fit configuration JSON")
    p.add_argument("--report", help="directory for CSVs and figures")

    p = sub.add_parser("experiment", parents=[common], help="run a named experiment")
    p.add_argument("name", help="exp1 .. exp5 or regression")
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--config", help="JSON file overriding the experiment configuration")
    p.add_argument("--no-figures", action="store_true")
    return parser


def _emit(doc, out=None):
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc.msg} (line {exc.lineno})") from None


def _fit_config(path, seed):
    d = {} if path is None else _load_json(path)
    validate(d, "fit_config")
    cfg = FitConfig.from_dict(d)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _cmd_sample(a):
    cfg = _load_json(a.model)
    validate(cfg, "model_config")
    seed = getattr(a, "seed", cfg.get("seed", 0))
    threads = getattr(a, "threads", 1)
    out = getattr(a, "out", None)
    ext = ".json" if a.format == "json" else ".txt"
    if a.N == 1:
        from .models import sample_from_config

        g = sample_from_config(cfg, seed)
        if out:
            write_graph(g, out)
        else:
            from .io import format_edgelist, format_json

            sys.stdout.write(format_json(g) if a.format == "json" else format_edgelist(g))
        return EXIT_OK
    if not out:
        raise ValidationError("--out DIR is required when --N > 1")
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    graphs = sample_dataset(cfg, a.N, seed, threads)
    paths = [write_graph(g, d / f"graph_{i:04d}{ext}") for i, g in enumerate(graphs)]
    write_manifest(paths, d / "manifest.json")
    print(json.dumps({"N": a.N, "manifest": str(d / "manifest.json")}))
    return EXIT_OK


def _cmd_spectrum(a):
    g = read_graph(a.graph)
    lam = spectrum(g)
    if a.c is not None:
        if not 1 <= a.c <= g.n:
            raise GraphError(f"c must lie in [1, {g.n}]")
        lam = lam[: a.c]
    _emit({"n": g.n, "m": g.m, "spectrum": lam.tolist()}, getattr(a, "out", None))
    return EXIT_OK


def _cmd_distance(a):
    g1, g2 = read_graph(a.graph1), read_graph(a.graph2)
    if a.c is None:
        doc = {"d_A": spectral_distance(g1, g2)}
    else:
        doc = {"d_Ac": truncated_spectral_distance(g1, g2, a.c), "c": a.c}
    _emit(doc, getattr(a, "out", None))
    return EXIT_OK


def _dataset(a):
    return load_manifest(a.dataset, getattr(a, "seed", None), getattr(a, "threads", 1))


def _cmd_estimate(a):
    loaded = _dataset(a)
    ds = GraphDataset.from_graphs(loaded.graphs)
    est = estimate_c(ds.spectra.mean(0), a.K, a.cap)
    doc = est.to_dict()
    validate(doc, "community_estimate")
    _emit(doc, getattr(a, "out", None))
    return EXIT_OK


def _write_fit_report(d, ds, fit):
    from . import plotting
    from .experiments import emit_histogram, write_histogram_csv, write_trace_csv

    d = Path(d)
    d.mkdir(parents=True, exist_ok=True)
    hist = emit_histogram(ds.spectra, spectrum(fit.representative))
    write_trace_csv(d / "trace.csv", fit)
    write_histogram_csv(d / "histogram.csv", hist)
    plotting.plot_objective_trace(fit.trace.objectives, fit.irreducible, d / "objective.png")
    plotting.plot_histogram(hist, d / "histogram.png")
    if ds.graphs:
        plotting.plot_adjacency_pair(ds.graphs[0].adjacency(), fit.representative.adjacency(), d / "adjacency.png")


def _cmd_frechet(a):
    cfg = _fit_config(a.config, getattr(a, "seed", None))
    loaded = _dataset(a)
    ds = GraphDataset.from_graphs(loaded.graphs)
    fit = fit_frechet_mean(ds, cfg)
    doc = fit.to_dict()
    validate(doc, "fit_result")
    _emit(doc, getattr(a, "out", None))
    if a.report:
        _write_fit_report(a.report, ds, fit)
    if fit.status == "root_failure":
        print("solver failure: no root for the expected eigenvalue equation", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_regress(a):
    from .regression import RegressionDataset, run_regression

    cfg = _fit_config(a.config, getattr(a, "seed", None))
    try:
        times = [float(x) for x in a.times.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"--times must be comma-separated numbers, got {a.times!r}") from None
    loaded = _dataset(a)
    if loaded.times is None:
        raise ValidationError("regression needs a predictor value 't' for every dataset entry")
    ds = RegressionDataset(loaded.times, GraphDataset.from_graphs(loaded.graphs))
    report = run_regression(ds, times, cfg, threads=getattr(a, "threads", 1))
    doc = report.to_dict()
    validate(doc, "regression_result")
    _emit(doc, getattr(a, "out", None))
    if a.report:
        from . import plotting
        from .experiments import write_csv

        d = Path(a.report)
        d.mkdir(parents=True, exist_ok=True)
        c = report.c_star
        rows = [[t, report.fits[t].params.q, *report.fits[t].params.p, *report.fits[t].fitted_spectrum] for t in times]
        write_csv(d / "regression.csv", ["t", "q"] + [f"p_{k + 1}" for k in range(c)] + [f"fitted_{k + 1}" for k in range(c)], rows)
        p_fit = np.array([report.fits[t].params.p for t in times])
        plotting.plot_regression(times, p_fit, d / "regression.png", sample_times=ds.times)
    if any(report.fits[t].status == "root_failure" for t in times):
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_experiment(a):
    from .experiments import ExperimentConfig, get_preset, run_experiment

    cfg = get_preset(a.name)
    if a.config:
        merged = cfg.to_dict()
        merged.update(_load_json(a.config))
        cfg = ExperimentConfig.from_dict(merged)
    cfg = cfg.with_overrides(N=a.N, n=a.n, seed=getattr(a, "seed", None))
    out = getattr(a, "out", None) or f"runs/{cfg.name}"
    run_experiment(cfg, out, threads=getattr(a, "threads", 1), figures=not a.no_figures)
    print(json.dumps({"experiment": cfg.name, "out": str(out)}))
    return EXIT_OK


COMMANDS = {
    "sample": _cmd_sample,
    "spectrum": _cmd_spectrum,
    "distance": _cmd_distance,
    "estimate-communities": _cmd_estimate,
    "frechet-mean": _cmd_frechet,
    "regress": _cmd_regress,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (RootFindError, FitError, QuadratureError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (GraphError, ModelError, ValidationError, ValueError, KeyError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
