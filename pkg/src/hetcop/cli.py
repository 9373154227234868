"""Command-line interface binding the estimation, simulation, and benchmark
modules into reproducible, artifact-producing workflows."""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .benchmark import run_benchmark
from .data import DataError, load_dataset, load_schema, save_dataset, save_schema
from .em import (
    EmOptions,
    bootstrap_stability,
    em_fit,
    grid_select,
    partial_correlations,
)
from .fgl import FglOptions
from .io import (
    write_edges_csv,
    write_fit_json,
    write_graphml,
    write_roc_csv,
    write_score_table,
    write_stability_csv,
    write_stability_summary,
    write_summary_csv,
    write_truth_json,
)
from .metrics import MetricError
from .simgen import (
    MarginalSpec,
    NetworkSpec,
    SimulationError,
    generate_truth,
    sample_mixed_data,
)
from .truncnorm import NumericsError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4


def _fail(code: int, kind: str, message: str):
    click.echo(json.dumps({"error": {"type": kind, "message": message}}), err=True)
    sys.exit(code)


def _guarded(func):
    """Map exception families onto the documented exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (DataError, SimulationError) as exc:
            _fail(EXIT_USAGE, type(exc).__name__, str(exc))
        except (NumericsError, MetricError, np.linalg.LinAlgError) as exc:
            _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
        except ValueError as exc:
            _fail(EXIT_USAGE, type(exc).__name__, str(exc))

    return wrapper


def _workers(requested: int | None) -> int:
    """Resolve the worker count: flag beats HETCOP_THREADS beats cpu count.

    Execution is sequential with deterministic ordering regardless; the
    value is recorded for forward compatibility.
    """
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("HETCOP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DataError(f"HETCOP_THREADS={env!r} is not an integer")
    return os.cpu_count() or 1


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise DataError(f"cannot parse float list {text!r}")


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise DataError(f"cannot parse integer list {text!r}")


def _em_options(seed, n_samples, burn_in, max_iter, tol) -> EmOptions:
    return EmOptions(
        max_iter=max_iter,
        tol=tol,
        n_samples=n_samples,
        burn_in=burn_in,
        seed=seed,
        fgl=FglOptions(),
    )


@click.group()
def main():
    """Joint sparse graphical models for mixed-type data across groups."""


@main.command("fit")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--group-col", required=True)
@click.option("--method", type=click.Choice(["gibbs", "approx"]), default="approx")
@click.option("--lambda1", default="0.1", help="Comma-separated grid.")
@click.option("--lambda2", default="0.0", help="Comma-separated grid.")
@click.option("--criterion", type=click.Choice(["aic", "ebic"]), default="ebic")
@click.option("--gamma", default=0.5, type=float)
@click.option("--seed", required=True, type=int)
@click.option("--n-samples", default=1000, type=int)
@click.option("--burn-in", default=100, type=int)
@click.option("--max-iter", default=50, type=int)
@click.option("--tol", default=1e-4, type=float)
@click.option("--workers", default=None, type=int)
@click.option("--out-dir", default=".", type=click.Path())
@_guarded
def cmd_fit(
    data_path, schema_path, group_col, method, lambda1, lambda2,
    criterion, gamma, seed, n_samples, burn_in, max_iter, tol, workers, out_dir,
):
    """Fit the model to a dataset; write fit JSON, edge CSV, and GraphML."""
    _workers(workers)
    schema = load_schema(schema_path)
    dataset = load_dataset(data_path, schema, group_col)
    lam1_grid = _parse_floats(lambda1)
    lam2_grid = _parse_floats(lambda2)
    opts = _em_options(seed, n_samples, burn_in, max_iter, tol)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if len(lam1_grid) * len(lam2_grid) > 1:
        fit, table = grid_select(
            dataset, lam1_grid, lam2_grid, criterion, gamma, method, opts
        )
        write_score_table(out / "scores.csv", table)
    else:
        fit = em_fit(dataset, lam1_grid[0], lam2_grid[0], method, opts)

    graph = partial_correlations(
        fit.theta_set, dataset.variables, dataset.group_labels
    )
    write_fit_json(out / "fit.json", fit, dataset.variables, dataset.group_labels)
    write_edges_csv(out / "edges.csv", graph)
    write_graphml(out / "graph.graphml", graph)
    click.echo(f"fit complete: method={method} lambda1={fit.lambda1} "
               f"lambda2={fit.lambda2} converged={fit.converged}")


@main.command("simulate")
@click.option("--kind", type=click.Choice(["random", "cluster", "scalefree"]),
              default="random")
@click.option("--p", default=50, type=int)
@click.option("--k", "n_groups", default=3, type=int)
@click.option("--n", "n_per_group", default="100,100,100")
@click.option("--rho", default=0.25, type=float)
@click.option("--pe", "edge_prob", default=0.05, type=float)
@click.option("--epsilon", default=0.1, type=float)
@click.option("--seed", required=True, type=int)
@click.option("--out-dir", default=".", type=click.Path())
@_guarded
def cmd_simulate(kind, p, n_groups, n_per_group, rho, edge_prob, epsilon, seed,
                 out_dir):
    """Generate a ground-truth network and mixed-type dataset."""
    sizes = _parse_ints(n_per_group)
    if len(sizes) == 1:
        sizes = sizes * n_groups
    if len(sizes) != n_groups:
        raise DataError("--n must list one size, or one per group")
    spec = NetworkSpec(
        kind=kind, p=p, n_groups=n_groups, rho=rho,
        edge_prob=edge_prob, epsilon=epsilon, seed=seed,
    )
    truth = generate_truth(spec)
    dataset = sample_mixed_data(truth, sizes, MarginalSpec(), seed=seed)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out / "data.csv")
    save_schema(dict(zip(dataset.variables, dataset.kinds)), out / "schema.json")
    write_truth_json(out / "truth.json", truth, kinds=dataset.kinds)
    click.echo(f"simulated {kind} network: p={p} K={n_groups} n={sizes}")


@main.command("benchmark")
@click.option("--kind", type=click.Choice(["random", "cluster", "scalefree"]),
              default="random")
@click.option("--p", default=50, type=int)
@click.option("--k", "n_groups", default=3, type=int)
@click.option("--n", "n_per_group", default="100")
@click.option("--rho", default=0.25, type=float)
@click.option("--pe", "edge_prob", default=0.05, type=float)
@click.option("--reps", default=5, type=int)
@click.option("--methods", default="approx,fgl_raw,glasso_raw")
@click.option("--lambda1", default=None, help="Comma-separated grid; "
              "defaults to 0..1 step 0.05.")
@click.option("--lambda2", default="0,0.1,1")
@click.option("--seed", required=True, type=int)
@click.option("--n-samples", default=1000, type=int)
@click.option("--burn-in", default=100, type=int)
@click.option("--max-iter", default=5, type=int)
@click.option("--tol", default=1e-3, type=float)
@click.option("--log10-counts", is_flag=True, default=False,
              help="log10(1+x) count columns for the raw baselines.")
@click.option("--workers", default=None, type=int)
@click.option("--out-dir", default=".", type=click.Path())
@_guarded
def cmd_benchmark(
    kind, p, n_groups, n_per_group, rho, edge_prob, reps, methods,
    lambda1, lambda2, seed, n_samples, burn_in, max_iter, tol,
    log10_counts, workers, out_dir,
):
    """Simulate one setting and score every method over the penalty grid."""
    _workers(workers)
    sizes = _parse_ints(n_per_group)
    if len(sizes) == 1:
        sizes = sizes * n_groups
    method_list = [m.strip() for m in methods.split(",") if m.strip()]
    for m in method_list:
        if m not in ("gibbs", "approx", "fgl_raw", "glasso_raw"):
            raise DataError(f"unknown method {m!r}")
    spec = NetworkSpec(
        kind=kind, p=p, n_groups=n_groups, rho=rho, edge_prob=edge_prob, seed=seed
    )
    opts = _em_options(seed, n_samples, burn_in, max_iter, tol)
    result = run_benchmark(
        spec,
        sizes,
        n_replicates=reps,
        methods=tuple(method_list),
        lambda1_grid=None if lambda1 is None else _parse_floats(lambda1),
        lambda2_values=tuple(_parse_floats(lambda2)),
        opts=opts,
        seed=seed,
        log10_counts=log10_counts,
    )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    setting = {"network_kind": kind, "p": p, "n": ",".join(map(str, sizes)),
               "rho": rho}
    write_summary_csv(out / "summary.csv", result)
    write_roc_csv(out / "roc.csv", result.curves, setting)
    click.echo(f"benchmark complete: {len(result.rows)} summary rows, "
               f"{result.n_failed_points} failed grid points")
    if result.n_failed_points > 0:
        sys.exit(EXIT_PARTIAL)


@main.command("bootstrap")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--group-col", required=True)
@click.option("--b", "n_replicates", required=True, type=int)
@click.option("--acceptance", default=0.9, type=float)
@click.option("--lambda1", default="0.1,0.2,0.4")
@click.option("--lambda2", default="0.0")
@click.option("--criterion", type=click.Choice(["aic", "ebic"]), default="ebic")
@click.option("--gamma", default=0.5, type=float)
@click.option("--method", type=click.Choice(["gibbs", "approx"]), default="approx")
@click.option("--seed", required=True, type=int)
@click.option("--n-samples", default=1000, type=int)
@click.option("--burn-in", default=100, type=int)
@click.option("--max-iter", default=10, type=int)
@click.option("--tol", default=1e-3, type=float)
@click.option("--workers", default=None, type=int)
@click.option("--out-dir", default=".", type=click.Path())
@_guarded
def cmd_bootstrap(
    data_path, schema_path, group_col, n_replicates, acceptance,
    lambda1, lambda2, criterion, gamma, method, seed,
    n_samples, burn_in, max_iter, tol, workers, out_dir,
):
    """Edge-stability frequencies over resampled datasets."""
    _workers(workers)
    if n_replicates < 1:
        raise DataError("--b must be at least 1")
    schema = load_schema(schema_path)
    dataset = load_dataset(data_path, schema, group_col)
    opts = _em_options(seed, n_samples, burn_in, max_iter, tol)
    report = bootstrap_stability(
        dataset,
        n_replicates=n_replicates,
        lambda1_grid=tuple(_parse_floats(lambda1)),
        lambda2_grid=tuple(_parse_floats(lambda2)),
        criterion=criterion,
        gamma=gamma,
        acceptance_ratio=acceptance,
        seed=seed,
        method=method,
        opts=opts,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_stability_csv(out / "edge_frequencies.csv", report)
    write_stability_summary(out / "stability.json", report, fresh_reference=True)
    click.echo(
        f"bootstrap complete: B={report.n_replicates} failed={report.n_failed} "
        f"discovery_rate={report.discovery_rate:.4f}"
    )


if __name__ == "__main__":
    main()
