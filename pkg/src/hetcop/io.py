"""Artifact serialization: fit JSON, edge CSV, GraphML, truth bundles, score tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import networkx as nx
import numpy as np

from .em import EdgeGraph, FitResult, StabilityReport, partial_correlations
from .simgen import NetworkTruth


def _matrix_payload(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [float(x) for x in m.ravel()],  # row-major
    }


def _matrix_from_payload(payload: dict) -> np.ndarray:
    return np.asarray(payload["data"], dtype=float).reshape(
        payload["rows"], payload["cols"]
    )


def write_fit_json(path, fit: FitResult, variables, group_labels) -> None:
    payload = {
        "method": fit.method,
        "lambda1": fit.lambda1,
        "lambda2": fit.lambda2,
        "converged": fit.converged,
        "trace": list(fit.trace),
        "variables": list(variables),
        "groups": [
            {
                "label": label,
                "n_obs": int(n),
                "precision": _matrix_payload(theta),
                "correlation": _matrix_payload(corr),
                "dof": int(dof),
            }
            for label, n, theta, corr, dof in zip(
                group_labels,
                fit.corr_at_convergence.n_obs,
                fit.theta_set.matrices,
                fit.corr_at_convergence.matrices,
                fit.theta_set.dof,
            )
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_edges_csv(path, graph: EdgeGraph) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "source", "target", "partial_correlation"])
        for label, edges in zip(graph.group_labels, graph.edges):
            for (i, j) in sorted(edges):
                writer.writerow(
                    [
                        label,
                        graph.variables[i],
                        graph.variables[j],
                        f"{edges[(i, j)]:.10g}",
                    ]
                )


def write_graphml(path, graph: EdgeGraph) -> None:
    """All groups in one GraphML file; edges carry group and pcor attributes."""
    g = nx.MultiGraph()
    for name in graph.variables:
        g.add_node(name)
    for label, edges in zip(graph.group_labels, graph.edges):
        for (i, j) in sorted(edges):
            g.add_edge(
                graph.variables[i],
                graph.variables[j],
                group=label,
                pcor=float(edges[(i, j)]),
            )
    nx.write_graphml(g, path)


def write_truth_json(path, truth: NetworkTruth, kinds=None) -> None:
    payload = {
        "p": truth.p,
        "n_groups": truth.n_groups,
        "shared_precision": _matrix_payload(truth.shared_precision),
        "shared_edges": sorted([list(e) for e in truth.shared_edges]),
        "groups": [
            {
                "precision": _matrix_payload(theta),
                "correlation": _matrix_payload(corr),
                "edges": sorted([list(e) for e in edges]),
            }
            for theta, corr, edges in zip(
                truth.precisions, truth.correlations, truth.edge_sets
            )
        ],
    }
    if kinds is not None:
        payload["kinds"] = [
            {"tag": k.tag, **({"levels": k.levels} if k.levels else {})}
            for k in kinds
        ]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_truth_json(path) -> NetworkTruth:
    payload = json.loads(Path(path).read_text())
    return NetworkTruth(
        shared_precision=_matrix_from_payload(payload["shared_precision"]),
        precisions=tuple(
            _matrix_from_payload(g["precision"]) for g in payload["groups"]
        ),
        correlations=tuple(
            _matrix_from_payload(g["correlation"]) for g in payload["groups"]
        ),
        edge_sets=tuple(
            frozenset(tuple(e) for e in g["edges"]) for g in payload["groups"]
        ),
        shared_edges=frozenset(tuple(e) for e in payload["shared_edges"]),
    )


def write_score_table(path, table) -> None:
    """Model-selection score table (one row per penalty pair)."""
    fields = ["lambda1", "lambda2", "score", "converged", "dof", "error"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, restval="")
        writer.writeheader()
        for row in table:
            writer.writerow({k: row.get(k, "") for k in fields})


def write_roc_csv(path, curves, setting: dict | None = None) -> None:
    setting = setting or {}
    fields = [
        "network_kind", "p", "n", "rho",
        "method", "replicate", "lambda2", "lambda1", "fpr", "tpr",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, restval="")
        writer.writeheader()
        for curve in curves:
            for lam1, fpr, tpr in curve.points:
                writer.writerow(
                    {
                        **setting,
                        "method": curve.method,
                        "replicate": curve.replicate,
                        "lambda2": curve.lambda2,
                        "lambda1": lam1,
                        "fpr": f"{fpr:.10g}",
                        "tpr": f"{tpr:.10g}",
                    }
                )


def write_summary_csv(path, result) -> None:
    """Benchmark summary: one row per (method, lambda2) plus bc rows."""
    fields = [
        "network_kind", "p", "n", "rho",
        "method", "lambda2", "auc", "fl", "el",
    ]
    spec = result.spec
    base = {
        "network_kind": spec.kind,
        "p": spec.p,
        "n": ",".join(str(n) for n in result.n_per_group),
        "rho": spec.rho,
    }
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in result.rows:
            writer.writerow(
                {
                    **base,
                    "method": row["method"],
                    "lambda2": row["lambda2"],
                    "auc": f"{row['auc']:.6g}",
                    "fl": f"{row['fl']:.6g}",
                    "el": f"{row['el']:.6g}",
                }
            )


def write_stability_csv(path, report: StabilityReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "source_index", "target_index", "frequency"])
        for label, freqs in zip(report.group_labels, report.frequencies):
            for (i, j), f in sorted(freqs.items()):
                writer.writerow([label, i, j, f"{f:.10g}"])


def write_stability_summary(path, report: StabilityReport, fresh_reference: bool) -> None:
    payload = {
        "n_replicates": report.n_replicates,
        "n_failed": report.n_failed,
        "acceptance_ratio": report.acceptance_ratio,
        "discovery_rate": report.discovery_rate,
        "discovery_rate_per_group": {
            label: rate
            for label, rate in zip(
                report.group_labels, report.discovery_rate_per_group
            )
        },
        "reference_fit": "computed fresh" if fresh_reference else "provided",
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
