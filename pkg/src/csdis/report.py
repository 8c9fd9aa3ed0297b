"""Report serialisation, table rendering and cross-metric correlation."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .cstd import atomic_write_text
from .errors import ConfigError, DegenerateInput, FormatError, ShapeError
from .scenarios import METRICS

# label and direction of improvement per metric, in table order
METRIC_INFO = {
    "dc_cs": ("DC(C,s)", "down"),
    "dc_ic": ("DC(I,C)", "up"),
    "dc_is": ("DC(I,s)", "up"),
    "iob_ic": ("IOB(I,C)", "up"),
    "iob_is": ("IOB(I,s)", "up"),
}
ARROWS = {"up": "↑", "down": "↓"}
SCENARIO_LABELS = {
    "gt_gt": "GT C / GT s",
    "rand_gt": "Random C / GT s",
    "gt_rand": "GT C / Random s",
    "rand_rand": "Random C / Random s",
    "gt_corr": "GT C / Correlated s",
}
FORMATS = ("markdown", "csv", "json")


def load_schema(name: str) -> dict:
    return json.loads((resources.files("csdis") / "schemas" / f"{name}.schema.json").read_text())


def validate(doc: dict, schema: str = "report") -> None:
    try:
        jsonschema.validate(doc, load_schema(schema))
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise FormatError(f"{schema} JSON invalid at {where}: {e.message}") from None


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(path, report: dict) -> None:
    validate(report)
    atomic_write_text(path, dumps(report))


def load_report(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON: {e.msg}", e.pos) from None
    validate(doc)
    return doc


def strip_timing(report: dict) -> dict:
    """Copy of ``report`` without wall-clock fields, for reproducibility comparisons."""
    out = copy.deepcopy(report)
    out.pop("timing", None)
    for sc in out.get("scenarios", []):
        sc.pop("timing", None)
    return out


def format_cell(mean: float, std: float) -> str:
    return f"{mean:.2f} ±{std:.2f}"


def table_data(report: dict) -> dict:
    columns = [sc["scenario"] for sc in report["scenarios"]]
    rows = []
    for m in METRICS:
        label, direction = METRIC_INFO[m]
        cells = []
        for sc in report["scenarios"]:
            st = sc["metrics"][m]
            cells.append({"mean": st["mean"], "std": st["std"],
                          "text": format_cell(st["mean"], st["std"])})
        rows.append({"metric": label, "direction": direction, "cells": cells})
    return {"columns": columns, "rows": rows}


def render_table(report: dict, fmt: str = "markdown") -> str:
    """Metrics as rows, scenarios as columns, ``mean ±std`` cells to two decimals."""
    if fmt not in FORMATS:
        raise ConfigError(f"unknown table format {fmt!r}; choose from {FORMATS}")
    data = table_data(report)
    if fmt == "json":
        validate(data, "table")
        return json.dumps(data, indent=2, ensure_ascii=False) + "\n"
    header = ["Metric"] + [SCENARIO_LABELS[c] for c in data["columns"]]
    body = [
        [f"{r['metric']} ({ARROWS[r['direction']]})"] + [c["text"] for c in r["cells"]]
        for r in data["rows"]
    ]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(body)
        return buf.getvalue()
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join([":---"] + ["---:"] * (len(header) - 1)) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return "\n".join(lines) + "\n"


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ShapeError(f"pearson needs two equal-length vectors, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ShapeError("pearson needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    # elementwise products keep the result exactly symmetric in (x, y)
    sxx = float(np.sum(dx * dx))
    syy = float(np.sum(dy * dy))
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInput("pearson is undefined for a constant input")
    r = float(np.sum(dx * dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def cross_metric_table(report: dict):
    """Pearson matrix of the metric means across scenarios.

    Returns ``(names, matrix, degenerate)``; rows and columns of constant
    metrics are NaN and their names are listed in ``degenerate``.
    """
    if len(report["scenarios"]) < 3:
        raise ConfigError("cross-metric correlation needs at least 3 scenarios")
    cols = {m: [sc["metrics"][m]["mean"] for sc in report["scenarios"]] for m in METRICS}
    degenerate = [m for m in METRICS if np.ptp(cols[m]) == 0.0]
    k = len(METRICS)
    mat = np.full((k, k), np.nan)
    for i, a in enumerate(METRICS):
        for j in range(i, k):
            b = METRICS[j]
            if a in degenerate or b in degenerate:
                continue
            mat[i, j] = mat[j, i] = 1.0 if i == j else pearson(cols[a], cols[b])
    return list(METRICS), mat, degenerate


def cross_metric_csv(report: dict) -> str:
    names, mat, degenerate = cross_metric_table(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric"] + names + ["degenerate"])
    for name, row in zip(names, mat):
        writer.writerow([name] + ["nan" if math.isnan(v) else repr(float(v)) for v in row]
                        + [int(name in degenerate)])
    return buf.getvalue()
