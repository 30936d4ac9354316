"""JSON and CSV emission for experiment reports.

The JSON report holds everything that is a function of the spec and seeds,
so repeated runs give identical bytes. Wall-clock fields (``tau_ms``,
``sketch_ms``) go to a sidecar ``<path>.timings.json`` instead. CSV output
keeps the timings inline because it is meant for plotting, not diffing.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict

from .errors import ParameterError
from .experiment import SCHEMA_VERSION, ExperimentReport

__all__ = ["emit_report", "report_to_dict", "CSV_FIELDS"]

TIMING_KEYS = ("tau_ms", "sketch_ms")
CSV_FIELDS = (
    "variant",
    "r",
    "seed",
    "f",
    "ratio",
    "tau_ms",
    "sketch_ms",
    "sketch_nnz",
    "s",
    "alpha",
    "dev_op",
    "dev_gram",
    "converged",
    "error",
)


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def report_to_dict(report: ExperimentReport, timings: bool = False) -> dict:
    cells = []
    for c in report.cells:
        d = asdict(c)
        if not timings:
            for key in TIMING_KEYS:
                d.pop(key)
        cells.append(d)
    medians = []
    for row in report.medians:
        row = dict(row)
        if not timings:
            for key in TIMING_KEYS:
                row.pop(key, None)
        medians.append(row)
    return _clean(
        {
            "schema_version": SCHEMA_VERSION,
            "meta": report.meta,
            "spec": report.spec,
            "cells": cells,
            "medians": medians,
        }
    )


def _timings_dict(report):
    return {
        "schema_version": SCHEMA_VERSION,
        "cells": [
            {"variant": c.variant, "r": c.r, "seed": c.seed, "tau_ms": c.tau_ms, "sketch_ms": c.sketch_ms}
            for c in report.cells
        ],
        "medians": [
            {"variant": m["variant"], "r": m["r"], "tau_ms": m["tau_ms"], "sketch_ms": m["sketch_ms"]}
            for m in report.medians
        ],
    }


def emit_report(report: ExperimentReport, format: str, path, timings_sidecar: bool = True) -> None:
    """Write ``report`` as ``json`` or ``csv``.

    CSV has one row per (variant, r, seed) followed by one ``seed=median``
    row per (variant, r).
    """
    if format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report_to_dict(report), fh, indent=2, allow_nan=False)
            fh.write("\n")
        if timings_sidecar:
            with open(f"{path}.timings.json", "w", encoding="utf-8") as fh:
                json.dump(_clean(_timings_dict(report)), fh, indent=2, allow_nan=False)
                fh.write("\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
            w.writeheader()
            for c in report.cells:
                w.writerow({k: ("" if v is None else v) for k, v in asdict(c).items()})
            for m in report.medians:
                row = {k: m.get(k) for k in ("variant", "r", "f", "ratio", "tau_ms", "sketch_ms", "sketch_nnz")}
                row["seed"] = "median"
                w.writerow({k: ("" if v is None else v) for k, v in row.items()})
    else:
        raise ParameterError(f"report format must be json or csv, got {format!r}")
