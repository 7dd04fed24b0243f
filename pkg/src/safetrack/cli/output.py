"""Run artifacts: trace CSV and metrics JSON."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from ..sim.runner import Metrics, Trace


def _cell(v):
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def write_trace_csv(trace: Trace, path) -> None:
    """One row per control step; floats use shortest round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace.header())
        for rec in trace.records():
            w.writerow([_cell(v) for v in rec])


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    v = float(obj)
    return v if math.isfinite(v) else None


def metrics_document(metrics: Metrics, scenario_name: str, status: str,
                     abort_reason: str | None = None) -> dict:
    doc = {"scenario": scenario_name, "status": status}
    if abort_reason is not None:
        doc["abort_reason"] = abort_reason
    doc.update(metrics.as_dict())
    return _clean(doc)


def write_metrics_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")
