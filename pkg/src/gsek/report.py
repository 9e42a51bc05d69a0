"""JSON / CSV serialisation of suite reports and result tables.

Every float is written with 12 significant digits.  JSON reports are objects
{meta, checks}; the schema carries a version string so consumers can detect
layout changes.  CSV rows keep the order in which suites and checks ran.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, List, Sequence

import numpy as np

SCHEMA_VERSION = "1.0"
SIG_DIGITS = 12

CHECK_COLUMNS = ("suite", "id", "anchor", "status", "lhs", "rhs", "tolerance", "metadata")


def fmt(x: float) -> str:
    """Decimal text with 12 significant digits (nan/inf spelled out)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{SIG_DIGITS}g}"


def rounded(obj):
    """Recursively round floats to 12 significant digits; non-finite floats become None."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else None
    if isinstance(obj, dict):
        return {str(k): rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [rounded(v) for v in obj.tolist()]
    return obj


def dumps(obj) -> str:
    return json.dumps(rounded(obj), indent=2, allow_nan=False)


def overall_status(statuses: Iterable[str]) -> str:
    st = set(statuses)
    if "fail" in st:
        return "fail"
    if "inconclusive" in st:
        return "inconclusive"
    return "pass"


def suite_document(reports: Sequence, version: str, seed: int, config: dict) -> dict:
    """{meta, checks} for a list of SuiteReport objects."""
    checks: List[dict] = []
    suites = []
    for rep in reports:
        suites.append({"name": rep.suite_name, "status": rep.status, "checks": len(rep.checks),
                       "wall_time": rep.wall_time})
        for c in rep.checks:
            row = c.as_dict()
            row["suite"] = rep.suite_name
            checks.append(row)
    meta = {
        "schema_version": SCHEMA_VERSION,
        "version": version,
        "seed": int(seed),
        "config": config,
        "suites": suites,
        "status": overall_status(s["status"] for s in suites),
    }
    return {"meta": meta, "checks": checks}


def checks_csv(document: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CHECK_COLUMNS)
    for c in document["checks"]:
        w.writerow([c["suite"], c["id"], c["anchor"], c["status"], fmt(c["lhs"]), fmt(c["rhs"]),
                    fmt(c["tolerance"]), json.dumps(rounded(c["metadata"]), sort_keys=True)])
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    if v is None:
        return ""
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(rounded(v), sort_keys=True)
    return str(v)


def rows_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    """CSV of a list of flat dicts, in the given column order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(k)) for k in columns])
    return buf.getvalue()
