"""Line-delimited experiment reports with deterministic serialization.

A report starts with the literal header line ``format=1``, followed by one
JSON object per record and a final summary object.  JSON keys are sorted and
separators fixed, so two runs with identical non-timing content are
byte-identical once the ``ms`` timing fields are dropped (or suppressed via
include_timings=False).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, is_dataclass, asdict
from fractions import Fraction

import numpy as np

FORMAT_HEADER = "format=1"


def jsonable(value):
    """Recursively coerce report values into JSON-stable primitives."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if is_dataclass(value) and not isinstance(value, type):
        return jsonable(asdict(value))
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


def _drop_timings(value):
    if isinstance(value, dict):
        return {k: _drop_timings(v) for k, v in value.items() if k != "ms"}
    if isinstance(value, list):
        return [_drop_timings(v) for v in value]
    return value


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class ExperimentReport:
    command: str
    header: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, record: dict):
        self.records.append(jsonable(record))

    def all_ok(self) -> bool:
        return all(rec.get("ok", True) for rec in self.records)

    def lines(self, include_timings: bool = True) -> list[str]:
        out = [FORMAT_HEADER]
        head = {"type": "header", "command": self.command, **jsonable(self.header)}
        records = self.records
        summary = {"type": "summary", **jsonable(self.summary)}
        if not include_timings:
            head = _drop_timings(head)
            records = [_drop_timings(r) for r in records]
            summary = _drop_timings(summary)
        out.append(_dumps(head))
        for rec in records:
            out.append(_dumps({"type": "record", **rec}))
        out.append(_dumps(summary))
        return out

    def text(self, include_timings: bool = True) -> str:
        return "\n".join(self.lines(include_timings)) + "\n"

    def csv_text(self, include_timings: bool = True) -> str:
        """Flatten the records into one CSV table (dotted keys, lists JSON)."""
        rows = []
        for rec in self.records:
            flat = {}
            _flatten("", rec if include_timings else _drop_timings(rec), flat)
            rows.append(flat)
        columns = sorted({k for row in rows for k in row})
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])
        return buf.getvalue()


def _flatten(prefix: str, value, out: dict):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, list):
        out[prefix] = _dumps(value)
    else:
        out[prefix] = value


def strip_timing_lines(text: str) -> str:
    """Re-serialize report text with every ms field removed, for comparisons."""
    out = []
    for line in text.splitlines():
        if line == FORMAT_HEADER or not line.strip():
            out.append(line)
            continue
        out.append(_dumps(_drop_timings(json.loads(line))))
    return "\n".join(out) + "\n"
