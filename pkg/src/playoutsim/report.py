"""Comparison tables in markdown, CSV and JSON."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from .simulator import METRIC_FIELDS, RunMetrics

DISPLAY_NAMES = {
    "exp-avg": "Exp-Avg",
    "min-d": "Min-D",
    "spike-det": "Spike-Det",
    "suggested": "Suggested",
}

TABLE_COLUMNS = (
    "Algorithm Used",
    "Average Packet Delay (ms)",
    "Loss Percentage (%)",
    "Mean Opinion Score (MOS)",
)

FORMATS = ("markdown", "csv", "json")
_FORMAT_ALIASES = {"md": "markdown", "markdown-table": "markdown", "markdown": "markdown",
                   "csv": "csv", "json": "json"}


def parse_formats(text: str) -> list[str]:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        if part not in _FORMAT_ALIASES:
            raise ValueError(f"unknown format {part!r}, expected some of {FORMATS}")
        if _FORMAT_ALIASES[part] not in out:
            out.append(_FORMAT_ALIASES[part])
    if not out:
        raise ValueError("at least one output format is required")
    return out


def algorithm_label(algorithm_id: str, params: Mapping[str, Any] | None = None) -> str:
    label = DISPLAY_NAMES.get(algorithm_id, algorithm_id)
    if params:
        label += "(" + ", ".join(f"{k}={v}" for k, v in sorted(params.items())) + ")"
    return label


@dataclass
class ReportRow:
    algorithm_id: str
    label: str
    params: dict[str, Any] = field(default_factory=dict)
    metrics: RunMetrics | None = None
    error: str | None = None


@dataclass
class ReportTable:
    caption: str
    trace: dict[str, Any]
    rows: list[ReportRow] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.error is None for r in self.rows)


def render_markdown(tables: list[ReportTable]) -> str:
    chunks = []
    for table in tables:
        lines = [f"### {table.caption}", ""]
        base = table.trace.get("base_delay_ms")
        if base:
            lines += [f"Base Delay = {base:g}ms", ""]
        lines.append("| " + " | ".join(TABLE_COLUMNS) + " |")
        lines.append("|" + "|".join("---" for _ in TABLE_COLUMNS) + "|")
        for row in table.rows:
            if row.metrics is None:
                lines.append(f"| {row.label} | error: {row.error} | | |")
                continue
            m = row.metrics
            lines.append(f"| {row.label} | {m.avg_playout_delay_ms:.2f} | {m.loss_pct:.2f} | {m.mos:.2f} |")
        chunks.append("\n".join(lines) + "\n")
    return "\n".join(chunks)


def render_csv(tables: list[ReportTable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("trace", "algorithm_id", "label", *METRIC_FIELDS, "error"))
    for table in tables:
        for row in table.rows:
            values = ([repr(getattr(row.metrics, f)) for f in METRIC_FIELDS]
                      if row.metrics else [""] * len(METRIC_FIELDS))
            writer.writerow((table.trace.get("name", ""), row.algorithm_id, row.label,
                             *values, row.error or ""))
    return buf.getvalue()


def render_json(tables: list[ReportTable]) -> str:
    doc = {"tables": []}
    for table in tables:
        doc["tables"].append({
            "caption": table.caption,
            "trace": table.trace,
            "rows": [
                {
                    "algorithm_id": row.algorithm_id,
                    "label": row.label,
                    "params": row.params,
                    **({f: getattr(row.metrics, f) for f in METRIC_FIELDS} if row.metrics else {}),
                    "error": row.error,
                }
                for row in table.rows
            ],
        })
    return json.dumps(doc, indent=2) + "\n"


RENDERERS = {"markdown": render_markdown, "csv": render_csv, "json": render_json}
EXTENSIONS = {"markdown": "md", "csv": "csv", "json": "json"}
