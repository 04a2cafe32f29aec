"""Text, CSV and JSON renderings of cost reports and consensus traces."""

from __future__ import annotations

import csv
import io
from typing import Any

from sparse_j_factorizer.models import ConsensusTrace, CostReport

_COST_HEADER = ["method", "nnz", "published_nnz", "d_max", "phase2_rounds"]
_TRACE_HEADER = ["round", "phase", "label", "max_error", "nnz", "d_max"]


def _join(counts: tuple[int, ...]) -> str:
    return "/".join(str(c) for c in counts) if counts else "-"


def _cost_rows(report: CostReport) -> list[list[str]]:
    return [
        [
            row.method.value,
            _join(row.nnz),
            _join(row.published_nnz),
            str(row.d_max),
            str(row.rounds),
        ]
        for row in report.rows
    ]


def format_cost_table(report: CostReport) -> str:
    """Aligned text table; rows whose count differs from the closed form get a '*'."""
    rows = _cost_rows(report)
    for line, row in zip(rows, report.rows):
        if not row.matches_published:
            line[2] += " *"
    widths = [
        max(len(cell) for cell in column) for column in zip(_COST_HEADER, *rows)
    ]

    def render(cells: list[str]) -> str:
        return "  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip()

    lines = [f"partition: {report.partition}", render(_COST_HEADER)]
    lines.append("  ".join("-" * w for w in widths))
    lines += [render(r) for r in rows]
    if any(not row.matches_published for row in report.rows):
        lines.append("* counted nnz differs from the published closed form")
    return "\n".join(lines) + "\n"


def cost_report_csv(report: CostReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_COST_HEADER)
    writer.writerows(_cost_rows(report))
    return buffer.getvalue()


def cost_report_json(report: CostReport) -> dict[str, Any]:
    return {
        "partition": report.partition.to_text(),
        "tau": report.partition.tau,
        "rows": [
            {
                "method": row.method.value,
                "nnz": list(row.nnz),
                "published_nnz": list(row.published_nnz),
                "matches_published": row.matches_published,
                "d_max": row.d_max,
                "phase2_rounds": row.rounds,
            }
            for row in report.rows
        ],
    }


def trace_csv(trace: ConsensusTrace) -> str:
    """One line per round; round 0 is the initial state."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_TRACE_HEADER)
    writer.writerow([0, "initial", "", repr(trace.errors[0]), "", ""])
    for index, (phase, label, (count, degree)) in enumerate(
        zip(trace.phases, trace.labels, trace.round_costs), start=1
    ):
        writer.writerow([index, phase, label, repr(trace.errors[index]), count, degree])
    return buffer.getvalue()
