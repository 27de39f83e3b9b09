"""Evaluation reports: PR table CSV, summary JSON, and an SVG plot.

All three are plain deterministic text so golden-file comparison and
diffing work; the SVG is hand-built rather than produced by a plotting
library for the same reason.
"""

from __future__ import annotations

import csv
import io
import os
from typing import Any, Mapping, Sequence
from xml.sax.saxutils import escape

from .evaluation import PRPoint, SweepResult
from .interchange import write_json_atomic, write_text_atomic

PR_CSV_COLUMNS = ("confidence", "tp", "fp", "fn", "ignored", "precision", "recall")

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

_WIDTH, _HEIGHT = 640, 480
_LEFT, _RIGHT, _TOP, _BOTTOM = 64, 616, 24, 424


def write_pr_csv(points: Sequence[PRPoint], path: str | os.PathLike) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(PR_CSV_COLUMNS)
    for p in points:
        writer.writerow([p.confidence, p.tp, p.fp, p.fn, p.ignored, p.precision, p.recall])
    write_text_atomic(path, buffer.getvalue())


def write_summary_json(
    runs: Sequence[tuple[str, SweepResult]],
    path: str | os.PathLike,
    extra: Mapping[str, Any] | None = None,
) -> None:
    payload: dict[str, Any] = {
        "runs": [
            {"label": label, "ap": result.ap, "points": len(result.points)}
            for label, result in runs
        ]
    }
    if extra:
        payload.update(extra)
    write_json_atomic(path, payload, indent=2)


def _px_x(recall: float) -> str:
    return f"{_LEFT + recall * (_RIGHT - _LEFT):.2f}"


def _px_y(precision: float) -> str:
    return f"{_BOTTOM - precision * (_BOTTOM - _TOP):.2f}"


def write_pr_svg(
    runs: Sequence[tuple[str, Sequence[PRPoint]]], path: str | os.PathLike
) -> None:
    """Precision-recall plot: unit axes, one polyline and legend row per run."""
    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif" font-size="12">'
    )
    parts.append(f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>')

    # gridlines and tick labels every 0.25
    for i in range(5):
        frac = i / 4
        x = _px_x(frac)
        y = _px_y(frac)
        parts.append(
            f'<line x1="{x}" y1="{_TOP}" x2="{x}" y2="{_BOTTOM}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{_LEFT}" y1="{y}" x2="{_RIGHT}" y2="{y}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x}" y="{_BOTTOM + 18}" text-anchor="middle">{frac:.2f}</text>'
        )
        parts.append(
            f'<text x="{_LEFT - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">{frac:.2f}</text>'
        )

    # axes
    parts.append(
        f'<line x1="{_LEFT}" y1="{_BOTTOM}" x2="{_RIGHT}" y2="{_BOTTOM}" stroke="black" stroke-width="1.5"/>'
    )
    parts.append(
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_BOTTOM}" stroke="black" stroke-width="1.5"/>'
    )
    mid_x = (_LEFT + _RIGHT) / 2
    mid_y = (_TOP + _BOTTOM) / 2
    parts.append(
        f'<text x="{mid_x:.2f}" y="{_BOTTOM + 40}" text-anchor="middle" font-size="14">Recall</text>'
    )
    parts.append(
        f'<text x="18" y="{mid_y:.2f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {mid_y:.2f})">Precision</text>'
    )

    # one polyline per run, drawn in ascending-recall order
    for run_index, (label, points) in enumerate(runs):
        color = _PALETTE[run_index % len(_PALETTE)]
        ordered = sorted(points, key=lambda p: (p.recall, p.precision))
        coords = " ".join(f"{_px_x(p.recall)},{_px_y(p.precision)}" for p in ordered)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        legend_y = _TOP + 16 + 18 * run_index
        parts.append(
            f'<line x1="{_RIGHT - 150}" y1="{legend_y}" x2="{_RIGHT - 120}" y2="{legend_y}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_RIGHT - 112}" y="{legend_y + 4}">{escape(label)}</text>'
        )

    parts.append("</svg>")
    write_text_atomic(path, "\n".join(parts) + "\n")
