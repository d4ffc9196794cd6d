"""Evaluation report output: histogram CSV, JSON summary, and figure."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .models import ERROR_LANDMARK, EvalReport


def write_report(report: EvalReport, basepath) -> list[Path]:
    """Write <base>.csv, <base>.json and <base>.png; returns the paths.

    The CSV holds the histogram as (bin_left, bin_right, count) rows; the
    JSON carries the summary including the RMSE definition used; the PNG
    is the rendered histogram.
    """
    base = Path(basepath)
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = base.with_suffix(".csv")
    json_path = base.with_suffix(".json")
    png_path = base.with_suffix(".png")

    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_left", "bin_right", "count"])
        for left, right, count in zip(report.bin_edges[:-1],
                                      report.bin_edges[1:], report.counts):
            writer.writerow([f"{left:g}", f"{right:g}", int(count)])

    with open(json_path, "w") as f:
        json.dump(report.summary, f, indent=2, sort_keys=True)
        f.write("\n")

    _render_histogram(report, png_path)
    return [csv_path, json_path, png_path]


def _render_histogram(report: EvalReport, path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    widths = report.bin_edges[1:] - report.bin_edges[:-1]
    ax.bar(report.bin_edges[:-1], report.counts, width=widths,
           align="edge", color="steelblue", edgecolor="white")
    landmark = ERROR_LANDMARK[report.kind]
    ax.axvline(landmark, color="firebrick", linestyle="--", linewidth=1.0,
               label=f"{landmark:g} {report.units}")
    name = "forward" if report.kind == "fk" else "inverse"
    ax.set_xlabel(f"per-sample RMSE [{report.units}]")
    ax.set_ylabel("test samples")
    ax.set_title(f"{name} kinematics model error")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
