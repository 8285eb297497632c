"""Render run and sweep outputs: tradeoff figures, metrics table, geojson.

Reads the flat files a run or sweep left behind (``sweep.csv``,
``days.csv``, ``bus_shed.csv``, ``result.json``) and writes PNG figures
next to a machine-readable ``metrics.csv`` and a per-bus shed geojson for
external map tools.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import MetricsReport, SweepRow

_METHOD_COLORS = {"star": "tab:red", "triangle": "tab:green", "beta": "tab:blue"}


def render_report(in_dir, out_dir=None) -> dict[str, Path]:
    """Render everything present in ``in_dir``; returns written paths by name."""
    src = Path(in_dir)
    dst = Path(out_dir) if out_dir is not None else src
    dst.mkdir(parents=True, exist_ok=True)
    if not src.is_dir():
        raise FileNotFoundError(f"{src} is not a directory")
    written: dict[str, Path] = {}
    found = False
    if (src / "sweep.csv").exists():
        found = True
        report = MetricsReport.from_csv(src / "sweep.csv")
        written["fig_tradeoff_mad"] = _tradeoff_figure(
            report, "mad_normalized", "Normalized MAD of per-bus cumulative shed",
            dst / "fig_tradeoff_mad.png",
        )
        written["fig_tradeoff_maxshed"] = _tradeoff_figure(
            report, "max_shed_pct", "Max per-bus cumulative shed [% of total demand]",
            dst / "fig_tradeoff_maxshed.png",
        )
        written["fig_hamming"] = _hamming_figure(report, dst / "fig_hamming.png")
        written["metrics"] = report.write_csv(dst / "metrics.csv")
    if (src / "result.json").exists():
        found = True
        result = json.loads((src / "result.json").read_text())
        written["fig_daily_shed"] = _daily_figure(result, dst / "fig_daily_shed.png")
        written["bus_shed_geojson"] = _write_geojson(result, dst / "bus_shed.geojson")
        if "metrics" not in written:
            written["metrics"] = _run_metrics_csv(result, dst / "metrics.csv")
    if not found:
        raise FileNotFoundError(f"nothing to report on in {src} (no sweep.csv or result.json)")
    return written


def summary_text(written: dict[str, Path]) -> str:
    lines = ["report artifacts:"]
    for key in sorted(written):
        lines.append(f"  {key}: {written[key]}")
    return "\n".join(lines)


def _tradeoff_figure(report: MetricsReport, metric: str, xlabel: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    rows = sorted(report.beta_rows(), key=lambda r: r.beta)
    if rows:
        xs = [getattr(r, metric) for r in rows]
        ys = [r.cumulative_shed_pct for r in rows]
        ax.plot(xs, ys, "o-", color=_METHOD_COLORS["beta"], label="fair run (by beta)", zorder=2)
        for r in rows:
            ax.annotate(f"{r.beta:.2f}", (getattr(r, metric), r.cumulative_shed_pct),
                        fontsize=7, xytext=(3, 3), textcoords="offset points")
    for label, marker in (("star", "*"), ("triangle", "^")):
        try:
            ref = report.reference(label)
        except KeyError:
            continue
        x = getattr(ref, metric)
        if math.isnan(x):
            # a bound has no per-bus spread; pin it to the left edge
            x = min((getattr(r, metric) for r in rows), default=0.0)
        ax.plot([x], [ref.cumulative_shed_pct], marker, markersize=14,
                color=_METHOD_COLORS[label], label=f"{label} reference", zorder=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("Cumulative shed [% of total demand]")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _hamming_figure(report: MetricsReport, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    rows = sorted(report.beta_rows(), key=lambda r: r.beta)
    ax.plot([r.beta for r in rows], [r.mean_hamming for r in rows], "o-", color="tab:purple")
    ax.set_xlabel("beta (shed priority)")
    ax.set_ylabel("Mean daily switching distance to no-fairness solution")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _daily_figure(result: dict, path: Path) -> Path:
    days = [d["day"] for d in result["days"]]
    pred = [float(np.sum(d["pred_shed"])) for d in result["days"]]
    actual = [float(np.sum(d["actual_shed"])) for d in result["days"]]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    width = 0.4
    ax.bar([d - width / 2 for d in days], pred, width=width, label="predicted shed", color="tab:orange")
    ax.bar([d + width / 2 for d in days], actual, width=width, label="realized shed", color="tab:blue")
    ax.set_xlabel("day")
    ax.set_ylabel("total shed [p.u. h]")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _run_metrics_csv(result: dict, path: Path) -> Path:
    shed = sum(float(np.sum(d["actual_shed"])) for d in result["days"])
    demand = sum(float(d["actual_total"]) for d in result["days"])
    cum = np.asarray(result["cumulative_shed"], dtype=float)
    mean = cum.mean()
    mad = float(np.abs(cum - mean).mean() / mean) if mean > 0 else 0.0
    shed_pct = 100.0 * shed / demand if demand > 0 else 0.0
    row = SweepRow(
        label="run",
        beta=math.nan,
        cumulative_shed_pct=shed_pct,
        mad_normalized=mad,
        max_shed_pct=100.0 * float(cum.max()) / demand if demand > 0 else 0.0,
        mean_hamming=float(np.mean([d["hamming"] for d in result["days"]])),
        flagged=shed_pct > 40.0,
    )
    return MetricsReport([row]).write_csv(path)


def _write_geojson(result: dict, path: Path) -> Path:
    cum = result["cumulative_shed"]
    features = []
    for k, bus in enumerate(result["buses"]):
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [bus["lon"], bus["lat"]]},
                "properties": {
                    "bus": bus["id"],
                    "name": bus.get("name", ""),
                    "cumulative_shed": cum[k],
                },
            }
        )
    path.write_text(json.dumps({"type": "FeatureCollection", "features": features}, indent=1))
    return path
