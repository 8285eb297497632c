"""Season-level evaluation metrics and the beta sweep.

All shed metrics use the plain (undiscounted) cumulative realized shed per
bus; the tally's geometric discount is an optimization device and plays no
role in evaluation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .network import Network
from .simulate import ScenarioConfig, SimulationResult, run_baseline, run_fair

OUTLIER_SHED_PCT = 40.0  # rows above this are flagged as outliers but kept


def cumulative_shed_percent(result: SimulationResult) -> float:
    """Realized shed over the whole period as a percentage of total demand."""
    demand = result.total_actual_demand()
    if not demand > 0:
        raise ValueError("total demand over the period is zero")
    return 100.0 * result.total_actual_shed() / demand


def mad_fairness(result: SimulationResult) -> float:
    """Mean absolute deviation of per-bus cumulative shed over its mean.

    0 means perfectly even; by convention a season with no shed at all is
    also 0.
    """
    c = result.cumulative_shed
    mean = float(c.mean())
    if not mean > 0:
        return 0.0
    return float(np.abs(c - mean).mean()) / mean


def max_shed_metric(result: SimulationResult) -> float:
    """Worst-off bus's cumulative shed as a percentage of total demand."""
    demand = result.total_actual_demand()
    if not demand > 0:
        raise ValueError("total demand over the period is zero")
    return 100.0 * float(result.cumulative_shed.max()) / demand


def hamming(z_a, z_b) -> int:
    """Number of switching decisions that differ between two solutions."""
    a = np.asarray(z_a)
    b = np.asarray(z_b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return int(np.sum(a != b))


def mean_daily_hamming(result: SimulationResult) -> float:
    """Average over days of the fair-vs-baseline switching distance."""
    return float(np.mean([r.hamming for r in result.records]))


@dataclass(frozen=True)
class SweepRow:
    """One tradeoff point: a beta value, or the star/triangle reference."""

    label: str  # "beta", "star", or "triangle"
    beta: float  # nan for reference rows
    cumulative_shed_pct: float
    mad_normalized: float  # nan for the triangle (a bound has no distribution)
    max_shed_pct: float
    mean_hamming: float
    flagged: bool


@dataclass
class MetricsReport:
    """Sweep rows ready for CSV emission; columns match the tradeoff axes."""

    rows: list[SweepRow]

    COLUMNS = ("label", "beta", "cumulative_shed_pct", "mad_normalized", "max_shed_pct", "mean_hamming", "flagged")

    def beta_rows(self) -> list[SweepRow]:
        return [r for r in self.rows if r.label == "beta"]

    def reference(self, label: str) -> SweepRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_csv_text(self) -> str:
        out = [",".join(self.COLUMNS)]
        for r in self.rows:
            out.append(
                ",".join(
                    [
                        r.label,
                        _cell(r.beta),
                        _cell(r.cumulative_shed_pct),
                        _cell(r.mad_normalized),
                        _cell(r.max_shed_pct),
                        _cell(r.mean_hamming),
                        "1" if r.flagged else "0",
                    ]
                )
            )
        return "\n".join(out) + "\n"

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv_text())
        return path

    @classmethod
    def from_csv(cls, path) -> "MetricsReport":
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                rows.append(
                    SweepRow(
                        label=rec["label"],
                        beta=_val(rec["beta"]),
                        cumulative_shed_pct=_val(rec["cumulative_shed_pct"]),
                        mad_normalized=_val(rec["mad_normalized"]),
                        max_shed_pct=_val(rec["max_shed_pct"]),
                        mean_hamming=_val(rec["mean_hamming"]),
                        flagged=rec["flagged"] == "1",
                    )
                )
        return cls(rows)


def _cell(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else format(float(x), ".10g")


def _val(text: str) -> float:
    return math.nan if text == "" else float(text)


def summarize(result: SimulationResult, label: str = "star", beta: float = math.nan) -> SweepRow:
    shed_pct = cumulative_shed_percent(result)
    return SweepRow(
        label=label,
        beta=beta,
        cumulative_shed_pct=shed_pct,
        mad_normalized=mad_fairness(result),
        max_shed_pct=max_shed_metric(result),
        mean_hamming=mean_daily_hamming(result),
        flagged=shed_pct > OUTLIER_SHED_PCT,
    )


def beta_sweep(
    net: Network,
    scenario: ScenarioConfig,
    inputs: Sequence,
    betas: Iterable[float],
) -> MetricsReport:
    """One independent fair run per beta, plus the two reference rows.

    The star row is the no-fairness run; the triangle row is the sum of the
    per-day minimum-shed bounds under the risk cap. Every run reuses the same
    inputs and seed, so repeating the sweep is byte-identical.
    """
    betas = [float(b) for b in betas]
    for b in betas:
        if not 0.0 < b < 1.0:
            raise ValueError(f"beta {b} outside (0, 1)")
    star_result = run_baseline(net, scenario, inputs)
    star = summarize(star_result, label="star")

    bound_total = sum(star_result.daily_bounds())
    triangle_pct = 100.0 * bound_total / star_result.total_actual_demand()
    triangle = SweepRow(
        label="triangle",
        beta=math.nan,
        cumulative_shed_pct=triangle_pct,
        mad_normalized=math.nan,
        max_shed_pct=math.nan,
        mean_hamming=math.nan,
        flagged=triangle_pct > OUTLIER_SHED_PCT,
    )

    rows = [star, triangle]
    for b in betas:
        try:
            result = run_fair(net, replace(scenario, beta=b), inputs)
        except Exception as exc:
            raise RuntimeError(f"beta={b}: {exc}") from exc
        rows.append(summarize(result, label="beta", beta=b))
    return MetricsReport(rows)
