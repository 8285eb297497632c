"""Per-day inputs: line wildfire risk, hourly demand, and the day's tradeoff weight.

Risk comes either from integrating a fire-potential raster along each line's
routing polyline or from a direct per-day per-line CSV. Demand is a nominal
per-bus vector scaled by a system-wide hourly profile; forecasts are the
actual series with independent uniform noise applied per bus-hour.

All path lengths are planar, in raster cell units (degrees divided by the
cell size); great-circle corrections are deliberately not applied.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

DEFAULT_HORIZON = 24
RASTER_VALUE_MAX = 150.0


@dataclass(frozen=True, eq=False)
class RiskRaster:
    """Gridded fire-potential index, values in [0, 150].

    Cell (row, col) covers longitudes ``origin_lon + [col, col+1) * cell_size``
    and latitudes ``origin_lat + [row, row+1) * cell_size``.
    """

    origin_lon: float
    origin_lat: float
    cell_size: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("raster values must be a 2-D grid")
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if vals.size and (vals.min() < 0 or vals.max() > RASTER_VALUE_MAX):
            raise ValueError(f"raster values outside [0, {RASTER_VALUE_MAX}]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def value_at(self, lon: float, lat: float) -> float:
        """Nearest-cell lookup; points outside the grid contribute 0."""
        col = math.floor((lon - self.origin_lon) / self.cell_size)
        row = math.floor((lat - self.origin_lat) / self.cell_size)
        if 0 <= row < self.n_rows and 0 <= col < self.n_cols:
            return float(self.values[row, col])
        return 0.0


@dataclass(frozen=True, eq=False)
class DemandProfile:
    """Per-bus hourly demand in p.u.; defined (possibly zero) for every bus."""

    buses: tuple[int, ...]
    values: np.ndarray  # shape (len(buses), horizon)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != len(self.buses):
            raise ValueError(f"demand shape {vals.shape} does not match {len(self.buses)} buses")
        if vals.shape[1] < 1:
            raise ValueError("horizon must be at least 1")
        if vals.size and vals.min() < 0:
            raise ValueError("demand must be non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "values", vals)

    @property
    def horizon(self) -> int:
        return self.values.shape[1]

    def total(self) -> float:
        return float(self.values.sum())

    def bus_totals(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def positive_all_hours(self) -> np.ndarray:
        """Mask of buses whose demand is strictly positive at every hour."""
        return (self.values > 0).all(axis=1)

    def for_bus(self, bus_id: int) -> np.ndarray:
        return self.values[self.buses.index(bus_id)]

    @classmethod
    def from_dict(
        cls,
        by_bus: Mapping[int, Sequence[float]],
        buses: Sequence[int] | None = None,
        horizon: int | None = None,
    ) -> "DemandProfile":
        """Build a profile from per-bus series, zero-filling buses without data."""
        if buses is None:
            buses = sorted(by_bus)
        t = horizon
        if t is None:
            t = max((len(v) for v in by_bus.values()), default=DEFAULT_HORIZON)
        vals = np.zeros((len(buses), t))
        for k, bid in enumerate(buses):
            if bid in by_bus:
                series = np.asarray(by_bus[bid], dtype=float)
                if series.shape != (t,):
                    raise ValueError(f"bus {bid}: series length {series.shape[0]} != horizon {t}")
                vals[k] = series
        return cls(tuple(buses), vals)


@dataclass(frozen=True)
class AlphaSchedule:
    """Maps a day's total network risk to the shed-vs-risk weight.

    At or above the historical maximum risk the weight drops to ``alpha_lo``
    (prioritize de-energization); at or below the historical minimum it rises
    to ``alpha_hi``; linear in between.
    """

    alpha_lo: float = 0.3
    alpha_hi: float = 0.6
    hist_risk_min: float = 0.0
    hist_risk_max: float = 1.0

    def __post_init__(self):
        if not self.alpha_lo < self.alpha_hi:
            raise ValueError(f"alpha_lo {self.alpha_lo} must be below alpha_hi {self.alpha_hi}")
        if not self.hist_risk_min < self.hist_risk_max:
            raise ValueError("hist_risk_min must be below hist_risk_max")


@dataclass(frozen=True, eq=False)
class DayInputs:
    """Everything one simulated day needs: risk, forecast/actual demand, alpha."""

    day: int
    risk: dict[int, float]  # line id -> risk of keeping it energized today
    forecast: DemandProfile
    actual: DemandProfile
    alpha: float

    def __post_init__(self):
        if self.day < 1:
            raise ValueError("day index starts at 1")
        if any(v < 0 for v in self.risk.values()):
            raise ValueError("line risk must be non-negative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside [0, 1]")

    def total_risk(self) -> float:
        return float(sum(self.risk.values()))


# -- operations -------------------------------------------------------------


def integrate_line_risk(raster: RiskRaster, path: Sequence[tuple[float, float]], step: float = 0.25) -> float:
    """Integrate the raster field along a polyline, arc length in cell units.

    Each polyline segment is split into pieces no longer than ``step``; the
    raster is sampled at each piece's midpoint and weighted by the piece
    length, so a constant field of value w over a path of length L gives
    exactly w * L. Longer paths through the same field accumulate more risk.
    """
    if len(path) == 0:
        raise ValueError("empty line path")
    if not step > 0:
        raise ValueError("step must be positive")
    total = 0.0
    for (lon0, lat0), (lon1, lat1) in zip(path[:-1], path[1:]):
        seg_len = math.hypot(lon1 - lon0, lat1 - lat0) / raster.cell_size
        if seg_len == 0.0:
            continue
        pieces = max(1, math.ceil(seg_len / step))
        ds = seg_len / pieces
        for k in range(pieces):
            frac = (k + 0.5) / pieces
            lon = lon0 + frac * (lon1 - lon0)
            lat = lat0 + frac * (lat1 - lat0)
            total += raster.value_at(lon, lat) * ds
    return total


def line_risks_from_raster(raster: RiskRaster, net, step: float = 0.25) -> dict[int, float]:
    """Risk for every line of a network by integrating along its path."""
    return {l.id: integrate_line_risk(raster, l.path, step) for l in net.lines}


def scale_demand(
    nominal: Mapping[int, float],
    system_profile: Sequence[float],
    horizon: int | None = None,
) -> DemandProfile:
    """Spread nominal per-bus peaks over the day using a system-wide profile.

    ``system_profile`` holds per-hour fractions of peak in (0, 1], with value
    1 at the peak hour; the resulting demand at bus n and hour t is
    ``nominal[n] * system_profile[t]``.
    """
    profile = np.asarray(list(system_profile), dtype=float)
    if horizon is not None and profile.shape[0] != horizon:
        raise ValueError(f"profile length {profile.shape[0]} != horizon {horizon}")
    if profile.size == 0:
        raise ValueError("empty system profile")
    if profile.min() <= 0 or profile.max() > 1.0 + 1e-12:
        raise ValueError("profile fractions must lie in (0, 1]")
    buses = tuple(sorted(nominal))
    vals = np.array([[nominal[b] * p for p in profile] for b in buses])
    return DemandProfile(buses, vals)


def perturb_demand(profile: DemandProfile, seed, spread: float = 0.02) -> DemandProfile:
    """Multiply every bus-hour by an independent uniform factor in [1-spread, 1+spread].

    Deterministic for a given seed; exact zeros stay zero.
    """
    rng = np.random.default_rng(seed)
    factors = rng.uniform(1.0 - spread, 1.0 + spread, size=profile.values.shape)
    return DemandProfile(profile.buses, profile.values * factors)


def schedule_alpha(day_total_risk: float, sched: AlphaSchedule) -> float:
    """Interpolate the day's weight from total network risk (see AlphaSchedule)."""
    if day_total_risk >= sched.hist_risk_max:
        return sched.alpha_lo
    if day_total_risk <= sched.hist_risk_min:
        return sched.alpha_hi
    span = sched.hist_risk_max - sched.hist_risk_min
    frac = (day_total_risk - sched.hist_risk_min) / span
    return sched.alpha_hi - (sched.alpha_hi - sched.alpha_lo) * frac


def build_season(
    net,
    actual_by_day: Sequence[DemandProfile],
    risk_by_day: Sequence[Mapping[int, float]],
    schedule: AlphaSchedule | None = None,
    alpha: float | None = None,
    seed: int = 0,
    forecast_noise: float = 0.02,
) -> list[DayInputs]:
    """Assemble per-day inputs for a simulation run.

    The loaded demand series is treated as ground truth; the optimizer-facing
    forecast is that series with +/- ``forecast_noise`` uniform error applied
    (set 0 to disable). ``alpha`` fixes the weight for every day; otherwise it
    comes from ``schedule`` and the day's total risk.
    """
    if len(actual_by_day) != len(risk_by_day):
        raise ValueError("demand and risk day counts differ")
    if schedule is None and alpha is None:
        raise ValueError("need either an alpha schedule or a fixed alpha")
    order = net.bus_ids()
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(actual_by_day))
    days = []
    for j, (actual, risk) in enumerate(zip(actual_by_day, risk_by_day), start=1):
        if tuple(actual.buses) != order:
            by_bus = {b: actual.values[k] for k, b in enumerate(actual.buses)}
            actual = DemandProfile.from_dict(by_bus, buses=order, horizon=actual.horizon)
        missing = [l.id for l in net.lines if l.id not in risk]
        if missing:
            raise ValueError(f"day {j}: no risk for lines {missing}")
        if forecast_noise > 0:
            forecast = perturb_demand(actual, children[j - 1], spread=forecast_noise)
        else:
            forecast = actual
        day_alpha = alpha
        if day_alpha is None:
            day_alpha = schedule_alpha(float(sum(risk.values())), schedule)
        days.append(
            DayInputs(day=j, risk={k: float(v) for k, v in risk.items()}, forecast=forecast, actual=actual, alpha=day_alpha)
        )
    return days


# -- file formats -----------------------------------------------------------


def load_raster(source) -> RiskRaster:
    """Read a raster JSON: {origin: [lon, lat], cell_size, n_rows, n_cols, values}."""
    import json

    if isinstance(source, Mapping):
        raw = source
    else:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
        raw = json.loads(text)
    origin = raw["origin"]
    vals = np.asarray(raw["values"], dtype=float)
    if "n_rows" in raw and vals.shape != (raw["n_rows"], raw["n_cols"]):
        raise ValueError(f"raster shape {vals.shape} != declared ({raw['n_rows']}, {raw['n_cols']})")
    return RiskRaster(float(origin[0]), float(origin[1]), float(raw["cell_size"]), vals)


def load_demand_csv(path, buses: Sequence[int] | None = None, horizon: int | None = None) -> DemandProfile:
    """Read one day of demand from CSV columns bus_id, hour, value_pu (hour 1-based)."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append((int(rec["bus_id"]), int(rec["hour"]), float(rec["value_pu"])))
    if not rows:
        raise ValueError(f"{path}: no demand rows")
    t = horizon if horizon is not None else max(h for _, h, _ in rows)
    ids = sorted({b for b, _, _ in rows}) if buses is None else list(buses)
    pos = {b: k for k, b in enumerate(ids)}
    vals = np.zeros((len(ids), t))
    for b, h, v in rows:
        if not 1 <= h <= t:
            raise ValueError(f"{path}: hour {h} outside 1..{t}")
        if b in pos:
            vals[pos[b], h - 1] = v
    return DemandProfile(tuple(ids), vals)


def load_system_profile_csv(path) -> np.ndarray:
    """Read per-hour fractions of peak from CSV columns hour, fraction."""
    entries = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            entries[int(rec["hour"])] = float(rec["fraction"])
    if not entries:
        raise ValueError(f"{path}: no profile rows")
    t = max(entries)
    return np.array([entries.get(h, 0.0) for h in range(1, t + 1)])


def load_risk_csv(path) -> dict[int, dict[int, float]]:
    """Read per-day per-line risk from CSV columns day, line_id, risk."""
    out: dict[int, dict[int, float]] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.setdefault(int(rec["day"]), {})[int(rec["line_id"])] = float(rec["risk"])
    if not out:
        raise ValueError(f"{path}: no risk rows")
    return out
