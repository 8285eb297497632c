"""Synthetic networks and seasons for demos and regression fixtures.

The workhorse is a hub-and-spoke grid whose single generator covers all but
a few leaves' worth of demand, so some shedding is unavoidable every day
and the interesting question is *where* it lands. Spoke risks are close but
distinct, which lets the fair problem rotate de-energizations within the
risk cap while the no-fairness problem keeps hitting the same buses.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ingest import AlphaSchedule, DayInputs, DemandProfile, build_season
from .network import Network, parse_case, serialize_case


def hub_spoke_case(
    n_leaves: int = 20,
    leaf_demand: float = 1.0,
    shortage_leaves: float = 3.0,
    reactance: float = 0.3,
    risk_base: float = 1.0,
    risk_step: float = 0.01,
) -> tuple[dict, dict[int, float], dict[int, float]]:
    """Case dict plus per-line base risk and per-bus nominal demand.

    Bus 1 is the hub with the only generator, sized ``shortage_leaves``
    short of total peak demand. Leaf k sits on a circle at a radius that
    grows with k and hangs off line k (ids start at 1). Base risks increase
    by ``risk_step`` per line so rankings are strict but swaps stay cheap.
    """
    if n_leaves < 2:
        raise ValueError("need at least two leaves")
    buses = [{"id": 1, "name": "hub", "lon": 0.0, "lat": 0.0}]
    lines = []
    risks: dict[int, float] = {}
    nominal: dict[int, float] = {1: 0.0}
    for k in range(n_leaves):
        bid = k + 2
        angle = 2.0 * math.pi * k / n_leaves
        radius = 0.8 + 0.4 * k / max(1, n_leaves - 1)
        buses.append(
            {
                "id": bid,
                "name": f"leaf{k}",
                "lon": radius * math.cos(angle),
                "lat": radius * math.sin(angle),
            }
        )
        lines.append(
            {
                "id": k + 1,
                "from": 1,
                "to": bid,
                "x": reactance,
                "f_max": 1.5 * leaf_demand,
                "delta_min": -0.6,
                "delta_max": 0.6,
            }
        )
        risks[k + 1] = risk_base * (1.0 + risk_step * k)
        nominal[bid] = leaf_demand
    capacity = leaf_demand * (n_leaves - shortage_leaves)
    case = {
        "base_mva": 100.0,
        "buses": buses,
        "generators": [{"id": 1, "bus": 1, "g_min": 0.0, "g_max": capacity}],
        "lines": lines,
    }
    return case, risks, nominal


def ring_spoke_case(
    n_leaves: int = 12,
    leaf_demand: float = 1.0,
    shortage_leaves: float = 2.0,
    reactance: float = 0.3,
    ring_f_max: float = 0.7,
) -> tuple[dict, dict[int, float]]:
    """Meshed variant: spokes plus a ring joining adjacent leaves.

    De-energizing a spoke no longer islands its leaf (the ring reroutes up
    to ``2 * ring_f_max``), so switching decisions and shed decouple the way
    they do on redundant grids. Lines 1..n are the spokes, n+1..2n the ring.
    """
    if n_leaves < 3:
        raise ValueError("a ring needs at least three leaves")
    case, _, nominal = hub_spoke_case(
        n_leaves=n_leaves,
        leaf_demand=leaf_demand,
        shortage_leaves=shortage_leaves,
        reactance=reactance,
    )
    for k in range(n_leaves):
        case["lines"].append(
            {
                "id": n_leaves + k + 1,
                "from": k + 2,
                "to": (k + 1) % n_leaves + 2,
                "x": reactance,
                "f_max": ring_f_max,
                "delta_min": -0.6,
                "delta_max": 0.6,
            }
        )
    return case, nominal


def flat_profile(horizon: int = 24) -> list[float]:
    return [1.0] * horizon


def evening_profile(horizon: int = 24, floor: float = 0.86) -> list[float]:
    """Mild daily shape peaking in the evening, never below ``floor``."""
    out = []
    for t in range(horizon):
        shape = 0.5 - 0.5 * math.cos(2.0 * math.pi * (t + 1 - 4) / horizon)
        out.append(floor + (1.0 - floor) * shape)
    peak = max(out)
    return [v / peak for v in out]


def season_inputs(
    net: Network,
    nominal: Mapping[int, float],
    base_risk: Mapping[int, float],
    days: int = 10,
    horizon: int = 24,
    seed: int = 0,
    profile: Sequence[float] | None = None,
    risk_noise: float = 0.02,
    forecast_noise: float = 0.02,
    alpha: float | None = 0.6,
    schedule: AlphaSchedule | None = None,
) -> list[DayInputs]:
    """Deterministic multi-day inputs: same daily shape, jittered risks."""
    profile = list(profile) if profile is not None else flat_profile(horizon)
    scaled = _scale_to_buses(net, nominal, profile)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 90210)))
    actuals, risks = [], []
    for _ in range(days):
        actuals.append(scaled)
        day_risk = {
            lid: float(base_risk[lid]) * (1.0 + rng.uniform(-risk_noise, risk_noise))
            for lid in sorted(base_risk)
        }
        risks.append(day_risk)
    return build_season(
        net,
        actuals,
        risks,
        schedule=schedule,
        alpha=alpha,
        seed=seed,
        forecast_noise=forecast_noise,
    )


def _scale_to_buses(net: Network, nominal: Mapping[int, float], profile: Sequence[float]) -> DemandProfile:
    order = net.bus_ids()
    vals = np.array([[nominal.get(b, 0.0) * p for p in profile] for b in order])
    return DemandProfile(order, vals)


def demo_raster(n_cells: int = 40, extent: float = 1.5, decay: float = 6.0) -> dict:
    """Raster dict with a concentrated hotspot off-center, values in [0, 150].

    The decay keeps most of the grid near zero so only lines routed close to
    the hotspot pick up meaningful risk.
    """
    cell = 2.0 * extent / n_cells
    values = []
    for r in range(n_cells):
        row = []
        lat = -extent + (r + 0.5) * cell
        for c in range(n_cells):
            lon = -extent + (c + 0.5) * cell
            d2 = (lon - 0.8) ** 2 + (lat - 0.5) ** 2
            row.append(round(150.0 * math.exp(-decay * d2), 3))
        values.append(row)
    return {
        "origin": [-extent, -extent],
        "cell_size": cell,
        "n_rows": n_cells,
        "n_cols": n_cells,
        "values": values,
    }


def write_demo(out_dir, days: int = 10, n_leaves: int = 12, seed: int = 7, horizon: int = 24) -> dict[str, Path]:
    """Write a self-contained input set runnable through the CLI.

    Produces case.json (a meshed ring-and-spoke grid), a demand/ directory
    with one CSV per day, a per-day risk CSV (raster risks ramped up and
    back down over the season, with noise), and the raster JSON itself,
    usable instead of the risk CSV.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    case, nominal = ring_spoke_case(n_leaves=n_leaves)
    net = parse_case(case)
    paths: dict[str, Path] = {}

    paths["case"] = out / "case.json"
    paths["case"].write_text(json.dumps(serialize_case(net), indent=1))

    profile = evening_profile(horizon)
    demand_dir = out / "demand"
    demand_dir.mkdir(exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 11)))
    day_scales = 1.0 + rng.uniform(-0.03, 0.03, size=days)
    for j in range(1, days + 1):
        rows = ["bus_id,hour,value_pu"]
        for bid in net.bus_ids():
            base = nominal.get(bid, 0.0) * day_scales[j - 1]
            for t, frac in enumerate(profile, start=1):
                rows.append(f"{bid},{t},{base * frac:.6f}")
        p = demand_dir / f"day_{j:02d}.csv"
        p.write_text("\n".join(rows) + "\n")
    paths["demand"] = demand_dir

    raster_dict = demo_raster()
    paths["raster"] = out / "raster.json"
    paths["raster"].write_text(json.dumps(raster_dict, indent=1))

    from .ingest import line_risks_from_raster, load_raster

    base_risk = line_risks_from_raster(load_raster(raster_dict), net)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 13)))
    season = 1.0 + 0.3 * np.sin(np.linspace(0.0, math.pi, days)) if days > 1 else np.ones(1)
    risk_rows = ["day,line_id,risk"]
    for j in range(1, days + 1):
        for lid in sorted(base_risk):
            value = base_risk[lid] * season[j - 1] * (1.0 + rng.uniform(-0.05, 0.05))
            risk_rows.append(f"{j},{lid},{value:.6f}")
    paths["risk"] = out / "risk.csv"
    paths["risk"].write_text("\n".join(risk_rows) + "\n")
    return paths


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if len(argv) != 1:
        print("usage: python -m fairshed.synth OUT_DIR", file=sys.stderr)
        return 2
    paths = write_demo(argv[0])
    for key, p in paths.items():
        print(f"{key}: {p}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
