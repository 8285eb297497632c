"""Day-by-day rolling simulation with state feedback.

Each simulated day: solve the switching problem on forecast demand, fix the
chosen de-energizations, operate the network in real time against actual
demand, and (in fair runs) fold the realized shed into the tally that
steers the next day. Days are strictly sequential; inputs are consumed
through an iterator so a day's decision can never peek at future inputs.

Distinct runs (e.g. points of a beta sweep) share only immutable inputs and
may execute concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .fairness import (
    FairContext,
    FairnessMethod,
    ShedTally,
    apply_fairness_terms,
    build_opt_psps_fair,
    update_tally,
)
from .ingest import DayInputs, DemandProfile
from .milp import ObjectiveContext, PspsModel, _risk_array, build_dispatch_skeleton, build_opt_psps
from .network import Network
from .solver import (
    STATUS_INFEASIBLE,
    DispatchSolution,
    SolverConfig,
    SolverError,
    solve,
)

RISK_CAP_TOL = 1e-6


@dataclass(frozen=True)
class ScenarioConfig:
    """Knobs of one simulation run; defaults match the studied setup."""

    days: int
    horizon: int = 24
    beta: float = 0.5
    zeta: float = 0.05
    eta: float = 0.9
    method: FairnessMethod | None = None
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    realtime_redispatch: str = "min-shed"  # or "fair": re-dispatch against the fair objective

    def __post_init__(self):
        if self.days < 1:
            raise ValueError("need at least one day")
        if self.horizon < 1:
            raise ValueError("need at least one hour per day")
        if self.realtime_redispatch not in ("min-shed", "fair"):
            raise ValueError(f"unknown real-time policy {self.realtime_redispatch!r}")


@dataclass(eq=False)
class DayRecord:
    """Everything recorded for one simulated day."""

    day: int
    alpha: float
    z_hat: np.ndarray  # no-fairness decisions
    z: np.ndarray  # implemented decisions
    pred_shed: np.ndarray  # (n_bus, T) from the implemented solve
    actual_shed: np.ndarray  # (n_bus, T) from real-time operation
    energized_risk: float
    base_objective: float
    impl_objective: float
    base_status: str
    impl_status: str
    min_shed_bound: float
    hamming: int
    forecast_total: float
    actual_total: float


@dataclass(eq=False)
class SimulationResult:
    """Ordered day records plus aggregates used by the metrics."""

    net: Network
    records: list[DayRecord]
    final_tally: ShedTally
    cumulative_shed: np.ndarray  # per-bus realized shed, undiscounted

    def total_actual_shed(self) -> float:
        return float(sum(r.actual_shed.sum() for r in self.records))

    def total_actual_demand(self) -> float:
        return float(sum(r.actual_total for r in self.records))

    def daily_bounds(self) -> list[float]:
        return [r.min_shed_bound for r in self.records]


def _solved(pm: PspsModel, cfg: SolverConfig, day: int | None, what: str) -> DispatchSolution:
    sol = solve(pm, cfg)
    if sol.status == STATUS_INFEASIBLE or not sol.has_values:
        where = f"day {day}: " if day is not None else ""
        raise SolverError(f"{where}{what} solve ended {sol.status} without a usable solution")
    return sol


def realtime_operate(
    net: Network,
    z: np.ndarray,
    actual_demand: DemandProfile,
    tie_weights: np.ndarray | None = None,
    cfg: SolverConfig | None = None,
) -> DispatchSolution:
    """Operate with switching fixed: serve as much as possible of actual demand.

    Minimizes total shed; when ``tie_weights`` (per-bus, e.g. the running
    tally) are given, a second pass picks -- among the minimum-shed optima --
    the one with least weight-dot-shed, so degenerate ties break stably and
    in favor of historically burdened buses.
    """
    cfg = cfg or SolverConfig()
    pm = build_dispatch_skeleton(net, actual_demand, fixed_z=np.asarray(z), name="realtime")
    for idx in pm.s_idx.flat:
        pm.model.add_objective(int(idx), 1.0)
    sol = _solved(pm, cfg, None, "real-time")
    min_total = sol.objective
    if tie_weights is None or not np.asarray(tie_weights).max(initial=0.0) > 0:
        sol.objective = sol.total_shed
        return sol
    weights = np.asarray(tie_weights, dtype=float)
    pm2 = build_dispatch_skeleton(net, actual_demand, fixed_z=np.asarray(z), name="realtime_tiebreak")
    total = {int(idx): 1.0 for idx in pm2.s_idx.flat}
    pm2.model.add_row("total_shed", "hold_min_shed", total, ub=min_total + 1e-9 * max(1.0, abs(min_total)))
    for n in range(len(net.buses)):
        if weights[n] > 0:
            for t in range(pm2.horizon):
                pm2.model.add_objective(int(pm2.s_idx[n, t]), weights[n])
    sol2 = _solved(pm2, cfg, None, "real-time tie-break")
    sol2.objective = sol2.total_shed
    return sol2


def _realtime_fair(
    net: Network,
    z: np.ndarray,
    actual_demand: DemandProfile,
    scenario: ScenarioConfig,
    tally: ShedTally,
    cfg: SolverConfig,
) -> DispatchSolution:
    """Alternative real-time policy: re-dispatch against the fair objective."""
    pm = build_dispatch_skeleton(net, actual_demand, fixed_z=np.asarray(z), name="realtime_fair")
    shed_w = scenario.beta / actual_demand.total()
    for idx in pm.s_idx.flat:
        pm.model.add_objective(int(idx), shed_w)
    apply_fairness_terms(pm, tally, actual_demand, scenario.method, weight=1.0 - scenario.beta)
    sol = _solved(pm, cfg, None, "real-time fair")
    sol.objective = sol.total_shed
    return sol


def min_shed_bound(
    net: Network,
    demand: DemandProfile,
    risk,
    z_hat: np.ndarray,
    zeta: float,
    cfg: SolverConfig | None = None,
) -> float:
    """Least total shed any switching choice can reach under the risk cap.

    Lower-bounds what every fairness method could achieve that day, so it
    serves as the reference point on tradeoff plots.
    """
    cfg = cfg or SolverConfig()
    pm = build_dispatch_skeleton(net, demand, name="min_shed_bound")
    risk_arr = _risk_array(net, dict(risk))
    cap = (1.0 + zeta) * float(risk_arr @ np.asarray(z_hat, dtype=float))
    pm.model.add_row(
        "risk_cap",
        "risk_cap",
        {int(pm.z_idx[k]): float(risk_arr[k]) for k in range(len(net.lines))},
        ub=cap,
    )
    for idx in pm.s_idx.flat:
        pm.model.add_objective(int(idx), 1.0)
    sol = _solved(pm, cfg, None, "min-shed bound")
    return sol.objective


def _day_stream(inputs: Iterable[DayInputs], days: int) -> Iterator[DayInputs]:
    count = 0
    for di in inputs:
        count += 1
        if di.day != count:
            raise ValueError(f"day inputs out of order: expected day {count}, got {di.day}")
        yield di
        if count == days:
            return
    if count < days:
        raise ValueError(f"scenario wants {days} days but inputs ended after {count}")


def run_baseline(net: Network, scenario: ScenarioConfig, inputs: Iterable[DayInputs]) -> SimulationResult:
    """Roll the no-fairness problem forward; days carry no cross-day state."""
    cfg = scenario.solver
    tally = ShedTally.initial(net.bus_ids(), eta=scenario.eta)
    records: list[DayRecord] = []
    cumulative = np.zeros(len(net.buses))
    for di in _day_stream(iter(inputs), scenario.days):
        ctx = ObjectiveContext.for_day(di.alpha, di.forecast, di.risk)
        base = _solved(build_opt_psps(net, di.forecast, di.risk, ctx), cfg, di.day, "baseline")
        rt = realtime_operate(net, base.z, di.actual, tie_weights=None, cfg=cfg)
        bound = min_shed_bound(net, di.actual, di.risk, base.z, scenario.zeta, cfg)
        risk_arr = _risk_array(net, di.risk)
        records.append(
            DayRecord(
                day=di.day,
                alpha=di.alpha,
                z_hat=base.z,
                z=base.z,
                pred_shed=base.shed,
                actual_shed=rt.shed,
                energized_risk=float(risk_arr @ base.z),
                base_objective=base.objective,
                impl_objective=base.objective,
                base_status=base.status,
                impl_status=base.status,
                min_shed_bound=bound,
                hamming=0,
                forecast_total=di.forecast.total(),
                actual_total=di.actual.total(),
            )
        )
        shed_by_bus = rt.shed_by_bus()
        cumulative += shed_by_bus
        tally = update_tally(tally, shed_by_bus)
    return SimulationResult(net=net, records=records, final_tally=tally, cumulative_shed=cumulative)


def run_fair(net: Network, scenario: ScenarioConfig, inputs: Iterable[DayInputs]) -> SimulationResult:
    """Roll forward with fairness: baseline solve caps risk, fair solve decides."""
    if scenario.method is None:
        raise ValueError("scenario.method must be set for a fair run")
    cfg = scenario.solver
    tally = ShedTally.initial(net.bus_ids(), eta=scenario.eta)
    records: list[DayRecord] = []
    cumulative = np.zeros(len(net.buses))
    for di in _day_stream(iter(inputs), scenario.days):
        ctx = ObjectiveContext.for_day(di.alpha, di.forecast, di.risk)
        base = _solved(build_opt_psps(net, di.forecast, di.risk, ctx), cfg, di.day, "baseline")
        fair_ctx = FairContext(
            beta=scenario.beta,
            zeta=scenario.zeta,
            baseline_z=base.z,
            tally=tally,
            total_demand=ctx.total_demand,
        )
        fair_pm = build_opt_psps_fair(net, di.forecast, di.risk, fair_ctx, scenario.method)
        fair = _solved(fair_pm, cfg, di.day, "fair")
        risk_arr = _risk_array(net, di.risk)
        energized = float(risk_arr @ fair.z)
        cap = float(fair_pm.info["risk_cap_rhs"])
        if energized > cap + RISK_CAP_TOL:
            raise SolverError(f"day {di.day}: risk cap violated ({energized} > {cap})")
        if scenario.realtime_redispatch == "fair":
            rt = _realtime_fair(net, fair.z, di.actual, scenario, tally, cfg)
        else:
            rt = realtime_operate(net, fair.z, di.actual, tie_weights=tally.values, cfg=cfg)
        bound = min_shed_bound(net, di.actual, di.risk, base.z, scenario.zeta, cfg)
        records.append(
            DayRecord(
                day=di.day,
                alpha=di.alpha,
                z_hat=base.z,
                z=fair.z,
                pred_shed=fair.shed,
                actual_shed=rt.shed,
                energized_risk=energized,
                base_objective=base.objective,
                impl_objective=fair.objective,
                base_status=base.status,
                impl_status=fair.status,
                min_shed_bound=bound,
                hamming=int(np.sum(base.z != fair.z)),
                forecast_total=di.forecast.total(),
                actual_total=di.actual.total(),
            )
        )
        shed_by_bus = rt.shed_by_bus()
        cumulative += shed_by_bus
        tally = update_tally(tally, shed_by_bus)
    return SimulationResult(net=net, records=records, final_tally=tally, cumulative_shed=cumulative)


# -- serialization ------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def result_to_dict(result: SimulationResult) -> dict:
    """Full JSON-ready dump of a run, including per-bus-hour shed."""
    net = result.net
    return {
        "buses": [
            {"id": b.id, "name": b.name, "lon": b.lon, "lat": b.lat} for b in net.buses
        ],
        "lines": [{"id": l.id, "from": l.from_bus, "to": l.to_bus} for l in net.lines],
        "days": [
            {
                "day": r.day,
                "alpha": r.alpha,
                "z_base": r.z_hat.tolist(),
                "z": r.z.tolist(),
                "pred_shed": r.pred_shed.tolist(),
                "actual_shed": r.actual_shed.tolist(),
                "energized_risk": r.energized_risk,
                "base_objective": r.base_objective,
                "impl_objective": r.impl_objective,
                "base_status": r.base_status,
                "impl_status": r.impl_status,
                "min_shed_bound": r.min_shed_bound,
                "hamming": r.hamming,
                "forecast_total": r.forecast_total,
                "actual_total": r.actual_total,
            }
            for r in result.records
        ],
        "final_tally": {
            "day": result.final_tally.day,
            "eta": result.final_tally.eta,
            "values": result.final_tally.values.tolist(),
        },
        "cumulative_shed": result.cumulative_shed.tolist(),
    }


def write_outputs(result: SimulationResult, out_dir) -> list[Path]:
    """Write result.json plus the three flat CSVs into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "result.json"
    path.write_text(json.dumps(result_to_dict(result), indent=1))
    written.append(path)

    path = out / "days.csv"
    rows = ["day,alpha,risk_energized,shed_total_pred,shed_total_actual,hamming"]
    for r in result.records:
        rows.append(
            ",".join(
                [
                    str(r.day),
                    _fmt(r.alpha),
                    _fmt(r.energized_risk),
                    _fmt(r.pred_shed.sum()),
                    _fmt(r.actual_shed.sum()),
                    str(r.hamming),
                ]
            )
        )
    path.write_text("\n".join(rows) + "\n")
    written.append(path)

    path = out / "bus_shed.csv"
    rows = ["day,bus,shed_actual"]
    for r in result.records:
        by_bus = r.actual_shed.sum(axis=1)
        for n, b in enumerate(result.net.buses):
            rows.append(f"{r.day},{b.id},{_fmt(by_bus[n])}")
    path.write_text("\n".join(rows) + "\n")
    written.append(path)

    path = out / "switching.csv"
    rows = ["day,line,z_base,z_fair"]
    for r in result.records:
        for k, l in enumerate(result.net.lines):
            rows.append(f"{r.day},{l.id},{int(r.z_hat[k])},{int(r.z[k])}")
    path.write_text("\n".join(rows) + "\n")
    written.append(path)
    return written
