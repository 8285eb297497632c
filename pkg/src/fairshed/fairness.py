"""Fairness-aware variant of the daily switching problem.

Past burden is tracked per bus as a geometrically discounted tally of
realized shed: at decision time for day j the tally holds
``sum_{m<j} eta^(j-m) * shed(m)`` -- completed days only, so today's
candidate shed enters the day's constraints undiscounted.

Three ways to score today's outcome, each normalized into [0, 1] with 0 the
most fair and each linear in the optimization variables:

* ``minmax``   -- the worst-off bus's tally-plus-today shed, via an upper
  envelope variable S_max,
* ``weighted`` -- today's shed weighted per bus by the tally,
* ``range``    -- spread between worst-off and best-off bus, via S_max and a
  lower envelope variable S_min.

The fair model keeps all physical rows, caps retained wildfire risk at a
small fraction above the no-fairness solution's, and minimizes
``(beta/D) * sum(s) + (1-beta) * F``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .ingest import DemandProfile
from .milp import PspsModel, _risk_array, build_dispatch_skeleton
from .network import Network

TALLY_NEGATIVE_TOL = 1e-9


class FairnessMethod(str, enum.Enum):
    MINMAX = "minmax"
    WEIGHTED = "weighted"
    RANGE = "range"


@dataclass(frozen=True, eq=False)
class ShedTally:
    """Per-bus discounted cumulative realized shed, carried across days."""

    day: int
    buses: tuple[int, ...]
    values: np.ndarray
    eta: float

    def __post_init__(self):
        if self.day < 1:
            raise ValueError("tally day starts at 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"forgetting factor {self.eta} outside [0, 1]")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.buses),):
            raise ValueError("tally shape does not match bus count")
        if vals.size and vals.min() < 0:
            raise ValueError("tally must be non-negative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "buses", tuple(self.buses))

    @classmethod
    def initial(cls, buses, eta: float = 0.9) -> "ShedTally":
        buses = tuple(buses)
        return cls(day=1, buses=buses, values=np.zeros(len(buses)), eta=eta)


def update_tally(tally: ShedTally, actual_shed_day: np.ndarray) -> ShedTally:
    """Fold one completed day's realized per-bus shed into the tally.

    The whole accumulated burden, today's included, is discounted once:
    ``S_next = eta * (S + shed_today)``. With zero shed this is pure decay.
    """
    shed = np.asarray(actual_shed_day, dtype=float)
    if shed.shape != tally.values.shape:
        raise ValueError(f"shed shape {shed.shape} != tally shape {tally.values.shape}")
    if shed.min(initial=0.0) < -TALLY_NEGATIVE_TOL:
        raise ValueError(f"negative shed input: {shed.min()}")
    shed = np.clip(shed, 0.0, None)
    return ShedTally(
        day=tally.day + 1,
        buses=tally.buses,
        values=tally.eta * (tally.values + shed),
        eta=tally.eta,
    )


@dataclass(frozen=True)
class FairContext:
    """Inputs the fair solve needs beyond the base problem."""

    beta: float
    zeta: float
    baseline_z: np.ndarray
    tally: ShedTally
    total_demand: float

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta {self.beta} outside [0, 1]")
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")
        z = np.asarray(self.baseline_z)
        if z.size and not np.isin(z, (0, 1)).all():
            raise ValueError("baseline decisions must be 0/1")
        if not self.total_demand > 0:
            raise ValueError("total demand must be positive")


# -- the three fairness scores -----------------------------------------------


@dataclass(frozen=True)
class MinMaxFairness:
    """F = (S_max - offset) / denom, with S_max >= tally + today's shed per bus."""

    tally: np.ndarray
    offset: float  # largest per-bus tally
    denom: float  # worst reachable S_max minus offset

    def value(self, shed_by_bus: np.ndarray) -> float:
        s_max = float((self.tally + np.asarray(shed_by_bus)).max())
        return (s_max - self.offset) / self.denom


@dataclass(frozen=True)
class WeightedFairness:
    """F = sum_n tally_n * shed_n / sum_n tally_n * demand_n; 0 on day one."""

    tally: np.ndarray
    denom: float
    active: bool

    def value(self, shed_by_bus: np.ndarray) -> float:
        if not self.active:
            return 0.0
        return float(self.tally @ np.asarray(shed_by_bus)) / self.denom

    def shed_coefficient(self, bus_pos: int) -> float:
        return float(self.tally[bus_pos]) / self.denom if self.active else 0.0


@dataclass(frozen=True)
class RangeFairness:
    """F = ((S_max - S_min) - w_min) / (w_max - w_min); 0 when degenerate."""

    tally: np.ndarray
    w_max: float
    w_min: float
    active: bool

    @property
    def denom(self) -> float:
        return self.w_max - self.w_min

    def value(self, shed_by_bus: np.ndarray) -> float:
        if not self.active:
            return 0.0
        burden = self.tally + np.asarray(shed_by_bus)
        spread = float(burden.max() - burden.min())
        return (spread - self.w_min) / self.denom


def minmax_bounds_and_F(tally: ShedTally, demand: DemandProfile) -> MinMaxFairness:
    """Scaling for the worst-off-bus score; raises if no bus can ever shed."""
    if tuple(demand.buses) != tally.buses:
        raise ValueError("tally and demand bus orders differ")
    offset = float(tally.values.max(initial=0.0))
    reach = tally.values + demand.bus_totals()
    denom = float(reach.max()) - offset
    if not denom > 0:
        raise ValueError(
            "degenerate minmax scaling: no positive demand at any bus that can move the maximum"
        )
    return MinMaxFairness(tally=tally.values, offset=offset, denom=denom)


def weighted_F(tally: ShedTally, demand: DemandProfile) -> WeightedFairness:
    """Tally-weighted shed score; identically 0 on day one or with a clean slate."""
    if tuple(demand.buses) != tally.buses:
        raise ValueError("tally and demand bus orders differ")
    denom = float(tally.values @ demand.bus_totals())
    active = tally.day > 1 and tally.values.max(initial=0.0) > 0 and denom > 0
    return WeightedFairness(tally=tally.values, denom=denom if active else 1.0, active=active)


def range_bounds_and_F(tally: ShedTally, demand: DemandProfile) -> RangeFairness:
    """Spread score bounds; buses counted for the minima must have demand every hour."""
    if tuple(demand.buses) != tally.buses:
        raise ValueError("tally and demand bus orders differ")
    always_demand = demand.positive_all_hours()
    if not always_demand.any():
        raise ValueError("no bus has demand at every hour; range fairness undefined")
    reach = tally.values + demand.bus_totals()
    w_max = float(reach.max()) - float(tally.values[always_demand].min())
    w_min = max(0.0, float(tally.values.max(initial=0.0)) - float(reach[always_demand].min()))
    active = w_max - w_min > 0
    return RangeFairness(tally=tally.values, w_max=w_max, w_min=w_min, active=active)


def fairness_value(method: FairnessMethod, tally: ShedTally, demand: DemandProfile, shed_by_bus) -> float:
    """Score a realized per-bus shed vector under a method (0 most fair)."""
    method = FairnessMethod(method)
    if method is FairnessMethod.MINMAX:
        return minmax_bounds_and_F(tally, demand).value(shed_by_bus)
    if method is FairnessMethod.WEIGHTED:
        return weighted_F(tally, demand).value(shed_by_bus)
    return range_bounds_and_F(tally, demand).value(shed_by_bus)


# -- model builder ------------------------------------------------------------


def build_opt_psps_fair(
    net: Network,
    demand: DemandProfile,
    risk: Mapping[int, float],
    ctx: FairContext,
    method: FairnessMethod,
) -> PspsModel:
    """Fair daily problem: physical rows + risk cap + method rows/objective.

    The cap keeps retained risk within ``(1+zeta)`` times the no-fairness
    solution's; all fairness terms are linear so the model stays a MILP.
    """
    method = FairnessMethod(method)
    z_hat = np.asarray(ctx.baseline_z, dtype=float)
    if z_hat.shape != (len(net.lines),):
        raise ValueError(f"baseline decisions shape {z_hat.shape} != ({len(net.lines)},)")
    pm = build_dispatch_skeleton(net, demand, name="opt_psps_fair")
    pm.risk = _risk_array(net, risk)

    cap_rhs = (1.0 + ctx.zeta) * float(pm.risk @ z_hat)
    pm.model.add_row(
        "risk_cap",
        "risk_cap",
        {int(pm.z_idx[k]): float(pm.risk[k]) for k in range(len(net.lines))},
        ub=cap_rhs,
    )

    shed_w = ctx.beta / ctx.total_demand
    for idx in pm.s_idx.flat:
        pm.model.add_objective(int(idx), shed_w)
    scaling = apply_fairness_terms(pm, ctx.tally, demand, method, weight=1.0 - ctx.beta)

    pm.info["method"] = method
    pm.info["fairness"] = scaling
    pm.info["risk_cap_rhs"] = cap_rhs
    pm.info["fair_ctx"] = ctx
    return pm


def apply_fairness_terms(
    pm: PspsModel,
    tally: ShedTally,
    demand: DemandProfile,
    method: FairnessMethod,
    weight: float,
):
    """Add a method's envelope variables, rows, and weighted objective terms.

    Works on any built daily problem (switching or fixed-z); returns the
    scaling scaling so callers can evaluate the score afterwards. Aux structure
    is added even at weight 0 so the model shape does not depend on beta.
    """
    method = FairnessMethod(method)
    net = pm.net
    n_bus = len(net.buses)
    if method is FairnessMethod.MINMAX:
        scaling = minmax_bounds_and_F(tally, demand)
        s_max = pm.model.add_var("s_max", lb=0.0)
        pm.aux["s_max"] = s_max
        for n in range(n_bus):
            coeffs = {s_max: 1.0}
            for t in range(pm.horizon):
                coeffs[int(pm.s_idx[n, t])] = -1.0
            pm.model.add_row("minmax", f"minmax_{net.buses[n].id}", coeffs, lb=float(tally.values[n]))
        if weight > 0:
            pm.model.add_objective(s_max, weight / scaling.denom)
            pm.model.objective_const += -weight * scaling.offset / scaling.denom
    elif method is FairnessMethod.WEIGHTED:
        scaling = weighted_F(tally, demand)
        if weight > 0 and scaling.active:
            for n in range(n_bus):
                coeff = weight * scaling.shed_coefficient(n)
                if coeff:
                    for t in range(pm.horizon):
                        pm.model.add_objective(int(pm.s_idx[n, t]), coeff)
    else:
        scaling = range_bounds_and_F(tally, demand)
        s_max = pm.model.add_var("s_max", lb=0.0)
        s_min = pm.model.add_var("s_min")
        pm.aux["s_max"] = s_max
        pm.aux["s_min"] = s_min
        for n in range(n_bus):
            hi = {s_max: 1.0}
            lo = {s_min: 1.0}
            for t in range(pm.horizon):
                hi[int(pm.s_idx[n, t])] = -1.0
                lo[int(pm.s_idx[n, t])] = -1.0
            tally_n = float(tally.values[n])
            pm.model.add_row("minmax", f"minmax_{net.buses[n].id}", hi, lb=tally_n)
            pm.model.add_row("range", f"range_{net.buses[n].id}", lo, ub=tally_n)
        if weight > 0 and scaling.active:
            pm.model.add_objective(s_max, weight / scaling.denom)
            pm.model.add_objective(s_min, -weight / scaling.denom)
            pm.model.objective_const += -weight * scaling.w_min / scaling.denom
    return scaling
