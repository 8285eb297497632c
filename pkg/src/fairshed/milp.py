"""Daily de-energization MILP: DC dispatch with per-line on/off switching.

Decision variables per day: generator output, bus voltage angles, line
flows, per-bus-hour load shed (all continuous, hourly), and one binary
energization state per line. A de-energized line carries zero flow and its
angle-coupling rows are released through disable constants summed from the
per-line angle-difference limits, so switching any subset of lines off can
never make the problem infeasible (shedding all demand always remains
feasible because generator lower limits are zero).

Generator and shed limits live on the variable bounds; the z-coupled
families are explicit tagged rows (flow_limits, angle, dcflow, balance).
The verifier reports residuals for all six families regardless.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .ingest import DemandProfile
from .linmodel import LinearModel, ModelError
from .network import Network, compute_big_m


@dataclass(frozen=True)
class ObjectiveContext:
    """Normalizers for the daily objective: shed term scales by total
    predicted demand, risk term by total network risk."""

    alpha: float
    total_demand: float
    total_risk: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside [0, 1]")
        if not self.total_demand > 0:
            raise ValueError("total predicted demand must be positive")
        if self.total_risk < 0:
            raise ValueError("total risk must be non-negative")

    @classmethod
    def for_day(cls, alpha: float, demand: DemandProfile, risk: Mapping[int, float]) -> "ObjectiveContext":
        return cls(alpha, demand.total(), float(sum(risk.values())))


@dataclass(eq=False)
class PspsModel:
    """A built model plus the index arrays needed to read solutions back."""

    model: LinearModel
    net: Network
    demand: DemandProfile
    risk: np.ndarray | None  # aligned with net.lines; None when risk is not in play
    g_idx: np.ndarray  # (n_gen, T)
    theta_idx: np.ndarray  # (n_bus, T)
    f_idx: np.ndarray  # (n_line, T)
    s_idx: np.ndarray  # (n_bus, T)
    z_idx: np.ndarray | None  # (n_line,) or None when z is fixed
    fixed_z: np.ndarray | None = None
    aux: dict[str, int] = field(default_factory=dict)
    info: dict[str, object] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.demand.horizon


def _risk_array(net: Network, risk: Mapping[int, float]) -> np.ndarray:
    missing = [l.id for l in net.lines if l.id not in risk]
    if missing:
        raise ModelError(f"missing risk for lines {missing}")
    return np.array([float(risk[l.id]) for l in net.lines])


def build_dispatch_skeleton(
    net: Network,
    demand: DemandProfile,
    fixed_z: np.ndarray | None = None,
    name: str = "psps",
) -> PspsModel:
    """Variables and physical rows shared by every daily problem.

    With ``fixed_z`` the binaries are replaced by the given 0/1 constants and
    the coupled rows are folded accordingly, leaving a pure LP (used for
    real-time operation once switching is decided).
    """
    if tuple(demand.buses) != net.bus_ids():
        raise ModelError("demand profile is not aligned with the network bus order")
    t_count = demand.horizon
    n_bus, n_gen, n_line = len(net.buses), len(net.generators), len(net.lines)
    bus_pos = net.bus_positions()
    m_lo, m_hi = compute_big_m(net)

    model = LinearModel(name)
    g_idx = np.empty((n_gen, t_count), dtype=int)
    theta_idx = np.empty((n_bus, t_count), dtype=int)
    f_idx = np.empty((n_line, t_count), dtype=int)
    s_idx = np.empty((n_bus, t_count), dtype=int)

    for k, g in enumerate(net.generators):
        for t in range(t_count):
            g_idx[k, t] = model.add_var(f"g_{g.id}_{t}", lb=g.g_min, ub=g.g_max)
    for k, b in enumerate(net.buses):
        for t in range(t_count):
            theta_idx[k, t] = model.add_var(f"th_{b.id}_{t}")
    for k, l in enumerate(net.lines):
        for t in range(t_count):
            f_idx[k, t] = model.add_var(f"f_{l.id}_{t}", lb=-l.f_max, ub=l.f_max)
    for k, b in enumerate(net.buses):
        for t in range(t_count):
            s_idx[k, t] = model.add_var(f"s_{b.id}_{t}", lb=0.0, ub=float(demand.values[k, t]))

    z_idx = None
    if fixed_z is None:
        z_idx = np.array([model.add_var(f"z_{l.id}", lb=0.0, ub=1.0, integer=True) for l in net.lines])
    else:
        fixed_z = np.asarray(fixed_z)
        if fixed_z.shape != (n_line,):
            raise ModelError(f"fixed z has shape {fixed_z.shape}, expected ({n_line},)")

    for k, l in enumerate(net.lines):
        fr = bus_pos[l.from_bus]
        to = bus_pos[l.to_bus]
        b_l = l.b
        for t in range(t_count):
            fi, th_fr, th_to = int(f_idx[k, t]), int(theta_idx[fr, t]), int(theta_idx[to, t])
            if z_idx is not None:
                zi = int(z_idx[k])
                # |f| <= f_max * z
                model.add_row("flow_limits", f"flow_{l.id}_{t}", {fi: 1.0, zi: -l.f_max}, ub=0.0)
                model.add_row("flow_limits", f"flown_{l.id}_{t}", {fi: -1.0, zi: -l.f_max}, ub=0.0)
                # delta_lo*z + m_lo*(1-z) <= th_fr - th_to <= delta_hi*z + m_hi*(1-z)
                model.add_row(
                    "angle",
                    f"anghi_{l.id}_{t}",
                    {th_fr: 1.0, th_to: -1.0, zi: m_hi - l.delta_max},
                    ub=m_hi,
                )
                model.add_row(
                    "angle",
                    f"anglo_{l.id}_{t}",
                    {th_fr: 1.0, th_to: -1.0, zi: m_lo - l.delta_min},
                    lb=m_lo,
                )
                # -b(th_fr-th_to) + |b| m_lo (1-z) <= f <= -b(th_fr-th_to) + |b| m_hi (1-z)
                ab = abs(b_l)
                model.add_row(
                    "dcflow",
                    f"dchi_{l.id}_{t}",
                    {fi: 1.0, th_fr: b_l, th_to: -b_l, zi: ab * m_hi},
                    ub=ab * m_hi,
                )
                model.add_row(
                    "dcflow",
                    f"dclo_{l.id}_{t}",
                    {fi: 1.0, th_fr: b_l, th_to: -b_l, zi: ab * m_lo},
                    lb=ab * m_lo,
                )
            elif fixed_z[k] >= 0.5:
                model.add_row(
                    "angle",
                    f"ang_{l.id}_{t}",
                    {th_fr: 1.0, th_to: -1.0},
                    lb=l.delta_min,
                    ub=l.delta_max,
                )
                # energized line: f = -b (th_fr - th_to) exactly
                model.add_row(
                    "dcflow",
                    f"dc_{l.id}_{t}",
                    {fi: 1.0, th_fr: b_l, th_to: -b_l},
                    lb=0.0,
                    ub=0.0,
                )
            else:
                model.add_row("flow_limits", f"flow_{l.id}_{t}", {fi: 1.0}, lb=0.0, ub=0.0)
                model.add_row(
                    "angle", f"ang_{l.id}_{t}", {th_fr: 1.0, th_to: -1.0}, lb=m_lo, ub=m_hi
                )
                ab = abs(b_l)
                model.add_row(
                    "dcflow",
                    f"dc_{l.id}_{t}",
                    {fi: 1.0, th_fr: b_l, th_to: -b_l},
                    lb=ab * m_lo,
                    ub=ab * m_hi,
                )

    lines_fr: list[list[int]] = [[] for _ in range(n_bus)]
    lines_to: list[list[int]] = [[] for _ in range(n_bus)]
    for k, l in enumerate(net.lines):
        lines_fr[bus_pos[l.from_bus]].append(k)
        lines_to[bus_pos[l.to_bus]].append(k)
    gens_at: list[list[int]] = [[] for _ in range(n_bus)]
    for k, g in enumerate(net.generators):
        gens_at[bus_pos[g.bus]].append(k)

    for n, bus in enumerate(net.buses):
        for t in range(t_count):
            # sum(f out) - sum(f in) - s - sum(g) = -d
            coeffs: dict[int, float] = {}
            for k in lines_fr[n]:
                coeffs[int(f_idx[k, t])] = coeffs.get(int(f_idx[k, t]), 0.0) + 1.0
            for k in lines_to[n]:
                coeffs[int(f_idx[k, t])] = coeffs.get(int(f_idx[k, t]), 0.0) - 1.0
            coeffs[int(s_idx[n, t])] = -1.0
            for k in gens_at[n]:
                coeffs[int(g_idx[k, t])] = -1.0
            d = float(demand.values[n, t])
            model.add_row("balance", f"bal_{bus.id}_{t}", coeffs, lb=-d, ub=-d)

    return PspsModel(
        model=model,
        net=net,
        demand=demand,
        risk=None,
        g_idx=g_idx,
        theta_idx=theta_idx,
        f_idx=f_idx,
        s_idx=s_idx,
        z_idx=z_idx,
        fixed_z=None if fixed_z is None else np.asarray(fixed_z, dtype=int),
    )


def build_opt_psps(
    net: Network,
    demand: DemandProfile,
    risk: Mapping[int, float],
    ctx: ObjectiveContext,
) -> PspsModel:
    """The daily switching problem: weighted load shed plus retained risk.

    Objective is ``(alpha/D) * sum(s) + ((1-alpha)/R) * sum(r*z)``; when the
    network carries no risk at all (R == 0) the risk term is dropped.
    """
    if demand.horizon < 1:
        raise ModelError("demand horizon must be at least 1")
    pm = build_dispatch_skeleton(net, demand, name="opt_psps")
    pm.risk = _risk_array(net, risk)
    shed_w = ctx.alpha / ctx.total_demand
    for idx in pm.s_idx.flat:
        pm.model.add_objective(int(idx), shed_w)
    if ctx.total_risk > 0:
        risk_w = (1.0 - ctx.alpha) / ctx.total_risk
        for k in range(len(net.lines)):
            coeff = risk_w * pm.risk[k]
            if coeff:
                pm.model.add_objective(int(pm.z_idx[k]), coeff)
    pm.info["ctx"] = ctx
    return pm


def evaluate_objective(s, z, ctx: ObjectiveContext, risk) -> float:
    """Recompute the daily objective from raw shed and switching values.

    ``risk`` is indexed like ``z``; with zero total risk the risk term is 0
    by convention.
    """
    s_total = float(np.asarray(s).sum())
    value = ctx.alpha / ctx.total_demand * s_total
    if ctx.total_risk > 0:
        z_arr = np.asarray(z, dtype=float)
        r_arr = np.asarray(risk, dtype=float)
        if z_arr.shape != r_arr.shape:
            raise ValueError(f"risk shape {r_arr.shape} != z shape {z_arr.shape}")
        value += (1.0 - ctx.alpha) / ctx.total_risk * float(r_arr @ z_arr)
    return value


@dataclass(frozen=True)
class ResidualReport:
    """Max constraint violation per family, plus the worst offender's name."""

    residuals: dict[str, float]
    worst: dict[str, str]
    tol: float

    @property
    def ok(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    def max_residual(self) -> float:
        return max(self.residuals.values())

    def __str__(self) -> str:
        lines = [f"residuals (tol {self.tol:g}):"]
        for fam in sorted(self.residuals):
            flag = "ok" if self.residuals[fam] <= self.tol else "VIOLATED"
            lines.append(f"  {fam:12s} {self.residuals[fam]:.3e}  {flag}  {self.worst.get(fam, '')}")
        return "\n".join(lines)


def verify_solution(net: Network, demand: DemandProfile, sol, tol: float = 1e-6) -> ResidualReport:
    """Independently recheck a solution against the physical constraints.

    ``sol`` needs arrays gen (n_gen, T), theta (n_bus, T), flow (n_line, T),
    shed (n_bus, T) and z (n_line,). Families reported: gen_limits,
    shed_limits, flow_limits, angle, dcflow, balance, binary.
    """
    t_count = demand.horizon
    bus_pos = net.bus_positions()
    m_lo, m_hi = compute_big_m(net)
    res = {k: 0.0 for k in ("gen_limits", "shed_limits", "flow_limits", "angle", "dcflow", "balance", "binary")}
    worst: dict[str, str] = {}

    def push(fam: str, value: float, label: str):
        if value > res[fam]:
            res[fam] = float(value)
            worst[fam] = label

    gen = np.asarray(sol.gen, dtype=float)
    theta = np.asarray(sol.theta, dtype=float)
    flow = np.asarray(sol.flow, dtype=float)
    shed = np.asarray(sol.shed, dtype=float)
    z = np.asarray(sol.z, dtype=float)

    for k, g in enumerate(net.generators):
        for t in range(t_count):
            push("gen_limits", g.g_min - gen[k, t], f"g{g.id}@t{t}")
            push("gen_limits", gen[k, t] - g.g_max, f"g{g.id}@t{t}")
    for n, b in enumerate(net.buses):
        for t in range(t_count):
            push("shed_limits", -shed[n, t], f"bus{b.id}@t{t}")
            push("shed_limits", shed[n, t] - demand.values[n, t], f"bus{b.id}@t{t}")
    for k, l in enumerate(net.lines):
        zk = z[k]
        push("binary", abs(zk - round(zk)), f"line{l.id}")
        fr, to = bus_pos[l.from_bus], bus_pos[l.to_bus]
        ab = abs(l.b)
        for t in range(t_count):
            dtheta = theta[fr, t] - theta[to, t]
            push("flow_limits", abs(flow[k, t]) - l.f_max * zk, f"line{l.id}@t{t}")
            push("angle", (l.delta_min * zk + m_lo * (1 - zk)) - dtheta, f"line{l.id}@t{t}")
            push("angle", dtheta - (l.delta_max * zk + m_hi * (1 - zk)), f"line{l.id}@t{t}")
            implied = -l.b * dtheta
            push("dcflow", (implied + ab * m_lo * (1 - zk)) - flow[k, t], f"line{l.id}@t{t}")
            push("dcflow", flow[k, t] - (implied + ab * m_hi * (1 - zk)), f"line{l.id}@t{t}")

    inc_fr: dict[int, list[int]] = {b.id: [] for b in net.buses}
    inc_to: dict[int, list[int]] = {b.id: [] for b in net.buses}
    for k, l in enumerate(net.lines):
        inc_fr[l.from_bus].append(k)
        inc_to[l.to_bus].append(k)
    gens_at: dict[int, list[int]] = {b.id: [] for b in net.buses}
    for k, g in enumerate(net.generators):
        gens_at[g.bus].append(k)
    for n, b in enumerate(net.buses):
        for t in range(t_count):
            lhs = sum(flow[k, t] for k in inc_fr[b.id]) - sum(flow[k, t] for k in inc_to[b.id])
            rhs = shed[n, t] - demand.values[n, t] + sum(gen[k, t] for k in gens_at[b.id])
            push("balance", abs(lhs - rhs), f"bus{b.id}@t{t}")

    return ResidualReport(residuals=res, worst=worst, tol=tol)
