"""Solver backends behind one contract.

``highs`` hands the model to scipy's HiGHS-based MILP interface; ``bnb`` is
a self-contained best-first branch-and-bound over dual-simplex LP
relaxations. Both stop at the configured relative gap, both are
deterministic run-to-run (single threaded, no randomized choices), and both
report the incumbent objective together with the proven bound.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .linmodel import INF, LinearModel
from .milp import PspsModel

STATUS_OPTIMAL = "optimal-within-gap"
STATUS_TIME_LIMIT = "time-limit"
STATUS_INFEASIBLE = "infeasible"

_FRACTIONAL_TOL = 1e-7
_BOUND_SLACK = 1e-9


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Gap, limits and backend selection; defaults solve to a 1% gap."""

    relative_mip_gap: float = 0.01
    time_limit: float = 300.0
    seed: int = 0  # kept for the contract; both backends are deterministic
    backend: str = "highs"

    def __post_init__(self):
        if not 0.0 < self.relative_mip_gap < 1.0:
            raise ValueError(f"relative_mip_gap {self.relative_mip_gap} outside (0, 1)")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.backend not in ("highs", "bnb"):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass(eq=False)
class DispatchSolution:
    """Variable values of one solved daily problem plus solver metadata."""

    gen: np.ndarray  # (n_gen, T)
    theta: np.ndarray  # (n_bus, T)
    flow: np.ndarray  # (n_line, T)
    shed: np.ndarray  # (n_bus, T)
    z: np.ndarray  # (n_line,) ints
    z_raw: np.ndarray  # solver's raw values before rounding
    objective: float
    bound: float
    status: str
    aux: dict[str, float] = field(default_factory=dict)
    has_values: bool = True

    @property
    def total_shed(self) -> float:
        return float(self.shed.sum())

    def shed_by_bus(self) -> np.ndarray:
        return self.shed.sum(axis=1)


def solve_model(model: LinearModel, cfg: SolverConfig = SolverConfig()):
    """Minimize a LinearModel; returns (x, objective, bound, status).

    ``x`` is None when no incumbent exists (infeasible, or timed out before
    finding one). Objective and bound include the model's constant term.
    """
    if model.num_vars == 0:
        return np.zeros(0), model.objective_const, model.objective_const, STATUS_OPTIMAL
    if cfg.backend == "highs":
        return _solve_highs(model, cfg)
    return _solve_bnb(model, cfg)


def _solve_highs(model: LinearModel, cfg: SolverConfig):
    c, const, a, rlb, rub, vlb, vub, integrality = model.to_matrices()
    kwargs = {}
    if len(model.rows):
        kwargs["constraints"] = LinearConstraint(a, rlb, rub)
    res = milp(
        c=c,
        integrality=integrality,
        bounds=Bounds(vlb, vub),
        options={
            "presolve": True,
            "time_limit": cfg.time_limit,
            "mip_rel_gap": cfg.relative_mip_gap,
        },
        **kwargs,
    )
    if res.status == 0:
        status = STATUS_OPTIMAL
    elif res.status == 1:
        status = STATUS_TIME_LIMIT
    elif res.status == 2:
        status = STATUS_INFEASIBLE
    else:
        raise SolverError(f"highs backend failed: {res.message}")
    if res.x is None:
        return None, math.nan, _maybe(res, "mip_dual_bound", math.nan, const), status
    objective = float(res.fun) + const
    bound = _maybe(res, "mip_dual_bound", objective, const)
    if bound > objective + 1e-6 * max(1.0, abs(objective)):
        raise SolverError(f"bound {bound} above incumbent {objective}")
    return np.asarray(res.x), objective, bound, status


def _maybe(res, attr: str, fallback: float, const: float) -> float:
    value = getattr(res, attr, None)
    if value is None or not math.isfinite(value):
        return fallback
    return float(value) + const


def _solve_bnb(model: LinearModel, cfg: SolverConfig):
    """Best-first branch and bound on the LP relaxation (dual simplex)."""
    c, const, a, rlb, rub, vlb, vub, integrality = model.to_matrices()
    dense = a.toarray() if len(model.rows) else np.zeros((0, len(c)))
    eq = np.isfinite(rlb) & np.isfinite(rub) & (rlb == rub)
    a_eq = dense[eq] if eq.any() else None
    b_eq = rlb[eq] if eq.any() else None
    ub_rows = []
    ub_rhs = []
    for i in range(dense.shape[0]):
        if eq[i]:
            continue
        if np.isfinite(rub[i]):
            ub_rows.append(dense[i])
            ub_rhs.append(rub[i])
        if np.isfinite(rlb[i]):
            ub_rows.append(-dense[i])
            ub_rhs.append(-rlb[i])
    a_ub = np.array(ub_rows) if ub_rows else None
    b_ub = np.array(ub_rhs) if ub_rows else None
    int_vars = np.flatnonzero(integrality)

    def relax(lo: np.ndarray, hi: np.ndarray):
        res = linprog(
            c,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=a_eq,
            b_eq=b_eq,
            bounds=np.column_stack([lo, hi]),
            method="highs-ds",
        )
        return res

    deadline = time.monotonic() + cfg.time_limit
    counter = 0
    # best-first: the popped node's relaxation bound is the global lower bound
    heap = [(-INF, counter, vlb.copy(), vub.copy())]
    incumbent = None
    inc_obj = INF
    bound = -INF
    timed_out = False

    while True:
        if not heap:
            bound = inc_obj  # tree exhausted: incumbent is proven optimal
            break
        node_bound, _, lo, hi = heapq.heappop(heap)
        if incumbent is not None and _gap_closed(inc_obj, node_bound, cfg.relative_mip_gap):
            bound = min(node_bound, inc_obj)
            break
        if time.monotonic() > deadline:
            bound = node_bound
            timed_out = True
            break
        res = relax(lo, hi)
        if res.status == 2:
            continue
        if res.status != 0:
            raise SolverError(f"bnb relaxation failed: {res.message}")
        obj = float(res.fun)
        if obj >= inc_obj - _BOUND_SLACK:
            continue
        x = np.asarray(res.x)
        frac = np.abs(x[int_vars] - np.round(x[int_vars])) if len(int_vars) else np.zeros(0)
        if not len(int_vars) or frac.max() <= _FRACTIONAL_TOL:
            incumbent, inc_obj = x, obj
            continue
        j = int(int_vars[int(np.argmax(frac))])
        floor = math.floor(x[j])
        for new_lo, new_hi in ((lo[j], floor), (floor + 1.0, hi[j])):
            if new_lo > new_hi:
                continue
            lo2, hi2 = lo.copy(), hi.copy()
            lo2[j], hi2[j] = new_lo, new_hi
            counter += 1
            heapq.heappush(heap, (obj, counter, lo2, hi2))

    if incumbent is None:
        if timed_out:
            return None, math.nan, bound + const, STATUS_TIME_LIMIT
        return None, math.nan, math.nan, STATUS_INFEASIBLE
    bound = min(bound, inc_obj)
    closed = _gap_closed(inc_obj, bound, cfg.relative_mip_gap)
    status = STATUS_TIME_LIMIT if timed_out and not closed else STATUS_OPTIMAL
    return incumbent, inc_obj + const, bound + const, status


def _gap_closed(inc: float, bound: float, gap: float) -> bool:
    if not math.isfinite(bound):
        return False
    return inc - bound <= gap * max(abs(inc), 1e-9) + _BOUND_SLACK


def solve(pm: PspsModel, cfg: SolverConfig = SolverConfig()) -> DispatchSolution:
    """Solve a built daily problem and read the solution back into arrays."""
    x, objective, bound, status = solve_model(pm.model, cfg)
    n_line = len(pm.net.lines)
    t_count = pm.horizon
    if x is None:
        empty = np.zeros((0, t_count))
        z = np.zeros(n_line, dtype=int) if pm.fixed_z is None else pm.fixed_z
        return DispatchSolution(
            gen=empty, theta=empty, flow=empty, shed=empty,
            z=z, z_raw=z.astype(float), objective=objective, bound=bound, status=status,
            has_values=False,
        )
    if pm.z_idx is not None:
        z_raw = x[pm.z_idx]
        z = np.rint(z_raw).astype(int)
    else:
        z = np.asarray(pm.fixed_z, dtype=int)
        z_raw = z.astype(float)
    aux = {name: float(x[idx]) for name, idx in pm.aux.items()}
    return DispatchSolution(
        gen=x[pm.g_idx],
        theta=x[pm.theta_idx],
        flow=x[pm.f_idx],
        shed=x[pm.s_idx],
        z=z,
        z_raw=z_raw,
        objective=objective,
        bound=bound,
        status=status,
        aux=aux,
    )
