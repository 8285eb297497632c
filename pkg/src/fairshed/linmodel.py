"""Minimal mixed-integer linear model container.

Rows are two-sided ``lb <= a.x <= ub`` with a tag naming the constraint
family; by construction only linear expressions can be stated. The model
converts to scipy-ready matrices and exports to LP text format for
cross-checking with external solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

INF = math.inf


@dataclass
class Var:
    name: str
    lb: float = -INF
    ub: float = INF
    integer: bool = False


@dataclass
class Row:
    tag: str
    name: str
    coeffs: dict[int, float]
    lb: float = -INF
    ub: float = INF


class ModelError(ValueError):
    pass


class LinearModel:
    """Variables, tagged two-sided linear rows, and a linear objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.vars: list[Var] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self.objective_const: float = 0.0

    def add_var(self, name: str, lb: float = -INF, ub: float = INF, integer: bool = False) -> int:
        if not (math.isfinite(lb) or lb == -INF) or not (math.isfinite(ub) or ub == INF):
            raise ModelError(f"variable {name}: bad bounds [{lb}, {ub}]")
        if lb > ub:
            raise ModelError(f"variable {name}: empty bound interval [{lb}, {ub}]")
        self.vars.append(Var(name, lb, ub, integer))
        return len(self.vars) - 1

    def add_row(self, tag: str, name: str, coeffs: dict[int, float], lb: float = -INF, ub: float = INF) -> int:
        n = len(self.vars)
        for j, c in coeffs.items():
            if not 0 <= j < n:
                raise ModelError(f"row {name} references undeclared variable index {j}")
            if not math.isfinite(c):
                raise ModelError(f"row {name}: non-finite coefficient on {self.vars[j].name}")
        self.rows.append(Row(tag, name, dict(coeffs), lb, ub))
        return len(self.rows) - 1

    def add_objective(self, index: int, coeff: float) -> None:
        if not math.isfinite(coeff):
            raise ModelError(f"non-finite objective coefficient on {self.vars[index].name}")
        self.objective[index] = self.objective.get(index, 0.0) + coeff

    # -- introspection -----------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.vars)

    @property
    def num_binary(self) -> int:
        return sum(1 for v in self.vars if v.integer)

    @property
    def num_continuous(self) -> int:
        return self.num_vars - self.num_binary

    def tags(self) -> tuple[str, ...]:
        return tuple(sorted({r.tag for r in self.rows}))

    def rows_with_tag(self, tag: str) -> list[Row]:
        return [r for r in self.rows if r.tag == tag]

    def to_matrices(self):
        """Return (c, const, A, row_lb, row_ub, var_lb, var_ub, integrality)."""
        n = len(self.vars)
        c = np.zeros(n)
        for j, coeff in self.objective.items():
            c[j] = coeff
        var_lb = np.array([v.lb for v in self.vars])
        var_ub = np.array([v.ub for v in self.vars])
        integrality = np.array([1 if v.integer else 0 for v in self.vars])
        m = len(self.rows)
        data, ri, ci = [], [], []
        row_lb = np.full(m, -INF)
        row_ub = np.full(m, INF)
        for i, row in enumerate(self.rows):
            row_lb[i] = row.lb
            row_ub[i] = row.ub
            for j, coeff in row.coeffs.items():
                ri.append(i)
                ci.append(j)
                data.append(coeff)
        a = sparse.csr_matrix((data, (ri, ci)), shape=(m, n))
        return c, self.objective_const, a, row_lb, row_ub, var_lb, var_ub, integrality

    # -- LP text export ----------------------------------------------------

    def to_lp(self) -> str:
        """Render in LP file format; range rows become a _lo/_hi pair."""

        def term(coeff: float, name: str) -> str:
            sign = "-" if coeff < 0 else "+"
            return f"{sign} {abs(coeff):.17g} {name}"

        def expr(coeffs: dict[int, float]) -> str:
            parts = [term(c, self.vars[j].name) for j, c in sorted(coeffs.items()) if c != 0.0]
            if not parts:
                return "0 " + (self.vars[0].name if self.vars else "x")
            joined = " ".join(parts)
            return joined[2:] if joined.startswith("+ ") else joined

        out = [f"\\ {self.name}", "Minimize"]
        obj = expr(self.objective)
        if self.objective_const:
            obj += f" + {self.objective_const:.17g}"
        out.append(f" obj: {obj}")
        out.append("Subject To")
        for row in self.rows:
            body = expr(row.coeffs)
            if row.lb == row.ub:
                out.append(f" {row.name}: {body} = {row.lb:.17g}")
                continue
            if row.ub != INF:
                out.append(f" {row.name}_hi: {body} <= {row.ub:.17g}")
            if row.lb != -INF:
                out.append(f" {row.name}_lo: {body} >= {row.lb:.17g}")
        out.append("Bounds")
        for v in self.vars:
            if v.lb == -INF and v.ub == INF:
                out.append(f" {v.name} free")
            elif v.lb == -INF:
                out.append(f" -inf <= {v.name} <= {v.ub:.17g}")
            else:
                out.append(f" {v.lb:.17g} <= {v.name} <= {v.ub:.17g}")
        binaries = [v.name for v in self.vars if v.integer]
        if binaries:
            out.append("Binaries")
            out.append(" " + " ".join(binaries))
        out.append("End")
        return "\n".join(out) + "\n"
