import numpy as np
import pytest

from fairshed import (
    ObjectiveContext,
    SolverConfig,
    build_opt_psps,
    solve,
    solve_model,
    verify_solution,
)
from fairshed.linmodel import LinearModel
from fairshed.milp import build_dispatch_skeleton
from fairshed.solver import STATUS_INFEASIBLE, STATUS_OPTIMAL, STATUS_TIME_LIMIT
from oracles import brute_force_day_optimum, random_instance

TIGHT = SolverConfig(relative_mip_gap=1e-8)


def _ctx(demand, risk, alpha):
    return ObjectiveContext(alpha, demand.total(), float(sum(risk.values())))


class TestTriangleSolves:
    def test_risk_free_full_service(self, triangle_net, triangle_demand):
        risk = {1: 0.0, 2: 0.0, 3: 0.0}
        sol = solve(build_opt_psps(triangle_net, triangle_demand, risk, _ctx(triangle_demand, risk, 1.0)))
        assert sol.status == STATUS_OPTIMAL
        assert sol.objective == pytest.approx(0.0, abs=1e-9)
        assert sol.total_shed == pytest.approx(0.0, abs=1e-9)
        assert verify_solution(triangle_net, triangle_demand, sol).ok

    def test_documented_flows_with_everything_on(self, triangle_net, triangle_demand):
        pm = build_dispatch_skeleton(triangle_net, triangle_demand, fixed_z=np.ones(3))
        for idx in pm.s_idx.flat:
            pm.model.add_objective(int(idx), 1.0)
        sol = solve(pm, TIGHT)
        assert sol.total_shed == pytest.approx(0.0, abs=1e-8)
        assert sol.flow[:, 0] == pytest.approx([5 / 6, 2 / 3, -1 / 6], abs=1e-6)

    def test_alpha_zero_switches_everything_off(self, triangle_net, triangle_demand):
        risk = {1: 3.0, 2: 1.0, 3: 2.0}
        sol = solve(build_opt_psps(triangle_net, triangle_demand, risk, _ctx(triangle_demand, risk, 0.0)), TIGHT)
        assert sol.objective == pytest.approx(0.0, abs=1e-9)
        assert sol.z.tolist() == [0, 0, 0]


class TestSolveModelContract:
    def test_empty_model(self):
        x, obj, bound, status = solve_model(LinearModel("empty"))
        assert status == STATUS_OPTIMAL and obj == 0.0 and bound == 0.0 and x.size == 0

    @pytest.mark.parametrize("backend", ["highs", "bnb"])
    def test_infeasible(self, backend):
        m = LinearModel("inf")
        x = m.add_var("x", lb=0.0)
        y = m.add_var("y", lb=0.0, integer=True)
        m.add_row("t", "impossible", {x: 1.0, y: 1.0}, ub=-1.0)
        res_x, obj, bound, status = solve_model(m, SolverConfig(backend=backend))
        assert status == STATUS_INFEASIBLE and res_x is None

    @pytest.mark.parametrize("backend", ["highs", "bnb"])
    def test_objective_constant_included(self, backend):
        m = LinearModel("const")
        x = m.add_var("x", lb=0.0, ub=1.0)
        m.add_objective(x, 1.0)
        m.objective_const = 2.5
        _, obj, bound, status = solve_model(m, SolverConfig(backend=backend))
        assert obj == pytest.approx(2.5)
        assert bound == pytest.approx(2.5)

    def test_bnb_time_limit_without_incumbent(self, triangle_net, triangle_demand):
        risk = {1: 3.0, 2: 1.0, 3: 2.0}
        pm = build_opt_psps(triangle_net, triangle_demand, risk, _ctx(triangle_demand, risk, 0.5))
        x, obj, bound, status = solve_model(pm.model, SolverConfig(backend="bnb", time_limit=1e-9))
        assert status == STATUS_TIME_LIMIT and x is None

    def test_gap_contract(self):
        rng = np.random.default_rng(31)
        cfg = SolverConfig(relative_mip_gap=0.01)
        for _ in range(5):
            net, demand, risk, alpha = random_instance(rng)
            sol = solve(build_opt_psps(net, demand, risk, _ctx(demand, risk, alpha)), cfg)
            assert sol.status == STATUS_OPTIMAL
            assert sol.objective >= sol.bound - 1e-9
            gap = (sol.objective - sol.bound) / max(abs(sol.objective), 1e-9)
            assert gap <= cfg.relative_mip_gap + 1e-6

    def test_determinism(self, triangle_net, triangle_demand):
        risk = {1: 3.0, 2: 1.0, 3: 2.0}
        runs = [
            solve(build_opt_psps(triangle_net, triangle_demand, risk, _ctx(triangle_demand, risk, 0.5)))
            for _ in range(2)
        ]
        assert np.array_equal(runs[0].z, runs[1].z)
        assert runs[0].objective == runs[1].objective
        assert np.array_equal(runs[0].shed, runs[1].shed)


class TestBackendsAgree:
    def test_same_optimum_on_random_instances(self):
        rng = np.random.default_rng(17)
        tight_h = SolverConfig(relative_mip_gap=1e-8, backend="highs")
        tight_b = SolverConfig(relative_mip_gap=1e-8, backend="bnb")
        for _ in range(5):
            net, demand, risk, alpha = random_instance(rng, max_bus=4, max_line=4, max_t=2)
            sh = solve(build_opt_psps(net, demand, risk, _ctx(demand, risk, alpha)), tight_h)
            sb = solve(build_opt_psps(net, demand, risk, _ctx(demand, risk, alpha)), tight_b)
            assert sb.objective == pytest.approx(sh.objective, abs=1e-6)
            assert verify_solution(net, demand, sb).ok


class TestOracle:
    def test_matches_brute_force_on_small_instances(self):
        rng = np.random.default_rng(5)
        for _ in range(4):
            net, demand, risk, alpha = random_instance(rng, max_bus=4, max_line=4, max_t=2)
            truth = brute_force_day_optimum(net, demand, risk, alpha)
            sol = solve(build_opt_psps(net, demand, risk, _ctx(demand, risk, alpha)), TIGHT)
            assert sol.objective == pytest.approx(truth, abs=1e-6)


class TestAlphaMonotonicity:
    def test_shed_down_risk_up(self, triangle_net, triangle_demand):
        risk = {1: 3.0, 2: 1.0, 3: 2.0}
        sheds, kept = [], []
        for alpha in (0.05, 0.25, 0.5, 0.75, 0.95):
            sol = solve(build_opt_psps(triangle_net, triangle_demand, risk, _ctx(triangle_demand, risk, alpha)), TIGHT)
            sheds.append(sol.total_shed)
            kept.append(float(np.array([3.0, 1.0, 2.0]) @ sol.z))
        for a, b in zip(sheds, sheds[1:]):
            assert b <= a + 1e-6
        for a, b in zip(kept, kept[1:]):
            assert b >= a - 1e-6

    def test_on_random_instance(self):
        rng = np.random.default_rng(8)
        net, demand, risk, _ = random_instance(rng, max_bus=5, max_line=5, max_t=2)
        risk_arr = np.array([risk[l.id] for l in net.lines])
        sheds, kept = [], []
        for alpha in (0.1, 0.4, 0.7, 0.9):
            sol = solve(build_opt_psps(net, demand, risk, _ctx(demand, risk, alpha)), TIGHT)
            sheds.append(sol.total_shed)
            kept.append(float(risk_arr @ sol.z))
        for a, b in zip(sheds, sheds[1:]):
            assert b <= a + 1e-6
        for a, b in zip(kept, kept[1:]):
            assert b >= a - 1e-6
