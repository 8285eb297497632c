"""Fairness-aware public safety power shutoff optimization.

Daily mixed-integer de-energization decisions on a DC power flow network,
balancing wildfire risk, total load shed, and per-bus shed fairness inside
a multi-day rolling simulation with state feedback.
"""

from .fairness import (
    FairContext,
    FairnessMethod,
    ShedTally,
    build_opt_psps_fair,
    fairness_value,
    minmax_bounds_and_F,
    range_bounds_and_F,
    update_tally,
    weighted_F,
)
from .ingest import (
    AlphaSchedule,
    DayInputs,
    DemandProfile,
    RiskRaster,
    build_season,
    integrate_line_risk,
    perturb_demand,
    scale_demand,
    schedule_alpha,
)
from .metrics import (
    MetricsReport,
    SweepRow,
    beta_sweep,
    cumulative_shed_percent,
    hamming,
    mad_fairness,
    max_shed_metric,
    mean_daily_hamming,
)
from .milp import ObjectiveContext, PspsModel, build_opt_psps, evaluate_objective, verify_solution
from .network import (
    Bus,
    CaseError,
    Generator,
    Line,
    Network,
    Violation,
    compute_big_m,
    incidence,
    parse_case,
    serialize_case,
    validate,
)
from .simulate import (
    DayRecord,
    ScenarioConfig,
    SimulationResult,
    min_shed_bound,
    realtime_operate,
    run_baseline,
    run_fair,
    write_outputs,
)
from .solver import DispatchSolution, SolverConfig, SolverError, solve, solve_model

__version__ = "0.1.0"
