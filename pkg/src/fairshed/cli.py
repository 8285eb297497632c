"""Command-line surface: validate, run, sweep, report.

Every flag can be overridden through an environment variable with the
``FAIRSHED_`` prefix (e.g. ``FAIRSHED_RUN_GAP=0.005``). Failures print a
one-line JSON object to stderr and exit nonzero.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .fairness import FairnessMethod
from .ingest import (
    AlphaSchedule,
    build_season,
    line_risks_from_raster,
    load_demand_csv,
    load_raster,
    load_risk_csv,
)
from .metrics import MetricsReport, beta_sweep, summarize
from .network import parse_case, validate
from .report import render_report, summary_text
from .simulate import ScenarioConfig, run_baseline, run_fair, write_outputs
from .solver import SolverConfig


@click.group()
def cli():
    """Fairness-aware public safety power shutoff optimization."""


def main():
    cli(auto_envvar_prefix="FAIRSHED")


def _machine_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - CLI boundary
            click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}), err=True)
            sys.exit(1)

    return wrapper


@cli.command("validate")
@click.argument("case", type=click.Path(exists=True, dir_okay=False))
@_machine_errors
def validate_cmd(case):
    """Parse and validate a case file; exit 0 only if clean."""
    net = parse_case(case)
    violations = validate(net)
    if violations:
        payload = {
            "error": "ValidationFailed",
            "violations": [
                {"entity": v.entity, "rule": v.rule, "detail": v.detail} for v in violations
            ],
        }
        click.echo(json.dumps(payload), err=True)
        sys.exit(1)
    click.echo(
        f"ok: {len(net.buses)} buses, {len(net.generators)} generators, {len(net.lines)} lines"
    )


def _scenario_options(fn):
    opts = [
        click.option("--case", required=True, type=click.Path(exists=True, dir_okay=False)),
        click.option("--demand", required=True, type=click.Path(exists=True),
                     help="Demand CSV (bus_id,hour,value_pu) or a directory with one CSV per day."),
        click.option("--raster", type=click.Path(exists=True),
                     help="Fire-potential raster JSON (file, or directory with one per day)."),
        click.option("--risk-csv", type=click.Path(exists=True, dir_okay=False),
                     help="Direct per-day per-line risk CSV (day,line_id,risk)."),
        click.option("--days", type=int, default=None, help="Days to simulate (default: all available)."),
        click.option("--alpha-lo", type=float, default=0.3, show_default=True),
        click.option("--alpha-hi", type=float, default=0.6, show_default=True),
        click.option("--alpha", type=float, default=None,
                     help="Fix the daily shed-vs-risk weight instead of scheduling it."),
        click.option("--hist-risk-min", type=float, default=None,
                     help="Historical min total risk for the alpha schedule (default: season min)."),
        click.option("--hist-risk-max", type=float, default=None,
                     help="Historical max total risk for the alpha schedule (default: season max)."),
        click.option("--zeta", type=float, default=0.05, show_default=True,
                     help="Allowed fractional risk increase of the fair solution."),
        click.option("--eta", type=float, default=0.9, show_default=True,
                     help="Forgetting factor on past shed."),
        click.option("--gap", type=float, default=0.01, show_default=True, help="Relative MIP gap."),
        click.option("--time-limit", type=float, default=300.0, show_default=True),
        click.option("--backend", type=click.Choice(["highs", "bnb"]), default="highs", show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--forecast-noise", type=float, default=0.02, show_default=True,
                     help="Uniform +/- forecast error applied to the loaded demand."),
        click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False)),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _load_inputs(case, demand, raster, risk_csv, days, alpha, alpha_lo, alpha_hi,
                 hist_risk_min, hist_risk_max, seed, forecast_noise):
    if (raster is None) == (risk_csv is None):
        raise click.UsageError("provide exactly one of --raster or --risk-csv")
    net = parse_case(case)
    violations = validate(net)
    if violations:
        raise ValueError(
            "invalid case: " + "; ".join(f"{v.entity}: {v.rule}" for v in violations)
        )

    demand_path = Path(demand)
    if demand_path.is_dir():
        files = sorted(demand_path.glob("*.csv"))
        if not files:
            raise ValueError(f"no CSV files in {demand_path}")
    else:
        files = [demand_path]

    if risk_csv is not None:
        by_day = load_risk_csv(risk_csv)
        risk_days = [by_day[d] for d in sorted(by_day)]
        if sorted(by_day) != list(range(1, len(by_day) + 1)):
            raise ValueError("risk CSV days must be contiguous starting at 1")
    else:
        raster_path = Path(raster)
        rfiles = sorted(raster_path.glob("*.json")) if raster_path.is_dir() else [raster_path]
        risk_days = [line_risks_from_raster(load_raster(p), net) for p in rfiles]

    n_days = days if days is not None else max(len(files), len(risk_days))
    actuals = [load_demand_csv(files[min(j, len(files) - 1)], buses=net.bus_ids()) for j in range(n_days)]
    risks = [risk_days[min(j, len(risk_days) - 1)] for j in range(n_days)]

    schedule = None
    if alpha is None:
        totals = [sum(r.values()) for r in risks]
        lo = hist_risk_min if hist_risk_min is not None else min(totals)
        hi = hist_risk_max if hist_risk_max is not None else max(totals)
        if not lo < hi:
            alpha = 0.5 * (alpha_lo + alpha_hi)  # constant-risk season: no spread to scale over
        else:
            schedule = AlphaSchedule(alpha_lo=alpha_lo, alpha_hi=alpha_hi,
                                     hist_risk_min=lo, hist_risk_max=hi)
    inputs = build_season(net, actuals, risks, schedule=schedule, alpha=alpha,
                          seed=seed, forecast_noise=forecast_noise)
    return net, inputs


@cli.command("run")
@_scenario_options
@click.option("--method", type=click.Choice(["none", "minmax", "weighted", "range"]),
              default="none", show_default=True)
@click.option("--beta", type=float, default=0.5, show_default=True,
              help="Shed-vs-fairness priority of the fair solve.")
@_machine_errors
def run_cmd(case, demand, raster, risk_csv, days, alpha_lo, alpha_hi, alpha,
            hist_risk_min, hist_risk_max, zeta, eta, gap, time_limit, backend,
            seed, forecast_noise, out_dir, method, beta):
    """Simulate one rolling season and write result.json plus flat CSVs."""
    net, inputs = _load_inputs(case, demand, raster, risk_csv, days, alpha, alpha_lo,
                               alpha_hi, hist_risk_min, hist_risk_max, seed, forecast_noise)
    scenario = ScenarioConfig(
        days=len(inputs),
        horizon=inputs[0].actual.horizon,
        beta=beta,
        zeta=zeta,
        eta=eta,
        method=None if method == "none" else FairnessMethod(method),
        seed=seed,
        solver=SolverConfig(relative_mip_gap=gap, time_limit=time_limit, seed=seed, backend=backend),
    )
    if scenario.method is None:
        result = run_baseline(net, scenario, inputs)
    else:
        result = run_fair(net, scenario, inputs)
    written = write_outputs(result, out_dir)
    row = summarize(result, label=method)
    MetricsReport([row]).write_csv(Path(out_dir) / "metrics.csv")
    for p in written:
        click.echo(str(p))
    click.echo(
        f"cumulative shed {row.cumulative_shed_pct:.3f}% | mad {row.mad_normalized:.4f} "
        f"| max bus shed {row.max_shed_pct:.3f}% | mean hamming {row.mean_hamming:.2f}"
    )


def _parse_betas(text: str) -> list[float]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"beta range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("beta step must be positive")
        out = []
        k = 0
        while True:
            value = start + k * step
            if value > stop + 1e-9:
                break
            out.append(round(value, 10))
            k += 1
        return out
    return [float(p) for p in text.split(",") if p.strip()]


@cli.command("sweep")
@_scenario_options
@click.option("--method", type=click.Choice(["minmax", "weighted", "range"]),
              default="weighted", show_default=True)
@click.option("--betas", default="0.05:0.95:0.05", show_default=True,
              help="start:stop:step (inclusive) or a comma list.")
@_machine_errors
def sweep_cmd(case, demand, raster, risk_csv, days, alpha_lo, alpha_hi, alpha,
              hist_risk_min, hist_risk_max, zeta, eta, gap, time_limit, backend,
              seed, forecast_noise, out_dir, method, betas):
    """Run one fair season per beta plus the references; write sweep.csv."""
    net, inputs = _load_inputs(case, demand, raster, risk_csv, days, alpha, alpha_lo,
                               alpha_hi, hist_risk_min, hist_risk_max, seed, forecast_noise)
    scenario = ScenarioConfig(
        days=len(inputs),
        horizon=inputs[0].actual.horizon,
        zeta=zeta,
        eta=eta,
        method=FairnessMethod(method),
        seed=seed,
        solver=SolverConfig(relative_mip_gap=gap, time_limit=time_limit, seed=seed, backend=backend),
    )
    report = beta_sweep(net, scenario, inputs, _parse_betas(betas))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = report.write_csv(out / "sweep.csv")
    click.echo(str(path))


@cli.command("report")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
              help="Where to write figures and tables (default: the input directory).")
@_machine_errors
def report_cmd(in_dir, out_dir):
    """Render figures, metrics.csv, and bus-shed geojson from run/sweep outputs."""
    written = render_report(in_dir, out_dir)
    click.echo(summary_text(written))


if __name__ == "__main__":
    main()
