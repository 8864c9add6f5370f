"""Out-of-sample rolling validation and policy comparison metrics.

One validation run re-dispatches a full day against a realized scenario,
hour by hour: must-run units keep their day-ahead commitment and may move
between intervals only within the ramping awards they were sold, fast-start
units may be committed ad hoc, and any residual imbalance is priced at VOLL.
Only the four binding intervals of each hour feed metrics and the chained
state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dayahead import DaCommitments, initial_state_from_da
from .fmm import FmmAwards
from .milp import SolveOptions, solve
from .network import PowerSystem, PtdfMatrix
from .scenarios import INTERVALS_PER_DAY, OUT_OF_SAMPLE, Scenario
from .ucbase import AT_LEAST, FIXED, UcModelBuilder, advance_state

PROXY = "proxy"
DATADRIVEN = "datadriven"
POLICIES = (PROXY, DATADRIVEN)


@dataclass(frozen=True)
class ValidationConfig:
    length: int = 7
    n_binding: int = 4
    voll: float = 10000.0          # $/MWh
    interval_hours: float = 0.25
    solve: SolveOptions = field(default_factory=SolveOptions)


@dataclass
class ScenarioResult:
    """Metrics of one policy on one out-of-sample scenario day."""

    scenario_id: int
    policy: str
    rt_cost_excl_violation: float
    total_violation_mwh: float
    fs_commitment_count: int
    total_cost: float
    interval_cost: np.ndarray          # (96,) $, excluding violation
    interval_violation_mwh: np.ndarray  # (96,)
    # executed binding-interval trajectory, populated on request only
    dispatch: dict[int, np.ndarray] | None = None
    commitment: dict[int, np.ndarray] | None = None
    startup: dict[int, np.ndarray] | None = None

    @classmethod
    def from_intervals(cls, scenario_id: int, policy: str, cost: np.ndarray,
                       violation_mwh: np.ndarray, fs_count: int,
                       voll: float) -> "ScenarioResult":
        excl = float(cost.sum())
        viol = float(violation_mwh.sum())
        return cls(
            scenario_id=scenario_id,
            policy=policy,
            rt_cost_excl_violation=excl,
            total_violation_mwh=viol,
            fs_commitment_count=fs_count,
            total_cost=excl + voll * viol,
            interval_cost=cost,
            interval_violation_mwh=violation_mwh,
        )


def run_rtuc_validation(system: PowerSystem, ptdf: PtdfMatrix, awards: FmmAwards,
                        da: DaCommitments, scenario: Scenario, scenario_id: int,
                        policy: str, cfg: ValidationConfig | None = None,
                        keep_dispatch: bool = False) -> ScenarioResult:
    """Roll the 7-interval RTUC over the day against one realized scenario."""
    cfg = cfg or ValidationConfig()
    if scenario.kind != OUT_OF_SAMPLE:
        raise ValueError("validation expects an out-of-sample scenario")
    n_hours = INTERVALS_PER_DAY // 4
    state = initial_state_from_da(system, da)
    cost = np.zeros(INTERVALS_PER_DAY)
    violation = np.zeros(INTERVALS_PER_DAY)
    fs_count = 0
    fs_ids = {g.id for g in system.fast_start_generators()}
    p_day = {g.id: np.zeros(INTERVALS_PER_DAY) for g in system.generators}
    u_day = {g.id: np.zeros(INTERVALS_PER_DAY) for g in system.generators}
    v_day = {g.id: np.zeros(INTERVALS_PER_DAY) for g in system.generators}
    for hour in range(n_hours):
        start = 4 * hour
        builder = UcModelBuilder(
            system, cfg.length, cfg.interval_hours, state, voll=cfg.voll,
            name=f"rtuc_{policy}@{start}",
        )
        modes = {}
        for gen in system.generators:
            pattern = np.array(
                [da.commitment_at(gen.id, start + t) for t in range(cfg.length)],
                dtype=float,
            )
            modes[gen.id] = (AT_LEAST, pattern) if gen.id in fs_ids else (FIXED, pattern)
        builder.add_commitment(modes, min_updown_for=fs_ids)
        builder.add_dispatch()
        # must-run moves are limited by the awards sold at each boundary
        caps = {}
        for gen in system.must_run_generators():
            up = np.array([awards.ur_at(gen.id, start + t - 1) for t in range(cfg.length)])
            dn = np.array([awards.dr_at(gen.id, start + t - 1) for t in range(cfg.length)])
            caps[gen.id] = (up, dn)
        builder.add_ramps(move_caps=caps)
        # scheduled shutdowns beyond the window must stay reachable within
        # the downward awards held along the way
        builder.add_shutdown_glidepath(
            start,
            schedule=da.commitment_at,
            down_budget=awards.dr_at,
        )
        ts = np.arange(start, start + cfg.length)
        loads = system.nodal_loads(scenario.load_at(ts))
        solar = np.zeros((system.n_buses, cfg.length))
        for u_idx, unit in enumerate(system.solar_units):
            solar[unit.bus] += scenario.solar_at(ts)[u_idx]
        builder.add_network(loads, solar)
        builder.add_line_limits(ptdf)
        sol = solve(builder.model, cfg.solve)
        if sol.status != "optimal":
            raise RuntimeError(
                f"validation solve failed at hour {hour} for scenario "
                f"{scenario_id} ({policy}): {sol.status}"
            )
        hour_cost, hour_viol = builder.interval_costs(sol)
        nb = cfg.n_binding
        cost[start: start + nb] = hour_cost[:nb]
        violation[start: start + nb] = hour_viol[:nb] * cfg.interval_hours
        u_exec = {g.id: builder.commitment_values(sol, g.id)[:nb]
                  for g in system.generators}
        p_exec = {g.id: builder.dispatch_values(sol, g.id)[:nb]
                  for g in system.generators}
        fs_count += int(sum(u_exec[g].sum() for g in fs_ids))
        for g in system.generators:
            p_day[g.id][start: start + nb] = p_exec[g.id]
            u_day[g.id][start: start + nb] = u_exec[g.id]
            v_day[g.id][start: start + nb] = [
                sol.value(builder.v(g.id, t)) for t in range(nb)
            ]
        state = advance_state(system, state, u_exec, p_exec)
    result = ScenarioResult.from_intervals(
        scenario_id, policy, cost, violation, fs_count, cfg.voll
    )
    if keep_dispatch:
        result.dispatch = p_day
        result.commitment = u_day
        result.startup = v_day
    return result


# ------------------------------------------------------------------ metrics

@dataclass
class MetricsReport:
    """Paired per-scenario results plus the aggregate comparison statistics."""

    proxy: list[ScenarioResult]
    datadriven: list[ScenarioResult]
    improvements: dict[str, int] = field(default_factory=dict)
    aggregates: dict[str, dict[str, float]] = field(default_factory=dict)
    interval_improvement_q1: np.ndarray | None = None
    interval_improvement_median: np.ndarray | None = None
    interval_improvement_q3: np.ndarray | None = None
    fmm_cost: dict[str, float] = field(default_factory=dict)

    @property
    def n_scenarios(self) -> int:
        return len(self.proxy)


_METRICS = {
    "rt_cost_excl_violation": lambda r: r.rt_cost_excl_violation,
    "total_violation_mwh": lambda r: r.total_violation_mwh,
    "fs_commitments": lambda r: float(r.fs_commitment_count),
    "total_cost": lambda r: r.total_cost,
}


def aggregate_metrics(proxy: list[ScenarioResult], datadriven: list[ScenarioResult],
                      fmm_cost: dict[str, float] | None = None) -> MetricsReport:
    """Pairwise comparison of the two policies on identical scenario sets."""
    if len(proxy) != len(datadriven):
        raise ValueError("policies were evaluated on different scenario counts")
    if not proxy:
        raise ValueError("empty scenario set")
    for a, b in zip(proxy, datadriven):
        if a.scenario_id != b.scenario_id:
            raise ValueError("scenario pairing mismatch between policies")
    report = MetricsReport(proxy=proxy, datadriven=datadriven,
                           fmm_cost=dict(fmm_cost or {}))
    report.improvements = {
        "rt_cost_excl_violation": sum(
            1 for a, b in zip(proxy, datadriven)
            if b.rt_cost_excl_violation < a.rt_cost_excl_violation
        ),
        "total_violation_mwh": sum(
            1 for a, b in zip(proxy, datadriven)
            if b.total_violation_mwh < a.total_violation_mwh
        ),
        "fs_commitments": sum(
            1 for a, b in zip(proxy, datadriven)
            if b.fs_commitment_count < a.fs_commitment_count
        ),
    }
    for name, getter in _METRICS.items():
        for policy, results in ((PROXY, proxy), (DATADRIVEN, datadriven)):
            vals = np.array([getter(r) for r in results])
            report.aggregates[f"{policy}.{name}"] = {
                "avg": float(vals.mean()),
                "sum": float(vals.sum()),
                "max": float(vals.max()),
            }
    gains = np.stack([
        a.interval_cost - b.interval_cost for a, b in zip(proxy, datadriven)
    ])  # positive: data-driven cheaper at that interval
    report.interval_improvement_q1 = np.quantile(gains, 0.25, axis=0)
    report.interval_improvement_median = np.quantile(gains, 0.5, axis=0)
    report.interval_improvement_q3 = np.quantile(gains, 0.75, axis=0)
    return report


@dataclass(frozen=True)
class ComparisonRow:
    table: str
    metric: str
    proxy: float
    datadriven: float


def compare_policies(report: MetricsReport) -> list[ComparisonRow]:
    """Flatten the report into the comparison-table families."""
    if not report.proxy:
        raise ValueError("report is empty")
    rows: list[ComparisonRow] = []
    n = float(report.n_scenarios)
    for metric, count in report.improvements.items():
        rows.append(ComparisonRow("improvements", f"scenarios_improved.{metric}",
                                  n, float(count)))
    for stat in ("avg", "sum", "max"):
        rows.append(ComparisonRow(
            "violations", f"total_violation_mwh.{stat}",
            report.aggregates[f"{PROXY}.total_violation_mwh"][stat],
            report.aggregates[f"{DATADRIVEN}.total_violation_mwh"][stat],
        ))
    if report.fmm_cost:
        rows.append(ComparisonRow(
            "costs", "fmm_operating_cost",
            report.fmm_cost.get(PROXY, float("nan")),
            report.fmm_cost.get(DATADRIVEN, float("nan")),
        ))
    for stat in ("avg", "max"):
        rows.append(ComparisonRow(
            "costs", f"rt_cost_excl_violation.{stat}",
            report.aggregates[f"{PROXY}.rt_cost_excl_violation"][stat],
            report.aggregates[f"{DATADRIVEN}.rt_cost_excl_violation"][stat],
        ))
        rows.append(ComparisonRow(
            "costs", f"total_cost.{stat}",
            report.aggregates[f"{PROXY}.total_cost"][stat],
            report.aggregates[f"{DATADRIVEN}.total_cost"][stat],
        ))
    for stat in ("sum", "avg", "max"):
        rows.append(ComparisonRow(
            "fs_commitments", f"fs_commitments.{stat}",
            report.aggregates[f"{PROXY}.fs_commitments"][stat],
            report.aggregates[f"{DATADRIVEN}.fs_commitments"][stat],
        ))
    return rows


# ------------------------------------------------------------------ persist

def write_results_csv(results: list[ScenarioResult], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "scenario_id", "policy", "rt_cost_excl_violation",
            "total_violation_mwh", "fs_commitments", "total_cost",
        ])
        for r in results:
            writer.writerow([
                r.scenario_id, r.policy, f"{r.rt_cost_excl_violation:.6f}",
                f"{r.total_violation_mwh:.6f}", r.fs_commitment_count,
                f"{r.total_cost:.6f}",
            ])


def write_interval_csv(results: list[ScenarioResult], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "policy", "interval", "cost",
                         "violation_mwh"])
        for r in results:
            for t in range(len(r.interval_cost)):
                writer.writerow([
                    r.scenario_id, r.policy, t,
                    f"{r.interval_cost[t]:.6f}",
                    f"{r.interval_violation_mwh[t]:.6f}",
                ])
