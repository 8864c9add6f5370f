"""Fifteen-minute market models: proxy policy, training runs, data-driven policy.

Three closely related 7-interval market clearings share the unit-commitment
core from ucbase:

* the proxy model procures system-wide upward/downward ramping requirements
  derived from forecast confidence envelopes;
* the training model drops the ramping product entirely and re-dispatches
  against one sampled scenario, exposing how units respond to netload moves;
* the data-driven model keeps the proxy structure but additionally forces
  awards onto predicted responders and, through lazily generated cuts, keeps
  post-deployment line flows within ratings for a set of deployment scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dayahead import DaCommitments, initial_state_from_da
from .learner import DispatchTrajectory, RampResponseFactors
from .milp import CONTINUOUS, GE, LE, MilpModel, MilpSolution, SolveOptions, solve
from .network import PowerSystem, PtdfMatrix
from .scenarios import DEPLOYMENT, ForecastProfile, ProxyEnvelope, Scenario, ScenarioSet
from .ucbase import AT_LEAST, FIXED, UcModelBuilder, UnitInit, advance_state

UP = "up"
DOWN = "down"


@dataclass(frozen=True)
class FmmHorizon:
    """One trading hour's look-ahead window on the 15-min grid."""

    start: int                      # first 15-min interval (global index)
    length: int = 7
    n_binding: int = 4
    init: dict[int, UnitInit] = field(default_factory=dict)

    def __post_init__(self):
        if not self.length >= self.n_binding >= 1:
            raise ValueError("horizon length must be >= binding count >= 1")


@dataclass(frozen=True)
class FmmConfig:
    voll: float = 10000.0            # $/MWh on balance and requirement slack
    interval_hours: float = 0.25
    response_threshold: float = 0.05     # qualification floor for predicted responders
    cut_tol_mw: float = 1e-4
    max_cut_rounds: int = 20


@dataclass(frozen=True)
class FrpRequirements:
    """System-wide upward/downward ramping requirements per look-ahead move."""

    fr_up: np.ndarray    # (length-1,)
    fr_down: np.ndarray

    def __post_init__(self):
        if (self.fr_up < 0).any() or (self.fr_down < 0).any():
            raise ValueError("requirements must be nonnegative")


@dataclass
class FmmAwards:
    """Cleared quantities per generator and global 15-min interval.

    ``ur``/``dr`` at index t cap the dispatch move from interval t into t+1
    downstream in the validation phase.
    """

    gen_ids: list[int]
    p: dict[int, np.ndarray]
    u: dict[int, np.ndarray]
    ur: dict[int, np.ndarray]
    dr: dict[int, np.ndarray]

    @classmethod
    def empty(cls, system: PowerSystem, n_intervals: int) -> "FmmAwards":
        ids = [g.id for g in system.generators]
        zero = lambda: {g: np.zeros(n_intervals) for g in ids}
        return cls(gen_ids=ids, p=zero(), u=zero(), ur=zero(), dr=zero())

    @property
    def n_intervals(self) -> int:
        return len(self.p[self.gen_ids[0]])

    def ur_at(self, g: int, t: int) -> float:
        return float(self.ur[g][min(max(t, 0), self.n_intervals - 1)])

    def dr_at(self, g: int, t: int) -> float:
        return float(self.dr[g][min(max(t, 0), self.n_intervals - 1)])


@dataclass(frozen=True)
class DeltaNetload:
    """Netload move of each deployment scenario against the current forecast.

    Entry [t, s] is the scenario's netload at interval t+1 minus the forecast
    netload at t; positive classifies (t, s) as an upward deployment."""

    values: np.ndarray  # (length-1, n_scenarios)

    def direction(self, t: int, s: int) -> str | None:
        v = self.values[t, s]
        if v > 0:
            return UP
        if v < 0:
            return DOWN
        return None


@dataclass(frozen=True)
class PostDeploymentCut:
    line_id: int
    t: int            # local move index within the horizon
    scenario: int
    direction: str    # up | down
    bound: str        # upper | lower (the side that triggered the cut)
    round_added: int


class CutLoopError(RuntimeError):
    """Cut generation failed to converge or the model became infeasible."""


# ------------------------------------------------------------------ helpers

def compute_frp_requirements(envelope: ProxyEnvelope, profile: ForecastProfile,
                             start: int, length: int) -> FrpRequirements:
    """Proxy requirements from the forecast envelopes.

    Upward: worst-case netload at t+1 (max load, min solar) minus forecast
    netload at t, floored at zero; downward mirrored.
    """
    n = length - 1
    fr_up = np.zeros(n)
    fr_dn = np.zeros(n)
    for t in range(n):
        cur = profile.load_at(start + t) - profile.total_solar_at(start + t)
        up_next = envelope.load_max_at(start + t + 1) - envelope.solar_min_at(start + t + 1).sum()
        dn_next = envelope.load_min_at(start + t + 1) - envelope.solar_max_at(start + t + 1).sum()
        fr_up[t] = max(up_next - cur, 0.0)
        fr_dn[t] = max(cur - dn_next, 0.0)
    return FrpRequirements(fr_up=fr_up, fr_down=fr_dn)


def delta_netload(profile: ForecastProfile, scenario: Scenario,
                  start: int, length: int) -> np.ndarray:
    """Scenario netload at each next interval minus forecast netload now."""
    if scenario.kind != DEPLOYMENT:
        raise ValueError("delta_netload expects a deployment scenario")
    out = np.zeros(length - 1)
    for t in range(length - 1):
        nxt = scenario.load_at(start + t + 1) - scenario.total_solar_at(start + t + 1)
        cur = profile.load_at(start + t) - profile.total_solar_at(start + t)
        out[t] = nxt - cur
    return out


def _da_pattern(da, gen_id: int, start: int, length: int) -> np.ndarray:
    return np.array(
        [da.commitment_at(gen_id, start + t) for t in range(length)], dtype=float
    )


def _nodal_forecast(system: PowerSystem, profile: ForecastProfile,
                    start: int, length: int) -> tuple[np.ndarray, np.ndarray]:
    ts = np.arange(start, start + length)
    loads = system.nodal_loads(profile.load_at(ts))
    solar = np.zeros((system.n_buses, length))
    for u_idx, unit in enumerate(system.solar_units):
        solar[unit.bus] += profile.solar15[u_idx, np.clip(ts, 0, profile.solar15.shape[1] - 1)]
    return loads, solar


def _nodal_scenario(system: PowerSystem, scenario: Scenario,
                    start: int, length: int) -> tuple[np.ndarray, np.ndarray]:
    ts = np.arange(start, start + length)
    loads = system.nodal_loads(scenario.load_at(ts))
    solar = np.zeros((system.n_buses, length))
    for u_idx, unit in enumerate(system.solar_units):
        solar[unit.bus] += scenario.solar[u_idx, np.clip(ts, 0, scenario.solar.shape[1] - 1)]
    return loads, solar


# ----------------------------------------------------------------- handles

@dataclass
class FmmHandle:
    """A built FMM model plus the index maps needed to read it back."""

    model: MilpModel
    builder: UcModelBuilder
    system: PowerSystem
    ptdf: PtdfMatrix
    horizon: FmmHorizon
    cfg: FmmConfig
    policy: str                      # proxy | training | datadriven
    requirements: FrpRequirements | None = None
    ur: dict[tuple[int, int], int] = field(default_factory=dict)
    dr: dict[tuple[int, int], int] = field(default_factory=dict)
    # data-driven extras
    deployment: ScenarioSet | None = None
    dnl: DeltaNetload | None = None
    aux_up: dict[tuple[int, int, int], int] = field(default_factory=dict)
    aux_dn: dict[tuple[int, int, int], int] = field(default_factory=dict)
    flow_const_up: np.ndarray | None = None            # (K, length-1, S)
    flow_const_dn: np.ndarray | None = None
    cuts: list[PostDeploymentCut] = field(default_factory=list)
    _cut_keys: set[tuple[int, int, int, str]] = field(default_factory=set)

    def award_values(self, sol: MilpSolution) -> tuple[dict, dict]:
        length = self.horizon.length
        ur = {g.id: np.array([sol.value(self.ur[g.id, t]) for t in range(length - 1)])
              for g in self.system.generators}
        dr = {g.id: np.array([sol.value(self.dr[g.id, t]) for t in range(length - 1)])
              for g in self.system.generators}
        return ur, dr

    def frp_cost(self, sol: MilpSolution) -> np.ndarray:
        """Per-move FRP award cost vector."""
        out = np.zeros(self.horizon.length - 1)
        for g in self.system.generators:
            for t in range(self.horizon.length - 1):
                out[t] += g.frp_up_cost * sol.value(self.ur[g.id, t])
                out[t] += g.frp_down_cost * sol.value(self.dr[g.id, t])
        return out


# ------------------------------------------------------------------ builders

def _base_builder(system: PowerSystem, profile_loads, profile_solar,
                  da, horizon: FmmHorizon, cfg: FmmConfig, ptdf: PtdfMatrix,
                  name: str) -> UcModelBuilder:
    builder = UcModelBuilder(
        system, horizon.length, cfg.interval_hours, horizon.init,
        voll=cfg.voll, name=name,
    )
    modes = {}
    fs_ids = set()
    for gen in system.generators:
        pattern = _da_pattern(da, gen.id, horizon.start, horizon.length)
        if gen.is_fast_start:
            modes[gen.id] = (AT_LEAST, pattern)
            fs_ids.add(gen.id)
        else:
            modes[gen.id] = (FIXED, pattern)
    builder.add_commitment(modes, min_updown_for=fs_ids)
    builder.add_dispatch()
    builder.add_ramps()
    rates = {g.id: g.ramp_15 for g in system.generators}
    builder.add_shutdown_glidepath(
        horizon.start,
        schedule=da.commitment_at,
        down_budget=lambda gid, k: rates[gid],
    )
    builder.add_network(profile_loads, profile_solar)
    builder.add_line_limits(ptdf)
    return builder


def _add_frp_block(handle: FmmHandle) -> None:
    """Award variables, commitment-aware award limits, and requirement rows."""
    m = handle.model
    builder = handle.builder
    system = handle.system
    cfg = handle.cfg
    length = handle.horizon.length
    req = handle.requirements
    penalty = cfg.voll * cfg.interval_hours
    for gen in system.generators:
        for t in range(length - 1):
            uri = m.add_var(f"ur[g{gen.id},t{t}]", CONTINUOUS, 0.0, math.inf)
            dri = m.add_var(f"dr[g{gen.id},t{t}]", CONTINUOUS, 0.0, math.inf)
            handle.ur[gen.id, t] = uri
            handle.dr[gen.id, t] = dri
            m.add_to_objective(uri, gen.frp_up_cost)
            m.add_to_objective(dri, gen.frp_down_cost)
            u_t = builder.u(gen.id, t)
            u_n = builder.u(gen.id, t + 1)
            v_n = builder.v(gen.id, t + 1)
            w_n = builder.w(gen.id, t + 1)
            p_t = builder.p(gen.id, t)
            p_n = builder.p(gen.id, t + 1)
            # headroom: energy plus upward award within capacity (or startup)
            m.add_constr(
                f"cap_ur[g{gen.id},t{t}]",
                [(p_t, 1.0), (uri, 1.0), (u_t, -gen.p_max), (v_n, -gen.p_max)],
                LE, 0.0,
            )
            # footroom: energy minus downward award above minimum (or shutdown)
            m.add_constr(
                f"floor_dr[g{gen.id},t{t}]",
                [(p_t, 1.0), (dri, -1.0), (u_t, -gen.p_min), (w_n, gen.ramp_sd)],
                GE, 0.0,
            )
            # awards within ramping capability given commitment transitions
            m.add_constr(
                f"ur_ramp[g{gen.id},t{t}]",
                [(uri, 1.0), (u_t, -gen.ramp_15), (v_n, -gen.ramp_su)], LE, 0.0,
            )
            m.add_constr(
                f"dr_ramp[g{gen.id},t{t}]",
                [(dri, 1.0), (u_n, -gen.ramp_15), (w_n, -gen.ramp_sd)], LE, 0.0,
            )
            # no upward award unless on next interval; no downward unless on now
            m.add_constr(
                f"ur_next_on[g{gen.id},t{t}]", [(uri, 1.0), (u_n, -gen.p_max)], LE, 0.0,
            )
            m.add_constr(
                f"dr_on[g{gen.id},t{t}]", [(dri, 1.0), (u_t, -gen.p_max)], LE, 0.0,
            )
            # scheduled dispatch moves must stay within the awards
            m.add_constr(
                f"disp_in_ur[g{gen.id},t{t}]",
                [(p_n, 1.0), (p_t, -1.0), (uri, -1.0)], LE, 0.0,
            )
            m.add_constr(
                f"disp_in_dr[g{gen.id},t{t}]",
                [(p_t, 1.0), (p_n, -1.0), (dri, -1.0)], LE, 0.0,
            )
    for t in range(length - 1):
        short_up = m.add_var(f"fr_up_short[t{t}]", CONTINUOUS, 0.0, math.inf)
        short_dn = m.add_var(f"fr_dn_short[t{t}]", CONTINUOUS, 0.0, math.inf)
        m.add_to_objective(short_up, penalty)
        m.add_to_objective(short_dn, penalty)
        terms = [(handle.ur[g.id, t], 1.0) for g in system.generators]
        terms.append((short_up, 1.0))
        m.add_constr(f"fr_up_req[t{t}]", terms, GE, float(req.fr_up[t]))
        terms = [(handle.dr[g.id, t], 1.0) for g in system.generators]
        terms.append((short_dn, 1.0))
        m.add_constr(f"fr_dn_req[t{t}]", terms, GE, float(req.fr_down[t]))


def build_fmm_proxy(system: PowerSystem, ptdf: PtdfMatrix, profile: ForecastProfile,
                    envelope: ProxyEnvelope, da: DaCommitments, horizon: FmmHorizon,
                    cfg: FmmConfig | None = None) -> FmmHandle:
    """FMM with the system-wide proxy ramping product."""
    cfg = cfg or FmmConfig()
    loads, solar = _nodal_forecast(system, profile, horizon.start, horizon.length)
    builder = _base_builder(system, loads, solar, da, horizon, cfg, ptdf,
                            name=f"fmm_proxy@{horizon.start}")
    handle = FmmHandle(
        model=builder.model, builder=builder, system=system, ptdf=ptdf,
        horizon=horizon, cfg=cfg, policy="proxy",
        requirements=compute_frp_requirements(envelope, profile, horizon.start,
                                              horizon.length),
    )
    _add_frp_block(handle)
    return handle


def build_fmm_training(system: PowerSystem, ptdf: PtdfMatrix, scenario: Scenario,
                       da: DaCommitments, horizon: FmmHorizon,
                       cfg: FmmConfig | None = None) -> FmmHandle:
    """Energy-only FMM against one sampled scenario (no ramping product)."""
    cfg = cfg or FmmConfig()
    loads, solar = _nodal_scenario(system, scenario, horizon.start, horizon.length)
    builder = _base_builder(system, loads, solar, da, horizon, cfg, ptdf,
                            name=f"fmm_training@{horizon.start}")
    return FmmHandle(
        model=builder.model, builder=builder, system=system, ptdf=ptdf,
        horizon=horizon, cfg=cfg, policy="training",
    )


def build_fmm_datadriven(system: PowerSystem, ptdf: PtdfMatrix,
                         profile: ForecastProfile, envelope: ProxyEnvelope,
                         da: DaCommitments, horizon: FmmHorizon,
                         factors: RampResponseFactors,
                         deployment: ScenarioSet,
                         cfg: FmmConfig | None = None) -> FmmHandle:
    """Proxy FMM plus deployment-scenario coverage by predicted responders.

    Post-deployment line constraints are intentionally absent at build time;
    they join the model as cuts inside ``solve_with_cuts``.
    """
    cfg = cfg or FmmConfig()
    handle = build_fmm_proxy(system, ptdf, profile, envelope, da, horizon, cfg)
    handle.policy = "datadriven"
    handle.deployment = deployment
    m = handle.model
    length = horizon.length
    start = horizon.start
    penalty = cfg.voll * cfg.interval_hours
    n_dep = len(deployment)

    dnl = DeltaNetload(values=np.column_stack([
        delta_netload(profile, scn, start, length) for scn in deployment
    ]))
    handle.dnl = dnl

    mr_ids = {g.id for g in system.must_run_generators()}
    for s, scn in enumerate(deployment):
        for t in range(length - 1):
            move = dnl.values[t, s]
            if move > 0:
                aux, tag, sign = handle.aux_up, "up", 1.0
            elif move < 0:
                aux, tag, sign = handle.aux_dn, "dn", -1.0
            else:
                continue
            cover_terms = []
            for gen in system.generators:
                ai = m.add_var(f"{'ura' if sign > 0 else 'dra'}[g{gen.id},t{t},s{s}]",
                               CONTINUOUS, 0.0, math.inf)
                aux[gen.id, t, s] = ai
                award = handle.ur[gen.id, t] if sign > 0 else handle.dr[gen.id, t]
                m.add_constr(
                    f"aux_le_award_{tag}[g{gen.id},t{t},s{s}]",
                    [(ai, 1.0), (award, -1.0)], LE, 0.0,
                )
                cover_terms.append((ai, 1.0))
                if gen.id not in mr_ids:
                    continue
                z = sign * factors.value_at(gen.id, start + t, s)
                committed_both = (
                    da.commitment_at(gen.id, start + t) == 1
                    and da.commitment_at(gen.id, start + t + 1) == 1
                )
                if z > cfg.response_threshold and committed_both:
                    m.add_constr(
                        f"aux_qual_{tag}[g{gen.id},t{t},s{s}]",
                        [(ai, 1.0)], GE, z * gen.ramp_15,
                    )
            short = m.add_var(f"cover_{tag}_short[t{t},s{s}]", CONTINUOUS, 0.0, math.inf)
            m.add_to_objective(short, penalty)
            cover_terms.append((short, 1.0))
            m.add_constr(f"cover_{tag}[t{t},s{s}]", cover_terms, GE, abs(move))

    # constant flow shifts per (line, move, scenario): solar and load deltas
    k_count = len(system.lines)
    handle.flow_const_up = np.zeros((k_count, length - 1, n_dep))
    handle.flow_const_dn = np.zeros((k_count, length - 1, n_dep))
    part = system.load_participation
    for s, scn in enumerate(deployment):
        for t in range(length - 1):
            dsolar_bus = np.zeros(system.n_buses)
            for u_idx, unit in enumerate(system.solar_units):
                dsolar_bus[unit.bus] += (scn.solar_at(start + t + 1)[u_idx]
                                         - profile.solar_at(start + t)[u_idx])
            dload_bus = part * (scn.load_at(start + t + 1) - profile.load_at(start + t))
            const = ptdf.values @ (dsolar_bus - dload_bus)
            handle.flow_const_up[:, t, s] = const
            handle.flow_const_dn[:, t, s] = const
    return handle


# ------------------------------------------------------------------ cut loop

def post_deployment_flows(handle: FmmHandle, sol: MilpSolution,
                          scenario_idx: int, direction: str) -> np.ndarray:
    """Line flows after deploying the scenario's auxiliary awards.

    Returns (n_lines, length-1); entries are NaN for moves where the scenario
    is not classified in the requested direction.
    """
    system = handle.system
    length = handle.horizon.length
    base = handle.builder.base_flows(sol, handle.ptdf)  # (K, length)
    out = np.full((len(system.lines), length - 1), np.nan)
    aux = handle.aux_up if direction == UP else handle.aux_dn
    const = handle.flow_const_up if direction == UP else handle.flow_const_dn
    sign = 1.0 if direction == UP else -1.0
    for t in range(length - 1):
        if handle.dnl is None:
            continue
        move = handle.dnl.values[t, scenario_idx]
        if (direction == UP and move <= 0) or (direction == DOWN and move >= 0):
            continue
        shift = np.zeros(system.n_buses)
        for gen in system.generators:
            key = (gen.id, t, scenario_idx)
            if key in aux:
                shift[gen.bus] += sign * sol.value(aux[key])
        out[:, t] = base[:, t] + handle.ptdf.values @ shift + const[:, t, scenario_idx]
    return out


def _violations(handle: FmmHandle, sol: MilpSolution, tol: float):
    """All (k, t, s, direction, bound, magnitude) beyond rating + tol."""
    found = []
    if handle.deployment is None:
        return found
    ratings = np.array([ln.rating for ln in handle.system.lines])
    for s in range(len(handle.deployment)):
        for direction in (UP, DOWN):
            flows = post_deployment_flows(handle, sol, s, direction)
            with np.errstate(invalid="ignore"):
                over = flows - ratings[:, None]
                under = -ratings[:, None] - flows
            for k, t in zip(*np.where(over > tol)):
                found.append((int(k), int(t), s, direction, "upper", float(over[k, t])))
            for k, t in zip(*np.where(under > tol)):
                found.append((int(k), int(t), s, direction, "lower", float(under[k, t])))
    return found


def _add_cut(handle: FmmHandle, k: int, t: int, s: int, direction: str,
             bound: str, round_no: int) -> bool:
    """Add the two-sided post-deployment flow constraint for (k, t, s, dir)."""
    key = (k, t, s, direction)
    if key in handle._cut_keys:
        return False
    handle._cut_keys.add(key)
    m = handle.model
    system = handle.system
    line = system.lines[k]
    row = handle.ptdf.values[k]
    aux = handle.aux_up if direction == UP else handle.aux_dn
    const = (handle.flow_const_up if direction == UP else handle.flow_const_dn)[k, t, s]
    sign = 1.0 if direction == UP else -1.0
    terms: list[tuple[int, float]] = []
    for n in range(system.n_buses):
        if abs(row[n]) > 1e-12:
            terms.append((handle.builder.inj(n, t), float(row[n])))
    for gen in system.generators:
        akey = (gen.id, t, s)
        if akey in aux and abs(row[gen.bus]) > 1e-12:
            terms.append((aux[akey], sign * float(row[gen.bus])))
    m.add_constr(f"dep_flow_ub[k{line.id},t{t},s{s},{direction}]",
                 terms, LE, line.rating - const)
    m.add_constr(f"dep_flow_lb[k{line.id},t{t},s{s},{direction}]",
                 terms, GE, -line.rating - const)
    handle.cuts.append(PostDeploymentCut(
        line_id=line.id, t=t, scenario=s, direction=direction,
        bound=bound, round_added=round_no,
    ))
    return True


def solve_with_cuts(handle: FmmHandle, options: SolveOptions | None = None,
                    tol: float | None = None,
                    max_rounds: int | None = None) -> tuple[MilpSolution, list[PostDeploymentCut]]:
    """Solve, then iteratively add violated post-deployment flow constraints.

    Terminates when a solve leaves every post-deployment flow within rating
    plus tolerance.  Raises CutLoopError when rounds are exhausted with
    violations remaining or the model becomes infeasible after cuts.
    """
    tol = handle.cfg.cut_tol_mw if tol is None else tol
    max_rounds = handle.cfg.max_cut_rounds if max_rounds is None else max_rounds
    sol = solve(handle.model, options)
    if sol.status != "optimal":
        raise CutLoopError(f"initial solve ended with status {sol.status}")
    for round_no in range(1, max_rounds + 1):
        violations = _violations(handle, sol, tol)
        if not violations:
            return sol, list(handle.cuts)
        added = 0
        for k, t, s, direction, bound, _ in violations:
            if _add_cut(handle, k, t, s, direction, bound, round_no):
                added += 1
        if added == 0:
            raise CutLoopError(
                "violations persist but all corresponding constraints are "
                "already present; residuals exceed the solve tolerance"
            )
        sol = solve(handle.model, options)
        if sol.status != "optimal":
            raise CutLoopError(
                f"model became {sol.status} after adding {len(handle.cuts)} "
                "post-deployment constraints: no deliverable allocation exists"
            )
    remaining = _violations(handle, sol, tol)
    if remaining:
        worst = max(remaining, key=lambda r: r[-1])
        raise CutLoopError(
            f"cut loop exhausted {max_rounds} rounds with {len(remaining)} "
            f"violations remaining (worst {worst[-1]:.4f} MW on line {worst[0]})"
        )
    return sol, list(handle.cuts)


# ---------------------------------------------------------------- day rolls

@dataclass
class FmmDayRun:
    """Awards and cost accounting from rolling one policy over a trading day."""

    policy: str
    awards: FmmAwards
    cost: float                 # binding-interval operating + award cost
    violation_mwh: float        # binding-interval balance slack
    cuts: list[tuple[int, PostDeploymentCut]] = field(default_factory=list)


def run_fmm_day(system: PowerSystem, ptdf: PtdfMatrix, profile: ForecastProfile,
                envelope: ProxyEnvelope, da: DaCommitments, policy: str,
                cfg: FmmConfig | None = None,
                factors: RampResponseFactors | None = None,
                deployment: ScenarioSet | None = None,
                options: SolveOptions | None = None,
                n_intervals: int = 96) -> FmmDayRun:
    """Clear every trading hour of the day under one FRP policy.

    The initial state of each hour chains from the last binding interval of
    the previous hour; the day starts at the hour-0 day-ahead schedule.
    """
    cfg = cfg or FmmConfig()
    if policy == "datadriven" and (factors is None or deployment is None):
        raise ValueError("data-driven clearing needs response factors and scenarios")
    awards = FmmAwards.empty(system, n_intervals)
    state = initial_state_from_da(system, da)
    total_cost = 0.0
    total_viol = 0.0
    all_cuts: list[tuple[int, PostDeploymentCut]] = []
    n_hours = n_intervals // 4
    for hour in range(n_hours):
        horizon = FmmHorizon(start=4 * hour, init=state)
        if policy == "datadriven":
            handle = build_fmm_datadriven(system, ptdf, profile, envelope, da,
                                          horizon, factors, deployment, cfg)
            sol, cuts = solve_with_cuts(handle, options)
            all_cuts.extend((hour, c) for c in cuts)
        else:
            handle = build_fmm_proxy(system, ptdf, profile, envelope, da,
                                     horizon, cfg)
            sol = solve(handle.model, options)
            if sol.status != "optimal":
                raise RuntimeError(
                    f"FMM solve failed at hour {hour} ({policy}): {sol.status}"
                )
        nb = horizon.n_binding
        cost, viol = handle.builder.interval_costs(sol)
        frp = handle.frp_cost(sol)
        total_cost += float(cost[:nb].sum() + frp[:nb].sum())
        total_viol += float(viol[:nb].sum()) * cfg.interval_hours
        ur, dr = handle.award_values(sol)
        for gen in system.generators:
            u_arr = handle.builder.commitment_values(sol, gen.id)
            p_arr = handle.builder.dispatch_values(sol, gen.id)
            for t in range(nb):
                g_idx = horizon.start + t
                awards.p[gen.id][g_idx] = p_arr[t]
                awards.u[gen.id][g_idx] = u_arr[t]
                awards.ur[gen.id][g_idx] = ur[gen.id][t]
                awards.dr[gen.id][g_idx] = dr[gen.id][t]
        u_exec = {g.id: handle.builder.commitment_values(sol, g.id)[:nb]
                  for g in system.generators}
        p_exec = {g.id: handle.builder.dispatch_values(sol, g.id)[:nb]
                  for g in system.generators}
        state = advance_state(system, state, u_exec, p_exec)
    return FmmDayRun(policy=policy, awards=awards, cost=total_cost,
                     violation_mwh=total_viol, cuts=all_cuts)


def run_training_day(system: PowerSystem, ptdf: PtdfMatrix, scenario: Scenario,
                     da: DaCommitments, cfg: FmmConfig | None = None,
                     options: SolveOptions | None = None,
                     n_intervals: int = 96) -> DispatchTrajectory:
    """Rolling energy-only market run against one training scenario.

    Returns the executed day-long dispatch/commitment trajectory used to
    build regression targets.
    """
    cfg = cfg or FmmConfig()
    state = initial_state_from_da(system, da)
    dispatch = {g.id: np.zeros(n_intervals) for g in system.generators}
    commitment = {g.id: np.zeros(n_intervals) for g in system.generators}
    n_hours = n_intervals // 4
    for hour in range(n_hours):
        horizon = FmmHorizon(start=4 * hour, init=state)
        handle = build_fmm_training(system, ptdf, scenario, da, horizon, cfg)
        sol = solve(handle.model, options)
        if sol.status != "optimal":
            raise RuntimeError(
                f"training solve failed at hour {hour}: {sol.status}"
            )
        nb = horizon.n_binding
        u_exec = {g.id: handle.builder.commitment_values(sol, g.id)[:nb]
                  for g in system.generators}
        p_exec = {g.id: handle.builder.dispatch_values(sol, g.id)[:nb]
                  for g in system.generators}
        for gen in system.generators:
            dispatch[gen.id][horizon.start: horizon.start + nb] = p_exec[gen.id]
            commitment[gen.id][horizon.start: horizon.start + nb] = u_exec[gen.id]
        state = advance_state(system, state, u_exec, p_exec)
    return DispatchTrajectory(dispatch=dispatch, commitment=commitment)
