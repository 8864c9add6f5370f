"""Shared commitment/dispatch/network structure for all market models.

Every market model in the suite (hourly day-ahead, the 15-min market
variants, and the validation re-dispatch) is the same core: per-generator
commitment logic with startup/shutdown variables and minimum up/down times,
block-wise dispatch costs, ramp limits, nodal injections with PTDF line
limits, and a VOLL-priced system balance.  The builder assembles that core
into a MilpModel; callers layer policy-specific structure on top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .milp import BINARY, CONTINUOUS, EQ, GE, LE, MilpModel, MilpSolution
from .network import PowerSystem, PtdfMatrix

FIXED = "fixed"      # commitment pinned to a given 0/1 pattern
FREE = "free"        # commitment decided by the model
AT_LEAST = "atleast"  # commitment may only add to a given 0/1 pattern

LINE_COEF_EPS = 1e-10  # PTDF entries below this are dropped from line rows


@dataclass(frozen=True)
class UnitInit:
    """Generator state entering the horizon."""

    committed: bool
    power: float
    up_time: int = 10_000    # intervals continuously on, if committed
    down_time: int = 10_000  # intervals continuously off, if not

    def replace(self, **kw) -> "UnitInit":
        return replace(self, **kw)


def cold_start_state(system: PowerSystem) -> dict[int, UnitInit]:
    """Everything off for a long time with zero prior output."""
    return {g.id: UnitInit(committed=False, power=0.0) for g in system.generators}


def advance_state(system: PowerSystem, state: dict[int, UnitInit],
                  u_exec: dict[int, np.ndarray],
                  p_exec: dict[int, np.ndarray]) -> dict[int, UnitInit]:
    """Roll the unit state across a block of executed intervals."""
    out: dict[int, UnitInit] = {}
    for g in system.generators:
        init = state[g.id]
        up, down = init.up_time, init.down_time
        committed = init.committed
        for ut in u_exec[g.id]:
            on = bool(round(float(ut)))
            if on == committed:
                if on:
                    up += 1
                else:
                    down += 1
            else:
                committed = on
                up, down = (1, 0) if on else (0, 1)
        out[g.id] = UnitInit(
            committed=committed,
            power=float(p_exec[g.id][-1]),
            up_time=up if committed else 0,
            down_time=down if not committed else 0,
        )
    return out


class UcModelBuilder:
    """Assemble the shared unit-commitment core of one market model.

    Call order: ``add_commitment`` then ``add_dispatch`` then ``add_ramps``
    then ``add_network``.  Index lookups (``u``, ``p``, ...) are valid after
    the corresponding ``add_*`` call.
    """

    def __init__(self, system: PowerSystem, n_intervals: int,
                 interval_hours: float, init: dict[int, UnitInit],
                 voll: float = 10000.0, name: str = "uc"):
        self.system = system
        self.n_intervals = n_intervals
        self.interval_hours = interval_hours
        self.init = init
        self.voll = voll
        self.model = MilpModel(name=name)
        self._u: dict[tuple[int, int], int] = {}
        self._v: dict[tuple[int, int], int] = {}
        self._w: dict[tuple[int, int], int] = {}
        self._p: dict[tuple[int, int], int] = {}
        self._pe: dict[tuple[int, int, int], int] = {}
        self._inj: dict[tuple[int, int], int] = {}
        self._sl_short: dict[int, int] = {}
        self._sl_surp: dict[int, int] = {}

    # ---------------------------------------------------------------- lookups
    def u(self, g: int, t: int) -> int:
        return self._u[g, t]

    def v(self, g: int, t: int) -> int:
        return self._v[g, t]

    def w(self, g: int, t: int) -> int:
        return self._w[g, t]

    def p(self, g: int, t: int) -> int:
        return self._p[g, t]

    def pe(self, g: int, t: int, e: int) -> int:
        return self._pe[g, t, e]

    def inj(self, n: int, t: int) -> int:
        return self._inj[n, t]

    def slack_short(self, t: int) -> int:
        return self._sl_short[t]

    def slack_surplus(self, t: int) -> int:
        return self._sl_surp[t]

    # ------------------------------------------------------------- commitment
    def add_commitment(self, modes: dict[int, tuple[str, np.ndarray | None]],
                       min_updown_for: set[int]) -> None:
        """Commitment, startup and shutdown logic for every generator.

        ``modes`` maps generator id to (mode, pattern); the pattern is the
        per-interval 0/1 reference for FIXED and AT_LEAST modes.  Minimum
        up/down windows are enforced for the generators in ``min_updown_for``
        (freely committed units); pinned units carry their pattern as given.
        """
        m = self.model
        T = self.n_intervals
        for gen in self.system.generators:
            mode, pattern = modes[gen.id]
            init = self.init[gen.id]
            u0 = 1 if init.committed else 0
            force_on = force_off = 0
            if gen.id in min_updown_for:
                if init.committed and init.up_time < gen.min_up:
                    force_on = gen.min_up - init.up_time
                if not init.committed and init.down_time < gen.min_down:
                    force_off = gen.min_down - init.down_time
            for t in range(T):
                lb, ub = 0.0, 1.0
                if mode == FIXED:
                    lb = ub = float(round(float(pattern[t])))
                elif mode == AT_LEAST:
                    lb = float(round(float(pattern[t])))
                if t < force_on:
                    lb = 1.0
                if t < force_off:
                    ub = 0.0
                if lb > ub:
                    raise ValueError(
                        f"generator {gen.id}: initial up/down state conflicts "
                        f"with its commitment pattern at interval {t}"
                    )
                ui = m.add_var(f"u[g{gen.id},t{t}]", BINARY, lb=lb, ub=ub)
                vi = m.add_var(f"v[g{gen.id},t{t}]", CONTINUOUS, 0.0, 1.0)
                wi = m.add_var(f"w[g{gen.id},t{t}]", CONTINUOUS, 0.0, 1.0)
                self._u[gen.id, t] = ui
                self._v[gen.id, t] = vi
                self._w[gen.id, t] = wi
                m.add_to_objective(ui, gen.no_load_cost)
                m.add_to_objective(vi, gen.startup_cost)
                m.add_to_objective(wi, gen.shutdown_cost)
                if t == 0:
                    m.add_constr(f"su_sd_link[g{gen.id},t0]",
                                 [(vi, 1.0), (wi, -1.0), (ui, -1.0)], EQ, -u0)
                    # startup only from off, shutdown only from on
                    m.add_constr(f"su_from_off[g{gen.id},t0]", [(vi, 1.0)], LE, 1.0 - u0)
                    m.add_constr(f"sd_from_on[g{gen.id},t0]", [(wi, 1.0)], LE, float(u0))
                else:
                    up = self._u[gen.id, t - 1]
                    m.add_constr(f"su_sd_link[g{gen.id},t{t}]",
                                 [(vi, 1.0), (wi, -1.0), (ui, -1.0), (up, 1.0)], EQ, 0.0)
                    m.add_constr(f"su_from_off[g{gen.id},t{t}]",
                                 [(vi, 1.0), (up, 1.0)], LE, 1.0)
                    m.add_constr(f"sd_from_on[g{gen.id},t{t}]",
                                 [(wi, 1.0), (up, -1.0)], LE, 0.0)
                m.add_constr(f"su_on[g{gen.id},t{t}]", [(vi, 1.0), (ui, -1.0)], LE, 0.0)
                m.add_constr(f"su_sd_excl[g{gen.id},t{t}]",
                             [(vi, 1.0), (wi, 1.0)], LE, 1.0)
            if gen.id in min_updown_for:
                if gen.min_up > 1:
                    for t in range(T):
                        lo = max(0, t - gen.min_up + 1)
                        terms = [(self._v[gen.id, s], 1.0) for s in range(lo, t + 1)]
                        terms.append((self._u[gen.id, t], -1.0))
                        m.add_constr(f"min_up[g{gen.id},t{t}]", terms, LE, 0.0)
                if gen.min_down > 1:
                    for t in range(T):
                        lo = max(0, t - gen.min_down + 1)
                        terms = [(self._w[gen.id, s], 1.0) for s in range(lo, t + 1)]
                        terms.append((self._u[gen.id, t], 1.0))
                        m.add_constr(f"min_dn[g{gen.id},t{t}]", terms, LE, 1.0)

    # --------------------------------------------------------------- dispatch
    def add_dispatch(self) -> None:
        """Total power as minimum output plus cost blocks; block energy costs."""
        m = self.model
        for gen in self.system.generators:
            for t in range(self.n_intervals):
                pi = m.add_var(f"p[g{gen.id},t{t}]", CONTINUOUS, 0.0, gen.p_max)
                self._p[gen.id, t] = pi
                terms = [(pi, 1.0), (self._u[gen.id, t], -gen.p_min)]
                for e, (width, slope) in enumerate(gen.cost_blocks):
                    pei = m.add_var(f"pe[g{gen.id},t{t},e{e}]", CONTINUOUS, 0.0, width)
                    self._pe[gen.id, t, e] = pei
                    terms.append((pei, -1.0))
                    m.add_to_objective(pei, slope * self.interval_hours)
                    m.add_constr(
                        f"blk_ub[g{gen.id},t{t},e{e}]",
                        [(pei, 1.0), (self._u[gen.id, t], -width)], LE, 0.0,
                    )
                m.add_constr(f"pwr_def[g{gen.id},t{t}]", terms, EQ, 0.0)

    # ------------------------------------------------------------------ ramps
    def add_ramps(self, move_caps: dict[int, tuple[np.ndarray, np.ndarray]] | None = None
                  ) -> None:
        """Interval-to-interval ramp limits.

        By default the 15-min ramp rate (plus startup/shutdown allowances)
        bounds each move.  For generators listed in ``move_caps`` the standard
        rate is replaced by per-boundary upward/downward award caps: entry t
        limits the move from interval t-1 into t (index 0 uses the award held
        before the horizon).
        """
        m = self.model
        for gen in self.system.generators:
            caps = (move_caps or {}).get(gen.id)
            init = self.init[gen.id]
            u0 = 1 if init.committed else 0
            for t in range(self.n_intervals):
                up_rate = gen.ramp_15 if caps is None else float(caps[0][t])
                dn_rate = gen.ramp_15 if caps is None else float(caps[1][t])
                pi = self._p[gen.id, t]
                vi = self._v[gen.id, t]
                wi = self._w[gen.id, t]
                ui = self._u[gen.id, t]
                if t == 0:
                    # previous interval is the chained initial state
                    m.add_constr(
                        f"ramp_up[g{gen.id},t0]",
                        [(pi, 1.0), (vi, -gen.ramp_su)], LE,
                        init.power + up_rate * u0,
                    )
                    m.add_constr(
                        f"ramp_dn[g{gen.id},t0]",
                        [(pi, -1.0), (ui, -dn_rate), (wi, -gen.ramp_sd)], LE,
                        -init.power,
                    )
                else:
                    pp = self._p[gen.id, t - 1]
                    up = self._u[gen.id, t - 1]
                    m.add_constr(
                        f"ramp_up[g{gen.id},t{t}]",
                        [(pi, 1.0), (pp, -1.0), (up, -up_rate), (vi, -gen.ramp_su)],
                        LE, 0.0,
                    )
                    m.add_constr(
                        f"ramp_dn[g{gen.id},t{t}]",
                        [(pp, 1.0), (pi, -1.0), (ui, -dn_rate), (wi, -gen.ramp_sd)],
                        LE, 0.0,
                    )

    # ------------------------------------------------------------- glidepath
    def add_shutdown_glidepath(self, start: int, schedule, down_budget) -> None:
        """Level caps that keep scheduled shutdowns reachable beyond the horizon.

        A shutdown scheduled a few intervals past the rolling window is
        invisible to the model that ends up positioning the unit for it, so a
        unit could be left too high to descend to its shutdown allowance in
        time.  For every in-horizon interval of a unit that is scheduled off
        at some later interval s, cap its level at the shutdown allowance plus
        the total downward move budget available on the way there.

        ``schedule(gid, k)`` gives the unit's scheduled commitment at global
        interval k; ``down_budget(gid, k)`` the downward move allowed from
        interval k into k+1 (the ramp rate, or the held downward award).
        """
        for gen in self.system.generators:
            if gen.is_fast_start:
                continue
            for t in range(self.n_intervals):
                g_t = start + t
                if schedule(gen.id, g_t) != 1:
                    continue
                # earliest scheduled off interval from here (none past day end)
                s = next((k for k in range(g_t + 1, 96)
                          if schedule(gen.id, k) == 0), None)
                if s is None:
                    continue
                budget = sum(down_budget(gen.id, j) for j in range(g_t, s - 1))
                bound = gen.ramp_sd + budget
                if bound >= gen.p_max - 1e-9:
                    continue
                self.model.add_constr(
                    f"sd_glide[g{gen.id},t{t}]",
                    [(self._p[gen.id, t], 1.0)], LE, bound,
                )

    # ---------------------------------------------------------------- network
    def add_network(self, nodal_load: np.ndarray, nodal_solar: np.ndarray,
                    line_limits: bool = True) -> None:
        """Nodal injections, VOLL-priced system balance, and line limits.

        ``nodal_load`` and ``nodal_solar`` are (n_buses, n_intervals) MW.
        """
        m = self.model
        system = self.system
        gens_at: dict[int, list[int]] = {b.id: [] for b in system.buses}
        for gen in system.generators:
            gens_at[gen.bus].append(gen.id)
        penalty = self.voll * self.interval_hours
        for t in range(self.n_intervals):
            for bus in system.buses:
                ii = m.add_var(f"inj[n{bus.id},t{t}]", CONTINUOUS, -math.inf, math.inf)
                self._inj[bus.id, t] = ii
                terms = [(ii, 1.0)]
                terms.extend((self._p[g, t], -1.0) for g in gens_at[bus.id])
                m.add_constr(
                    f"inj_def[n{bus.id},t{t}]", terms, EQ,
                    float(nodal_solar[bus.id, t] - nodal_load[bus.id, t]),
                )
            shorti = m.add_var(f"sl_short[t{t}]", CONTINUOUS, 0.0, math.inf)
            surpi = m.add_var(f"sl_surp[t{t}]", CONTINUOUS, 0.0, math.inf)
            self._sl_short[t] = shorti
            self._sl_surp[t] = surpi
            m.add_to_objective(shorti, penalty)
            m.add_to_objective(surpi, penalty)
            terms = [(self._inj[b.id, t], 1.0) for b in system.buses]
            terms += [(shorti, 1.0), (surpi, -1.0)]
            m.add_constr(f"sys_bal[t{t}]", terms, EQ, 0.0)

    def add_line_limits(self, ptdf: PtdfMatrix) -> None:
        m = self.model
        for k, line in enumerate(self.system.lines):
            row = ptdf.values[k]
            nz = [n for n in range(self.system.n_buses) if abs(row[n]) > LINE_COEF_EPS]
            if not nz:
                continue
            for t in range(self.n_intervals):
                terms = [(self._inj[n, t], float(row[n])) for n in nz]
                m.add_constr(f"line_ub[k{line.id},t{t}]", terms, LE, line.rating)
                m.add_constr(f"line_lb[k{line.id},t{t}]", terms, GE, -line.rating)

    # ------------------------------------------------------------ extraction
    def commitment_values(self, sol: MilpSolution, g: int) -> np.ndarray:
        return np.array([round(sol.value(self._u[g, t])) for t in range(self.n_intervals)])

    def dispatch_values(self, sol: MilpSolution, g: int) -> np.ndarray:
        return np.array([sol.value(self._p[g, t]) for t in range(self.n_intervals)])

    def base_flows(self, sol: MilpSolution, ptdf: PtdfMatrix) -> np.ndarray:
        """Pre-activation line flows per (line, interval)."""
        inj = np.array(
            [[sol.value(self._inj[b.id, t]) for t in range(self.n_intervals)]
             for b in self.system.buses]
        )
        return ptdf.values @ inj

    def interval_costs(self, sol: MilpSolution) -> tuple[np.ndarray, np.ndarray]:
        """Per-interval (commitment+energy cost, balance violation MW)."""
        T = self.n_intervals
        cost = np.zeros(T)
        viol = np.zeros(T)
        for gen in self.system.generators:
            for t in range(T):
                cost[t] += gen.no_load_cost * sol.value(self._u[gen.id, t])
                cost[t] += gen.startup_cost * sol.value(self._v[gen.id, t])
                cost[t] += gen.shutdown_cost * sol.value(self._w[gen.id, t])
                for e, (_, slope) in enumerate(gen.cost_blocks):
                    cost[t] += slope * self.interval_hours * sol.value(self._pe[gen.id, t, e])
        for t in range(T):
            # slack readings can carry ~1e-13 solver noise below zero
            viol[t] = (max(sol.value(self._sl_short[t]), 0.0)
                       + max(sol.value(self._sl_surp[t]), 0.0))
        return cost, viol
