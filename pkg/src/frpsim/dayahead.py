"""Hourly day-ahead unit commitment feeding must-run patterns to the FMMs.

The day-ahead market is the standard hourly commitment/dispatch problem over
the same network: every unit is freely committable, hourly ramping is four
15-min ramps, and the balance carries the usual VOLL slack.  Its commitment
schedule becomes the fixed pattern for must-run units (and the floor for
fast-start units) in every 15-min model of the day.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .milp import GE, MilpModel, MilpSolution, SolveOptions, solve
from .network import PowerSystem, PtdfMatrix
from .scenarios import HOURS_PER_DAY, ForecastProfile
from .ucbase import FREE, UcModelBuilder, UnitInit, cold_start_state


@dataclass(frozen=True)
class DaCommitments:
    """Hourly commitment schedule; dispatch is kept only for diagnostics."""

    u_hourly: dict[int, np.ndarray]        # gen id -> (24,) 0/1
    dispatch_hourly: dict[int, np.ndarray]  # gen id -> (24,) MW
    objective: float

    def commitment_at(self, gen_id: int, interval15: int) -> int:
        """Commitment of the hour containing a 15-min interval (edge padded)."""
        hour = min(max(interval15 // 4, 0), HOURS_PER_DAY - 1)
        return int(self.u_hourly[gen_id][hour])

    def dispatch_at(self, gen_id: int, interval15: int) -> float:
        hour = min(max(interval15 // 4, 0), HOURS_PER_DAY - 1)
        return float(self.dispatch_hourly[gen_id][hour])


def _hourly_view(system: PowerSystem) -> PowerSystem:
    """Rescale per-interval generator dynamics to hourly resolution.

    An hour is four 15-min moves, so the within-hour rate is 4x the 15-min
    rate and a unit starting (stopping) inside the hour can additionally
    traverse three rate steps beyond its startup (shutdown) allowance.  The
    committed-at-minimum cost is per 15-min interval in the data, hence 4x
    per hourly interval.
    """
    gens = tuple(
        replace(
            g,
            no_load_cost=4.0 * g.no_load_cost,
            ramp_15=4.0 * g.ramp_15,
            ramp_su=g.ramp_su + 3.0 * g.ramp_15,
            ramp_sd=g.ramp_sd + 3.0 * g.ramp_15,
            min_up=max(1, math.ceil(g.min_up / 4)),
            min_down=max(1, math.ceil(g.min_down / 4)),
        )
        for g in system.generators
    )
    return replace(system, generators=gens)


@dataclass
class DaModelHandle:
    model: MilpModel
    builder: UcModelBuilder
    hourly_system: PowerSystem


def build_da_model(system: PowerSystem, ptdf: PtdfMatrix, profile: ForecastProfile,
                   init: dict[int, UnitInit] | None = None, voll: float = 10000.0,
                   reserve_requirement: np.ndarray | None = None) -> DaModelHandle:
    """Hourly commitment model over the forecast day.

    ``reserve_requirement`` optionally adds a system-wide spinning headroom
    row per hour (off by default; not part of the core comparison).
    """
    hourly = _hourly_view(system)
    init = init or cold_start_state(hourly)
    builder = UcModelBuilder(hourly, HOURS_PER_DAY, 1.0, init, voll=voll, name="da")
    modes = {g.id: (FREE, None) for g in hourly.generators}
    builder.add_commitment(modes, min_updown_for={g.id for g in hourly.generators})
    builder.add_dispatch()
    builder.add_ramps()
    loads = system.nodal_loads(profile.hourly_load)
    solar = np.zeros((system.n_buses, HOURS_PER_DAY))
    for u_idx, unit in enumerate(system.solar_units):
        solar[unit.bus] += profile.solar_hourly[u_idx]
    builder.add_network(loads, solar)
    builder.add_line_limits(ptdf)
    if reserve_requirement is not None:
        for h in range(HOURS_PER_DAY):
            terms = []
            for gen in hourly.generators:
                terms.append((builder.u(gen.id, h), gen.p_max))
                terms.append((builder.p(gen.id, h), -1.0))
            builder.model.add_constr(
                f"spin_reserve[t{h}]", terms, GE, float(reserve_requirement[h])
            )
    return DaModelHandle(model=builder.model, builder=builder, hourly_system=hourly)


def run_da(system: PowerSystem, ptdf: PtdfMatrix, profile: ForecastProfile,
           options: SolveOptions | None = None, voll: float = 10000.0,
           reserve_requirement: np.ndarray | None = None
           ) -> tuple[DaCommitments, MilpSolution, DaModelHandle]:
    """Solve the day-ahead market and extract the commitment schedule."""
    handle = build_da_model(system, ptdf, profile, voll=voll,
                            reserve_requirement=reserve_requirement)
    sol = solve(handle.model, options)
    if sol.status != "optimal":
        raise RuntimeError(f"day-ahead solve failed: {sol.status} ({sol.message})")
    u_hourly = {g.id: handle.builder.commitment_values(sol, g.id)
                for g in system.generators}
    dispatch = {g.id: handle.builder.dispatch_values(sol, g.id)
                for g in system.generators}
    return (
        DaCommitments(u_hourly=u_hourly, dispatch_hourly=dispatch,
                      objective=sol.objective),
        sol,
        handle,
    )


def initial_state_from_da(system: PowerSystem, da: DaCommitments) -> dict[int, UnitInit]:
    """Day-start unit state: every unit sits at its hour-0 day-ahead schedule."""
    state = {}
    for gen in system.generators:
        on = da.commitment_at(gen.id, 0) == 1
        state[gen.id] = UnitInit(
            committed=on,
            power=da.dispatch_at(gen.id, 0) if on else 0.0,
        )
    return state


# ----------------------------------------------------------------- persist

def write_commitments_csv(da: DaCommitments, path) -> None:
    # full-precision dispatch so downstream stages reproduce exactly from disk
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generator", "hour", "u", "dispatch_mw"])
        for gen_id in sorted(da.u_hourly):
            for h in range(HOURS_PER_DAY):
                writer.writerow([
                    gen_id, h, int(da.u_hourly[gen_id][h]),
                    repr(float(da.dispatch_hourly[gen_id][h])),
                ])


def read_commitments_csv(path) -> DaCommitments:
    u: dict[int, list[float]] = {}
    p: dict[int, list[float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            gen_id = int(row["generator"])
            u.setdefault(gen_id, [0.0] * HOURS_PER_DAY)[int(row["hour"])] = float(row["u"])
            p.setdefault(gen_id, [0.0] * HOURS_PER_DAY)[int(row["hour"])] = float(
                row["dispatch_mw"]
            )
    return DaCommitments(
        u_hourly={g: np.asarray(vals) for g, vals in u.items()},
        dispatch_hourly={g: np.asarray(vals) for g, vals in p.items()},
        objective=float("nan"),
    )
