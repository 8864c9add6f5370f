"""Generate the bundled 118-bus system file and the day-1 profile CSVs.

The network is a representative 118-bus grid: a meshed backbone with 186
lines, 51 generation resources (21 of them fast-start 50 MW units), three
bulk solar plants at buses named bus25/bus55/bus89 with 20/20/60 percent of
total solar, and 91 load buses.  Line ratings are sized from DC flows of a
few representative dispatch snapshots so that the grid is moderately but not
trivially constrained.  Everything is deterministic under the fixed seed.

Run from the repository root:  python3 scripts/make_data.py
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from frpsim.network import (PowerSystem, Bus, TransmissionLine,  # noqa: E402
                            GenerationResource, SolarUnit, compute_ptdf,
                            validate_system)

SEED = 118
N_BUSES = 118
N_LINES = 186
N_GENERATORS = 51
N_FAST_START = 21
N_LOAD_BUSES = 91
SOLAR_BUSES = {24: 0.20, 54: 0.20, 88: 0.60}  # bus25 / bus55 / bus89
SOLAR_CAPACITY = 1500.0

DATA_DIR = ROOT / "src" / "frpsim" / "data"


def build_topology(rng: np.random.Generator):
    lines = []
    # backbone ring keeps the grid connected
    for i in range(N_BUSES):
        lines.append((i, (i + 1) % N_BUSES, float(rng.uniform(0.02, 0.08))))
    # chords mesh the ring at mixed electrical distances
    seen = {tuple(sorted((a, b))) for a, b, _ in lines}
    while len(lines) < N_LINES:
        a = int(rng.integers(0, N_BUSES))
        span = int(rng.integers(3, 40))
        b = (a + span) % N_BUSES
        key = tuple(sorted((a, b)))
        if a == b or key in seen:
            continue
        seen.add(key)
        lines.append((a, b, float(rng.uniform(0.04, 0.25))))
    return lines


def build_generators(rng: np.random.Generator):
    """30 must-run units in three fleets plus 21 fast-start 50 MW units."""
    gens = []
    hub_buses = rng.choice(N_BUSES, size=30, replace=False)
    fleets = (
        # (count, pmax range, slope range, fixed $/15min, startup, min up/down h)
        (8, (280, 420), (17.0, 23.0), 20.0, 4000.0, 4),
        (12, (120, 260), (25.0, 34.0), 11.0, 1500.0, 2),
        (10, (60, 130), (36.0, 48.0), 6.0, 600.0, 1),
    )
    gid = 0
    for count, pmax_rng, slope_rng, fixed, startup, hours in fleets:
        for _ in range(count):
            pmax = float(np.round(rng.uniform(*pmax_rng), 1))
            pmin = float(np.round(pmax * rng.uniform(0.25, 0.45), 1))
            slope = float(np.round(rng.uniform(*slope_rng), 2))
            ramp = float(np.round(pmax * rng.uniform(0.10, 0.22), 1))
            span = pmax - pmin
            widths = np.round(np.array([0.5, 0.3, 0.2]) * span, 1)
            widths[-1] = np.round(span - widths[:-1].sum(), 1)
            blocks = [
                [float(widths[0]), slope],
                [float(widths[1]), float(np.round(slope * 1.15, 2))],
                [float(widths[2]), float(np.round(slope * 1.35, 2))],
            ]
            # committed-at-minimum cost per 15-min interval: fixed share
            # plus the energy content of running at p_min
            no_load = float(np.round(fixed + pmin * slope * 0.25, 2))
            # a shutdown can be invisible to the rolling 7-interval window
            # until 4 moves beforehand, so the shutdown allowance must be
            # reachable from any level within four ramp steps
            ramp_sd = max(pmin + 0.5 * ramp, pmax - 4.0 * ramp + 5.0)
            gens.append(dict(
                id=gid, bus=int(hub_buses[gid % len(hub_buses)]),
                p_min=pmin, p_max=pmax, cost_blocks=blocks,
                no_load_cost=no_load, startup_cost=startup,
                shutdown_cost=float(np.round(startup * 0.1, 1)),
                ramp_15=ramp,
                ramp_su=float(np.round(pmin + 0.5 * ramp, 1)),
                ramp_sd=float(np.round(ramp_sd, 1)),
                min_up=hours * 4, min_down=hours * 4,
                frp_up_cost=0.5, frp_down_cost=0.5,
                is_fast_start=False,
            ))
            gid += 1
    fs_buses = rng.choice(N_BUSES, size=N_FAST_START, replace=False)
    for k in range(N_FAST_START):
        slope = float(np.round(rng.uniform(60.0, 95.0), 2))
        pmin = float(np.round(rng.uniform(5.0, 12.0), 1))
        span = 50.0 - pmin
        w1 = float(np.round(span * 0.6, 1))
        blocks = [[w1, slope], [float(np.round(span - w1, 1)),
                                float(np.round(slope * 1.2, 2))]]
        gens.append(dict(
            id=gid, bus=int(fs_buses[k]), p_min=pmin, p_max=50.0,
            cost_blocks=blocks,
            no_load_cost=float(np.round(4.0 + pmin * slope * 0.25, 2)),
            startup_cost=float(np.round(rng.uniform(120.0, 320.0), 1)),
            shutdown_cost=20.0,
            ramp_15=50.0, ramp_su=50.0, ramp_sd=50.0,
            min_up=1, min_down=1,
            frp_up_cost=0.5, frp_down_cost=0.5,
            is_fast_start=True,
        ))
        gid += 1
    assert gid == N_GENERATORS
    return gens


def build_participation(rng: np.random.Generator):
    load_buses = sorted(rng.choice(N_BUSES, size=N_LOAD_BUSES, replace=False).tolist())
    weights = rng.uniform(0.3, 1.0, size=N_LOAD_BUSES)
    weights /= weights.sum()
    weights = np.round(weights, 10)
    weights[int(np.argmax(weights))] += 1.0 - weights.sum()  # absorb rounding
    return {str(b): float(w) for b, w in zip(load_buses, weights)}


def day1_curves():
    """Duck-curve day: morning rise, deep midday netload, steep evening ramp."""
    t = np.arange(96) / 4.0  # hours
    load = (
        3900.0
        + 500.0 * np.exp(-((t - 9.0) / 3.0) ** 2)
        + 950.0 * np.exp(-((t - 19.5) / 2.6) ** 2)
        - 550.0 * np.exp(-((t - 3.5) / 3.0) ** 2)
    )
    sun = np.clip(np.cos((t - 12.75) / 6.6 * np.pi / 1.0), 0.0, None)
    solar = SOLAR_CAPACITY * 0.88 * sun ** 1.4
    solar[t < 6.5] = 0.0
    solar[t > 19.0] = 0.0
    return np.round(load, 2), np.round(solar, 2)


def rating_snapshots(system_dict, load15, solar15, participation):
    """Size line ratings from DC flows of representative dispatch snapshots."""
    system = dict_to_system(system_dict, participation)
    ptdf = compute_ptdf(system)
    part = system.load_participation
    mr = [g for g in system.generators if not g.is_fast_start]
    mr_sorted = sorted(mr, key=lambda g: g.cost_blocks[0][1])
    picks = [int(np.argmax(load15 - solar15)),      # evening peak netload
             int(np.argmin(load15 - solar15)),      # midday solar trough
             int(np.argmax(load15)),                # raw peak
             int(np.argmin(load15))]                # night trough
    flows = []
    for t in picks:
        netload = load15[t] - solar15[t]
        committed, cap = [], 0.0
        for g in mr_sorted:
            committed.append(g)
            cap += g.p_max
            if cap >= netload * 1.15:
                break
        pmin_tot = sum(g.p_min for g in committed)
        frac = (netload - pmin_tot) / max(cap - pmin_tot, 1e-9)
        frac = min(max(frac, 0.0), 1.0)
        inj = -part * load15[t]
        for bus, share in SOLAR_BUSES.items():
            inj[bus] += share * solar15[t]
        for g in committed:
            inj[g.bus] += g.p_min + frac * (g.p_max - g.p_min)
        inj[system.slack_bus] -= inj.sum()
        flows.append(ptdf.values @ inj)
    worst = np.abs(np.array(flows)).max(axis=0)
    return np.maximum(np.round(worst * 1.3, 0), 60.0)


def dict_to_system(raw, participation):
    buses = tuple(Bus(i, f"bus{i + 1}") for i in range(N_BUSES))
    lines = tuple(
        TransmissionLine(i, a, b, x, rating=1e6)
        for i, (a, b, x) in enumerate(raw["lines"])
    )
    gens = tuple(
        GenerationResource(
            id=g["id"], bus=g["bus"], p_min=g["p_min"], p_max=g["p_max"],
            cost_blocks=tuple((w, s) for w, s in g["cost_blocks"]),
            no_load_cost=g["no_load_cost"], startup_cost=g["startup_cost"],
            shutdown_cost=g["shutdown_cost"], ramp_15=g["ramp_15"],
            ramp_su=g["ramp_su"], ramp_sd=g["ramp_sd"], min_up=g["min_up"],
            min_down=g["min_down"], is_fast_start=g["is_fast_start"],
        )
        for g in raw["generators"]
    )
    solar = tuple(
        SolarUnit(i, bus, SOLAR_CAPACITY * share, share)
        for i, (bus, share) in enumerate(sorted(SOLAR_BUSES.items()))
    )
    part = np.zeros(N_BUSES)
    for bus, w in participation.items():
        part[int(bus)] = w
    return PowerSystem(buses, lines, gens, solar, part, slack_bus=0,
                       name="ieee118-representative")


def main():
    rng = np.random.default_rng(SEED)
    lines = build_topology(rng)
    generators = build_generators(rng)
    participation = build_participation(rng)
    load15, solar15 = day1_curves()

    raw = {"lines": lines, "generators": generators}
    ratings = rating_snapshots(raw, load15, solar15, participation)

    doc = {
        "name": "ieee118-representative",
        "slack_bus": 0,
        "buses": [{"id": i, "name": f"bus{i + 1}"} for i in range(N_BUSES)],
        "lines": [
            {"id": i, "from_bus": a, "to_bus": b, "reactance": x,
             "rating": float(ratings[i])}
            for i, (a, b, x) in enumerate(lines)
        ],
        "generators": generators,
        "solar": [
            {"id": i, "bus": bus, "capacity": SOLAR_CAPACITY * share,
             "share_of_total": share}
            for i, (bus, share) in enumerate(sorted(SOLAR_BUSES.items()))
        ],
        "participation": participation,
    }
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    (DATA_DIR / "ieee118.json").write_text(json.dumps(doc, indent=1))

    from frpsim.network import load_system
    system = load_system(DATA_DIR / "ieee118.json")
    assert not validate_system(system)
    print(f"system: {len(system.buses)} buses, {len(system.lines)} lines, "
          f"{len(system.generators)} generators, {len(system.solar_units)} solar")
    total_r15 = sum(g.ramp_15 for g in system.must_run_generators())
    netload = load15 - solar15
    print(f"peak netload {netload.max():.0f} MW, worst 15-min move "
          f"{np.abs(np.diff(netload)).max():.0f} MW, MR ramp capability "
          f"{total_r15:.0f} MW/15min")

    prof_dir = DATA_DIR / "profiles" / "day1"
    prof_dir.mkdir(parents=True, exist_ok=True)
    with open(prof_dir / "fifteen_min.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["interval_index", "load_mw", "solar_total_mw"])
        for t in range(96):
            writer.writerow([t, f"{load15[t]:.2f}", f"{solar15[t]:.2f}"])
    hourly_load = load15.reshape(24, 4).mean(axis=1)
    hourly_solar = solar15.reshape(24, 4).mean(axis=1)
    with open(prof_dir / "hourly.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["interval_index", "load_mw", "solar_total_mw"])
        for h in range(24):
            writer.writerow([h, f"{hourly_load[h]:.2f}", f"{hourly_solar[h]:.2f}"])
    print(f"profiles written to {prof_dir}")


if __name__ == "__main__":
    main()
