from __future__ import annotations

import numpy as np
import pytest

from frpsim.dayahead import (DaCommitments, build_da_model, read_commitments_csv,
                             run_da, write_commitments_csv)
from frpsim.milp import SolveOptions, check_solution, solve
from frpsim.network import compute_ptdf
from util import duck_profile, make_gen, make_profile, single_bus_system


@pytest.fixture()
def flat_profile():
    return make_profile(np.full(96, 80.0), np.zeros(96))


class TestBuildAndRun:
    def test_single_generator_flat_load_committed_all_day(self, flat_profile):
        system = single_bus_system([make_gen(0, 0, 10.0, 120.0, 20.0, ramp=120.0)])
        ptdf = compute_ptdf(system)
        da, sol, handle = run_da(system, ptdf, flat_profile)
        assert (da.u_hourly[0] == 1).all()
        assert check_solution(handle.model, sol).ok

    def test_capacity_shortage_priced_at_voll(self):
        system = single_bus_system([make_gen(0, 0, 0.0, 50.0, 20.0, ramp=100.0)])
        ptdf = compute_ptdf(system)
        load = np.full(96, 40.0)
        load[72:76] = 90.0  # hour 18 exceeds capacity by 40 MW
        profile = make_profile(load, np.zeros(96))
        da, sol, handle = run_da(system, ptdf, profile)
        slack = sol.value(handle.builder.slack_short(18))
        assert slack == pytest.approx(40.0, abs=1e-4)
        # the shortage hour contributes VOLL x MW x 1 h
        assert sol.objective > 10000.0 * 39.0

    def test_expensive_unit_never_committed(self, flat_profile):
        system = single_bus_system([
            make_gen(0, 0, 10.0, 120.0, 20.0, ramp=120.0, startup=100.0),
            make_gen(1, 0, 5.0, 60.0, 70.0, ramp=60.0, startup=100.0),
        ])
        ptdf = compute_ptdf(system)
        da, sol, _ = run_da(system, ptdf, flat_profile)
        assert (da.u_hourly[0] == 1).all()
        assert (da.u_hourly[1] == 0).all()
        # lower bound: serving the whole day with the cheap unit alone
        floor = 24 * (80.0 - 10.0) * 20.0  # block energy above p_min
        assert sol.objective >= floor

    def test_zero_load_all_off(self):
        system = single_bus_system([make_gen(0, 0, 10.0, 120.0, 20.0)])
        ptdf = compute_ptdf(system)
        da, sol, _ = run_da(system, ptdf, make_profile(np.zeros(96), np.zeros(96)))
        assert (da.u_hourly[0] == 0).all()
        assert sol.objective == pytest.approx(0.0, abs=1e-6)

    def test_halving_load_never_commits_more(self):
        gens = [
            make_gen(0, 0, 20.0, 150.0, 22.0, ramp=150.0, startup=500.0),
            make_gen(1, 0, 10.0, 100.0, 35.0, ramp=100.0, startup=300.0),
            make_gen(2, 0, 5.0, 60.0, 55.0, ramp=60.0, startup=100.0),
        ]
        system = single_bus_system(gens)
        ptdf = compute_ptdf(system)
        profile = duck_profile(base=180.0, swing=60.0, solar_peak=0.0)
        da_full, _, _ = run_da(system, ptdf, profile)
        half = make_profile(profile.load15 * 0.5, np.zeros(96))
        da_half, _, _ = run_da(system, ptdf, half)
        full_hours = sum(int(da_full.u_hourly[g.id].sum()) for g in gens)
        half_hours = sum(int(da_half.u_hourly[g.id].sum()) for g in gens)
        assert half_hours <= full_hours

    def test_optional_reserve_requirement_row(self, flat_profile):
        system = single_bus_system([make_gen(0, 0, 10.0, 120.0, 20.0, ramp=120.0)])
        ptdf = compute_ptdf(system)
        handle = build_da_model(system, ptdf, flat_profile,
                                reserve_requirement=np.full(24, 20.0))
        sol = solve(handle.model)
        assert sol.status == "optimal"
        assert check_solution(handle.model, sol).ok
        # committed capacity must exceed dispatch by the requirement
        for h in (0, 12, 23):
            head = (120.0 * sol.value(handle.builder.u(0, h))
                    - sol.value(handle.builder.p(0, h)))
            assert head >= 20.0 - 1e-6


class TestCommitmentMapping:
    def test_fifteen_minute_intervals_inherit_hour(self):
        u = np.zeros(24)
        u[7] = 1
        da = DaCommitments(u_hourly={0: u}, dispatch_hourly={0: np.zeros(24)},
                           objective=0.0)
        assert [da.commitment_at(0, t) for t in (27, 28, 31, 32)] == [0, 1, 1, 0]

    def test_edge_padding_beyond_day(self):
        u = np.zeros(24)
        u[23] = 1
        da = DaCommitments(u_hourly={0: u}, dispatch_hourly={0: np.zeros(24)},
                           objective=0.0)
        assert da.commitment_at(0, 98) == 1

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        u = {0: (rng.random(24) > 0.5).astype(float), 1: np.ones(24)}
        p = {0: rng.uniform(0, 50, 24).round(4), 1: np.full(24, 7.5)}
        da = DaCommitments(u_hourly=u, dispatch_hourly=p, objective=1.0)
        path = tmp_path / "da.csv"
        write_commitments_csv(da, path)
        back = read_commitments_csv(path)
        for g in (0, 1):
            np.testing.assert_array_equal(back.u_hourly[g], u[g])
            np.testing.assert_allclose(back.dispatch_hourly[g], p[g], atol=1e-6)


@pytest.mark.slow
def test_bundled_118_bus_da_evening_peak(system118, data_dir):
    from frpsim.scenarios import load_profiles

    ptdf = compute_ptdf(system118)
    profile = load_profiles(data_dir / "profiles" / "day1", system118.solar_units)
    da, sol, handle = run_da(system118, ptdf, profile,
                             options=SolveOptions(mip_rel_gap=1e-3))
    assert check_solution(handle.model, sol).ok
    on_at = lambda h: sum(int(da.u_hourly[g.id][h]) for g in system118.generators)
    # evening netload peak needs additional units beyond the night trough
    assert on_at(19) > on_at(3)
    assert sol.value(handle.builder.slack_short(19)) == pytest.approx(0.0, abs=1e-6)
