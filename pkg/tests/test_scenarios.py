from __future__ import annotations

import csv

import numpy as np
import pytest
from scipy.stats import norm

from frpsim.network import SolarUnit
from frpsim.scenarios import (DEPLOYMENT, OUT_OF_SAMPLE, TRAINING, ProfileError,
                              UncertaintyConfig, load_profiles, proxy_envelopes,
                              sample_scenarios, select_deployment_scenarios,
                              write_scenarios_csv)
from util import bottleneck_system, make_profile


def write_profile_dir(tmp_path, load15, solar15, n_hourly=24, n_15=96):
    d = tmp_path / "prof"
    d.mkdir()
    hourly_load = np.asarray(load15).reshape(-1, 4).mean(axis=1)[:n_hourly]
    hourly_solar = np.asarray(solar15).reshape(-1, 4).mean(axis=1)[:n_hourly]
    with open(d / "hourly.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["interval_index", "load_mw", "solar_total_mw"])
        for h in range(n_hourly):
            w.writerow([h, hourly_load[h], hourly_solar[h]])
    with open(d / "fifteen_min.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["interval_index", "load_mw", "solar_total_mw"])
        for t in range(n_15):
            w.writerow([t, load15[t], solar15[t]])
    return d


class TestUncertaintyConfig:
    def test_sigma_scaling_identity(self):
        cfg = UncertaintyConfig(sigma_hourly_frac=0.05)
        assert cfg.sigma_15min_frac == 0.025
        assert cfg.sigma_hourly_frac == 2 * cfg.sigma_15min_frac

    def test_rejects_nonpositive_confidence(self):
        with pytest.raises(ValueError):
            UncertaintyConfig(confidence_z=0.0)


class TestLoadProfiles:
    def test_bundled_day1(self, data_dir, system118):
        prof = load_profiles(data_dir / "profiles" / "day1", system118.solar_units)
        assert prof.load15.shape == (96,)
        assert prof.hourly_load.shape == (24,)
        assert prof.solar15.shape == (3, 96)
        assert (prof.load15 > 0).all() and (prof.solar15 >= 0).all()
        # evening netload ramp-up is the defining shape feature
        netload = prof.load15 - prof.solar15.sum(axis=0)
        evening = slice(64, 80)  # 16:00 - 20:00
        assert np.diff(netload[evening]).mean() > 0

    def test_constant_load_zero_variability(self, tmp_path):
        d = write_profile_dir(tmp_path, np.full(96, 1000.0), np.zeros(96))
        prof = load_profiles(d, ())
        assert np.ptp(prof.load15) == 0.0

    def test_wrong_length_errors(self, tmp_path):
        d = write_profile_dir(tmp_path, np.full(96, 1000.0), np.zeros(96), n_15=95)
        with pytest.raises(ProfileError, match="expected 96 rows"):
            load_profiles(d, ())

    def test_negative_load_errors(self, tmp_path):
        load = np.full(96, 10.0)
        load[5] = -1.0
        d = write_profile_dir(tmp_path, load, np.zeros(96))
        with pytest.raises(ProfileError, match="negative load"):
            load_profiles(d, ())

    def test_solar_capacity_violation(self, tmp_path):
        d = write_profile_dir(tmp_path, np.full(96, 1000.0), np.full(96, 100.0))
        units = (SolarUnit(0, 0, 50.0, 1.0),)
        with pytest.raises(ProfileError, match="exceeds capacity"):
            load_profiles(d, units)


class TestSampleScenarios:
    def setup_method(self):
        self.system = bottleneck_system()
        self.profile = make_profile(np.full(96, 1000.0), np.full(96, 20.0))
        self.cfg = UncertaintyConfig(seed=11)

    def test_count_and_kind(self):
        out = sample_scenarios(self.system, self.profile, self.cfg, 7, TRAINING)
        assert len(out) == 7
        assert all(s.kind == TRAINING for s in out)

    def test_determinism_bitwise(self):
        a = sample_scenarios(self.system, self.profile, self.cfg, 4, OUT_OF_SAMPLE)
        b = sample_scenarios(self.system, self.profile, self.cfg, 4, OUT_OF_SAMPLE)
        for sa, sb in zip(a, b):
            np.testing.assert_array_equal(sa.system_load, sb.system_load)
            np.testing.assert_array_equal(sa.solar, sb.solar)

    def test_zero_sigma_equals_forecast(self):
        cfg = UncertaintyConfig(sigma_hourly_frac=0.0, seed=3)
        out = sample_scenarios(self.system, self.profile, cfg, 3, TRAINING)
        for s in out:
            np.testing.assert_array_equal(s.system_load, self.profile.load15)
            np.testing.assert_array_equal(s.solar, self.profile.solar15)

    def test_sampled_std_matches_configured_sigma(self):
        # 10000 draws of one interval with forecast 1000 MW and 2.5% 15-min sigma;
        # +-3 sigma truncation shrinks the std to ~0.973 of nominal, within band
        out = sample_scenarios(self.system, self.profile, self.cfg, 10_000, TRAINING)
        vals = np.array([s.system_load[50] for s in out])
        assert abs(vals.std() - 25.0) <= 0.05 * 25.0
        assert abs(vals.mean() - 1000.0) <= 1.0

    def test_truncation_bounds_hold(self):
        out = sample_scenarios(self.system, self.profile, self.cfg, 500, TRAINING)
        vals = np.stack([s.system_load for s in out])
        assert np.abs(vals - 1000.0).max() <= 3.0 * 25.0 + 1e-9

    def test_solar_clamped_to_capacity(self):
        profile = make_profile(np.full(96, 1000.0), np.full(96, 39.9))
        out = sample_scenarios(self.system, profile, self.cfg, 200, TRAINING)
        cap = self.system.solar_units[0].capacity
        for s in out:
            assert s.solar.max() <= cap + 1e-12
            assert s.solar.min() >= 0.0

    def test_nodal_loads_sum_to_system_load(self):
        out = sample_scenarios(self.system, self.profile, self.cfg, 3, TRAINING)
        scn = out[0]
        nodal = scn.nodal_loads(self.system, np.arange(96))
        np.testing.assert_allclose(nodal.sum(axis=0), scn.system_load, atol=1e-6)

    def test_aggregation_identity(self):
        # sum of four independent 15-min errors ~ the hourly (2x) spread
        out = sample_scenarios(self.system, self.profile, self.cfg, 10_000, TRAINING)
        hourly_err = np.array([
            (s.system_load[40:44] - 1000.0).sum() for s in out
        ])
        expected = 2.0 * 25.0
        assert abs(hourly_err.std() - expected) <= 0.05 * expected


class TestDeploymentScenarios:
    def setup_method(self):
        self.system = bottleneck_system()
        self.profile = make_profile(np.full(96, 1000.0), np.full(96, 20.0))
        self.cfg = UncertaintyConfig(seed=0)

    def test_two_scenarios_at_95_envelope(self):
        out = select_deployment_scenarios(self.system, self.profile, self.cfg, 2)
        assert len(out) == 2 and out.kind == DEPLOYMENT
        zs = sorted(s.quantile_z for s in out)
        assert zs[0] == pytest.approx(-1.96, abs=5e-3)
        assert zs[1] == pytest.approx(+1.96, abs=5e-3)
        up = out[int(np.argmax([s.quantile_z for s in out]))]
        np.testing.assert_allclose(
            up.system_load, self.profile.load15 * (1 + 0.025 * up.quantile_z)
        )
        # upward netload scenario: solar shifted down
        assert (up.solar <= self.profile.solar15 + 1e-12).all()

    def test_zero_sigma_scenarios_equal_forecast(self):
        cfg = UncertaintyConfig(sigma_hourly_frac=0.0)
        out = select_deployment_scenarios(self.system, self.profile, cfg, 2)
        for s in out:
            np.testing.assert_array_equal(s.system_load, self.profile.load15)

    def test_four_scenarios_equally_spaced_percentiles(self):
        out = select_deployment_scenarios(self.system, self.profile, self.cfg, 4)
        zs = np.array(sorted(s.quantile_z for s in out))
        p_outer = norm.cdf(1.96)
        expected = norm.ppf(np.linspace(1 - p_outer, p_outer, 4))
        np.testing.assert_allclose(zs, expected, atol=1e-9)
        assert zs[0] == pytest.approx(-1.96, abs=5e-3)
        assert np.allclose(zs, -zs[::-1], atol=1e-12)  # symmetric pairs

    def test_needs_at_least_two(self):
        with pytest.raises(ValueError):
            select_deployment_scenarios(self.system, self.profile, self.cfg, 1)


class TestProxyEnvelopes:
    def test_hand_computed_envelope(self):
        profile = make_profile(np.full(96, 1000.0), np.zeros(96))
        cfg = UncertaintyConfig(sigma_hourly_frac=0.05)
        env = proxy_envelopes(profile, cfg, ())
        assert env.load_max[0] == pytest.approx(1049.0, abs=1e-9)
        assert env.load_min[0] == pytest.approx(951.0, abs=1e-9)

    def test_zero_sigma_collapses(self):
        profile = make_profile(np.full(96, 1000.0), np.full(96, 10.0))
        cfg = UncertaintyConfig(sigma_hourly_frac=0.0)
        env = proxy_envelopes(profile, cfg, bottleneck_system().solar_units)
        np.testing.assert_array_equal(env.load_min, env.load_max)
        np.testing.assert_array_equal(env.solar_min, env.solar_max)

    def test_solar_lower_envelope_clamped_at_zero(self):
        profile = make_profile(np.full(96, 1000.0), np.full(96, 1.0))
        cfg = UncertaintyConfig(sigma_hourly_frac=4.0)  # huge sigma
        env = proxy_envelopes(profile, cfg, bottleneck_system().solar_units)
        assert (env.solar_min >= 0.0).all()
        assert (env.solar_min <= profile.solar15).all()

    def test_envelope_coverage_95pct(self):
        system = bottleneck_system()
        profile = make_profile(np.full(96, 1000.0), np.zeros(96))
        cfg = UncertaintyConfig(seed=5)
        env = proxy_envelopes(profile, cfg, system.solar_units)
        out = sample_scenarios(system, profile, cfg, 10_000, TRAINING)
        vals = np.array([s.system_load[10] for s in out])
        inside = np.mean((vals >= env.load_min[10]) & (vals <= env.load_max[10]))
        assert 0.93 <= inside <= 0.97


def test_write_scenarios_csv(tmp_path):
    system = bottleneck_system()
    profile = make_profile(np.full(96, 100.0), np.full(96, 5.0))
    out = sample_scenarios(system, profile, UncertaintyConfig(seed=1), 2, TRAINING)
    path = tmp_path / "scn.csv"
    write_scenarios_csv(out, path, system.solar_units)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 2 * 96 * 2  # (load + 1 solar unit) x intervals x scenarios
    assert {r["quantity"] for r in rows} == {"load", "solar_0"}
