"""Forecast profiles, Monte Carlo scenario sampling, and forecast envelopes.

Errors are independent truncated Gaussians per interval and per quantity with
standard deviation proportional to the forecast value.  The hourly fraction is
twice the 15-min fraction, so the sum of four independent 15-min errors has
the hourly spread.  Nodal loads are a fixed participation split of the system
load, so load errors are perfectly correlated across buses.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import norm, truncnorm

from .network import PowerSystem, SolarUnit

HOURS_PER_DAY = 24
INTERVALS_PER_DAY = 96

TRAINING = "training"
DEPLOYMENT = "deployment"
OUT_OF_SAMPLE = "out_of_sample"
_KINDS = {TRAINING: 1, DEPLOYMENT: 2, OUT_OF_SAMPLE: 3}


class ProfileError(ValueError):
    """Malformed profile file."""


def _clip_idx(t: int | np.ndarray, n: int):
    return np.clip(t, 0, n - 1)


@dataclass(frozen=True)
class ForecastProfile:
    """One day of hourly and 15-min system load and per-solar-unit output."""

    label: str
    hourly_load: np.ndarray          # (24,)
    load15: np.ndarray               # (96,)
    solar_hourly: np.ndarray         # (n_units, 24)
    solar15: np.ndarray              # (n_units, 96)

    @property
    def n_solar(self) -> int:
        return self.solar15.shape[0]

    def load_at(self, t) -> np.ndarray | float:
        """15-min system load, padded by edge replication beyond the day."""
        return self.load15[_clip_idx(t, INTERVALS_PER_DAY)]

    def solar_at(self, t) -> np.ndarray:
        """Per-unit 15-min solar output, edge padded."""
        return self.solar15[:, _clip_idx(t, INTERVALS_PER_DAY)]

    def total_solar_at(self, t):
        return self.solar15[:, _clip_idx(t, INTERVALS_PER_DAY)].sum(axis=0)

    def netload_at(self, t):
        return self.load_at(t) - self.total_solar_at(t)


@dataclass(frozen=True)
class UncertaintyConfig:
    """Forecast-error model: ~5% hourly spread, 95% envelopes, +-3 sigma truncation."""

    sigma_hourly_frac: float = 0.05
    confidence_z: float = 1.96
    truncation_sigmas: float = 3.0
    seed: int = 0

    @property
    def sigma_15min_frac(self) -> float:
        # hourly sigma is exactly twice the 15-min sigma
        return self.sigma_hourly_frac / 2.0

    def __post_init__(self):
        if self.confidence_z <= 0:
            raise ValueError("confidence_z must be positive")
        if self.sigma_hourly_frac < 0:
            raise ValueError("sigma_hourly_frac must be nonnegative")


@dataclass(frozen=True)
class Scenario:
    """One sampled (or quantile-placed) realization of the day.

    Nodal loads are not materialized: they are the fixed participation split
    of the system load, recovered through ``nodal_loads``.
    """

    kind: str
    system_load: np.ndarray    # (96,)
    solar: np.ndarray          # (n_units, 96)
    seed_info: str
    quantile_z: float | None = None  # deployment scenarios only

    def load_at(self, t):
        return self.system_load[_clip_idx(t, self.system_load.shape[0])]

    def solar_at(self, t):
        return self.solar[:, _clip_idx(t, self.solar.shape[1])]

    def total_solar_at(self, t):
        return self.solar_at(t).sum(axis=0)

    def netload_at(self, t):
        return self.load_at(t) - self.total_solar_at(t)

    def nodal_loads(self, system: PowerSystem, t) -> np.ndarray:
        return np.outer(system.load_participation, np.atleast_1d(self.load_at(t)))


@dataclass(frozen=True)
class ScenarioSet:
    kind: str
    scenarios: tuple[Scenario, ...]
    config: UncertaintyConfig
    base_seed: int

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __getitem__(self, i) -> Scenario:
        return self.scenarios[i]


@dataclass(frozen=True)
class ProxyEnvelope:
    """Confidence envelopes around the 15-min forecast used by the proxy policy."""

    load_min: np.ndarray   # (96,)
    load_max: np.ndarray
    solar_min: np.ndarray  # (n_units, 96)
    solar_max: np.ndarray

    def load_max_at(self, t):
        return self.load_max[_clip_idx(t, self.load_max.shape[0])]

    def load_min_at(self, t):
        return self.load_min[_clip_idx(t, self.load_min.shape[0])]

    def solar_min_at(self, t):
        return self.solar_min[:, _clip_idx(t, self.solar_min.shape[1])]

    def solar_max_at(self, t):
        return self.solar_max[:, _clip_idx(t, self.solar_max.shape[1])]


# ---------------------------------------------------------------------- load

def _read_profile_csv(path: Path, rows_expected: int) -> tuple[np.ndarray, np.ndarray]:
    if not path.exists():
        raise ProfileError(f"profile file not found: {path}")
    loads, solars = [], []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            try:
                loads.append(float(row["load_mw"]))
                solars.append(float(row["solar_total_mw"]))
            except (KeyError, ValueError) as exc:
                raise ProfileError(f"{path} row {i}: {exc}") from None
    if len(loads) != rows_expected:
        raise ProfileError(
            f"{path}: expected {rows_expected} rows, found {len(loads)}"
        )
    load = np.asarray(loads)
    solar = np.asarray(solars)
    if (load < 0).any():
        raise ProfileError(f"{path}: negative load")
    if (solar < 0).any():
        raise ProfileError(f"{path}: negative solar output")
    return load, solar


def load_profiles(path, solar_units: tuple[SolarUnit, ...]) -> ForecastProfile:
    """Load a profile directory containing ``hourly.csv`` and ``fifteen_min.csv``.

    Total solar output is disaggregated to units by their share of total;
    per-unit output must respect unit capacity.
    """
    path = Path(path)
    hourly_load, hourly_solar = _read_profile_csv(path / "hourly.csv", HOURS_PER_DAY)
    load15, solar15_total = _read_profile_csv(path / "fifteen_min.csv", INTERVALS_PER_DAY)
    shares = np.array([u.share_of_total for u in solar_units])
    caps = np.array([u.capacity for u in solar_units])
    solar_hourly = np.outer(shares, hourly_solar)
    solar15 = np.outer(shares, solar15_total)
    over = solar15 - caps[:, None]
    if solar_units and over.max(initial=-np.inf) > 1e-6:
        u, t = np.unravel_index(np.argmax(over), over.shape)
        raise ProfileError(
            f"solar unit {solar_units[u].id} forecast {solar15[u, t]:.3f} MW "
            f"exceeds capacity {caps[u]:.3f} MW at interval {t}"
        )
    return ForecastProfile(
        label=path.name,
        hourly_load=hourly_load,
        load15=load15,
        solar_hourly=solar_hourly,
        solar15=solar15,
    )


# -------------------------------------------------------------------- sample

def _truncated_normal(rng: np.random.Generator, shape, cutoff: float) -> np.ndarray:
    if cutoff <= 0:
        return np.zeros(shape)
    return truncnorm.rvs(-cutoff, cutoff, size=shape, random_state=rng)


def _scenario_seed(cfg: UncertaintyConfig, kind: str, index: int) -> np.random.Generator:
    # one independent, reproducible stream per scenario
    return np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(_KINDS[kind], index))
    )


def sample_scenarios(system: PowerSystem, profile: ForecastProfile,
                     cfg: UncertaintyConfig, count: int, kind: str) -> ScenarioSet:
    """Monte Carlo scenarios around the 15-min forecast.

    Each interval and quantity gets an independent truncated Gaussian error
    with sigma equal to ``sigma_15min_frac`` times the forecast value.  Solar
    is clamped to [0, capacity]; loads to nonnegative.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if kind not in _KINDS:
        raise ValueError(f"unknown scenario kind {kind!r}")
    frac = cfg.sigma_15min_frac
    caps = np.array([u.capacity for u in system.solar_units])
    scenarios = []
    for j in range(count):
        rng = _scenario_seed(cfg, kind, j)
        z_load = _truncated_normal(rng, INTERVALS_PER_DAY, cfg.truncation_sigmas)
        z_solar = _truncated_normal(
            rng, (profile.n_solar, INTERVALS_PER_DAY), cfg.truncation_sigmas
        )
        load = np.maximum(profile.load15 * (1.0 + frac * z_load), 0.0)
        solar = profile.solar15 * (1.0 + frac * z_solar)
        if len(caps):
            solar = np.clip(solar, 0.0, caps[:, None])
        scenarios.append(Scenario(
            kind=kind,
            system_load=load,
            solar=solar,
            seed_info=f"seed={cfg.seed} kind={kind} index={j}",
        ))
    return ScenarioSet(kind=kind, scenarios=tuple(scenarios), config=cfg,
                       base_seed=cfg.seed)


def select_deployment_scenarios(system: PowerSystem, profile: ForecastProfile,
                                cfg: UncertaintyConfig, count: int) -> ScenarioSet:
    """Deployment scenarios placed at symmetric Gaussian quantiles.

    Probability levels are equally spaced from (1-c)/2 to (1+c)/2 where c is
    the confidence level implied by ``confidence_z``, so count=2 yields the
    +-1.96 sigma envelope pair.  A positive quantile shifts load up and solar
    down (an upward netload scenario); a negative quantile mirrors it.
    """
    if count < 2:
        raise ValueError("need at least 2 deployment scenarios")
    frac = cfg.sigma_15min_frac
    caps = np.array([u.capacity for u in system.solar_units])
    p_outer = float(norm.cdf(cfg.confidence_z))
    levels = np.linspace(1.0 - p_outer, p_outer, count)
    zs = norm.ppf(levels)
    scenarios = []
    for j, z in enumerate(zs):
        load = np.maximum(profile.load15 * (1.0 + frac * z), 0.0)
        solar = profile.solar15 * (1.0 - frac * z)
        solar = np.maximum(solar, 0.0)
        if len(caps):
            solar = np.minimum(solar, caps[:, None])
        scenarios.append(Scenario(
            kind=DEPLOYMENT,
            system_load=load,
            solar=solar,
            seed_info=f"quantile z={z:+.6f}",
            quantile_z=float(z),
        ))
    return ScenarioSet(kind=DEPLOYMENT, scenarios=tuple(scenarios), config=cfg,
                       base_seed=cfg.seed)


def proxy_envelopes(profile: ForecastProfile, cfg: UncertaintyConfig,
                    solar_units: tuple[SolarUnit, ...]) -> ProxyEnvelope:
    """Confidence envelopes: forecast +- z * sigma, solar clamped to [0, capacity]."""
    z = cfg.confidence_z
    frac = cfg.sigma_15min_frac
    load_sigma = frac * profile.load15
    solar_sigma = frac * profile.solar15
    caps = np.array([u.capacity for u in solar_units])
    solar_max = profile.solar15 + z * solar_sigma
    if len(caps):
        solar_max = np.minimum(solar_max, caps[:, None])
    return ProxyEnvelope(
        load_min=np.maximum(profile.load15 - z * load_sigma, 0.0),
        load_max=profile.load15 + z * load_sigma,
        solar_min=np.maximum(profile.solar15 - z * solar_sigma, 0.0),
        solar_max=solar_max,
    )


# -------------------------------------------------------------------- persist

def write_scenarios_csv(scenario_set: ScenarioSet, path,
                        solar_units: tuple[SolarUnit, ...]) -> None:
    """Audit dump: one row per (scenario, interval, quantity)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "interval", "quantity", "value"])
        for sid, scn in enumerate(scenario_set):
            for t in range(scn.system_load.shape[0]):
                writer.writerow([sid, t, "load", f"{scn.system_load[t]:.6f}"])
                for u, unit in enumerate(solar_units):
                    writer.writerow(
                        [sid, t, f"solar_{unit.id}", f"{scn.solar[u, t]:.6f}"]
                    )
