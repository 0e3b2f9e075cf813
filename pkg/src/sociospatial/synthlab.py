"""Synthetic data generation with planted parameters, plus brute-force oracles.

The generator substitutes for restricted mortality microdata: it draws a
geography, a distance-decaying connectedness network, covariates with
region-level persistence, a staggered policy adoption schedule, and an outcome
built as a planted linear combination of standardized exposures, fixed
effects, and Gaussian noise. Exposure regressors are exogenous by
construction: they are computed from a latent base mortality field, not from
the final outcome, so there is no within-period feedback and the planted
coefficients are recoverable.

Everything is a pure function of (config, seed) through numpy's PCG64
generator. The in-memory panel keeps the exact real-valued outcome as its
rate; integer death counts are rounded from it and used when the bundle is
written to disk (file-backed rates are therefore quantized at 1e5/population).

``brute_force_exposures`` is an independent naive-enumeration oracle for the
exposure module: plain Python loops, its own distance formula, no shared
computation code. Test use only, capped at 12 regions.
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np
import pandas as pd

from .coredata import (
    AgeCountsTable,
    AgeStratifiedCounts,
    DEFAULT_COVARIATES,
    ELECTION_YEARS,
    ElectionTable,
    Geography,
    N_AGE_GROUPS,
    PanelDataset,
    PolicyTable,
    RATE_SCALE,
    SocialNetwork,
    StandardPopulation,
    carry_forward_political,
    state_of,
    write_age_counts,
    write_elections,
    write_geography,
    write_panel,
    write_policy,
    write_sci,
    write_standard_population,
)
from .errors import ConfigError, OracleScaleExceededError
from .exposure import (
    ExposureSeries,
    deaths_in_social_proximity,
    deaths_in_spatial_proximity,
    erpo_social_exposure,
    erpo_spatial_exposure,
    social_weight_matrix,
    zscore,
)
from .geo import DistanceMatrix

ORACLE_MAX_REGIONS = 12

#: 2000 US Standard Population (standard million) over the 18 five-year age
#: groups 0-4 ... 85+; shipped as the reference weight file with fixtures.
STANDARD_POPULATION_2000 = (
    69135, 72533, 73032, 72169, 66478, 64529, 71044, 80762, 81851,
    72118, 62716, 48454, 38793, 34264, 31773, 26999, 17842, 15508,
)

#: Planted effects of covariates on the outcome (z-scored columns marked).
_COVARIATE_EFFECTS = {
    "population_density": -1.0,   # per SD
    "median_household_income": -0.7,  # per SD
    "pct_hispanic": -0.04,
    "pct_asian": -0.02,
    "pct_unemployed": 0.02,
    "political_affiliation": 0.1,
}
_ZSCORED_COVARIATES = ("population_density", "median_household_income")

_RANDOM_SCHEDULE = re.compile(r"^random\((?P<p>[0-9.]+)\)$")


@dataclass(frozen=True)
class DgpConfig:
    """Data-generating process parameters; planted values are per 1 SD."""

    n_regions: int = 100
    n_states: int = 25
    n_years: int = 13
    seed: int = 20100
    true_zeta1: float = 3.0
    true_zeta2: float = 0.8
    true_psi: float = 0.0
    true_delta1: float = 0.0
    fe_region_sd: float = 2.0
    fe_year_sd: float = 1.0
    fe_state_year_sd: float = 0.0
    noise_sd: float = 1.0
    network_density: float = 1.0
    adoption_schedule: Mapping[str, int] | str | None = "random(0.4)"
    first_year: int = 2010
    base_rate: float = 16.0
    contagion_feedback: bool = False

    def __post_init__(self):
        if self.n_states < 2:
            raise ConfigError("need at least 2 states")
        if self.n_regions < self.n_states:
            raise ConfigError(
                f"n_regions ({self.n_regions}) must be >= n_states ({self.n_states})"
            )
        if self.n_years < 3:
            raise ConfigError("need at least 3 years")
        for name in ("fe_region_sd", "fe_year_sd", "fe_state_year_sd", "noise_sd"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if not 0.0 < self.network_density <= 1.0:
            raise ConfigError("network_density must lie in (0, 1]")
        if self.first_year < ELECTION_YEARS[0]:
            raise ConfigError(f"first_year must be >= {ELECTION_YEARS[0]}")
        if isinstance(self.adoption_schedule, str):
            if not _RANDOM_SCHEDULE.match(self.adoption_schedule):
                raise ConfigError(
                    "adoption_schedule string must look like 'random(0.5)'"
                )
        if self.contagion_feedback and abs(self.true_zeta1) + abs(self.true_zeta2) >= 1.0:
            raise ConfigError(
                "contagion feedback needs |true_zeta1| + |true_zeta2| < 1 "
                "(raw per-unit feedback strengths) for a stable fixed point"
            )

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(range(self.first_year, self.first_year + self.n_years))

    @classmethod
    def from_dict(cls, raw: Mapping) -> "DgpConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown DGP config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        out = asdict(self)
        if isinstance(out["adoption_schedule"], Mapping):
            out["adoption_schedule"] = dict(out["adoption_schedule"])
        return out


@dataclass(eq=False)
class SyntheticInputs:
    """Geography, network, and populations drawn for one replication."""

    network: SocialNetwork
    geography: Geography
    populations: dict[str, int]
    states: tuple[str, ...]


@dataclass(eq=False)
class SimulatedData:
    """Panel plus the exogenous exposure series and planted truths."""

    panel: PanelDataset
    exposures: dict[str, ExposureSeries]
    policy: PolicyTable
    elections: ElectionTable
    inputs: SyntheticInputs
    truths: dict[str, float]
    config: DgpConfig


def _region_codes(cfg: DgpConfig, state_ranks: np.ndarray) -> list[str]:
    counters = {s: 0 for s in range(cfg.n_states)}
    codes = []
    for s in state_ranks:
        counters[s] += 1
        codes.append(f"{s + 1:02d}{counters[s]:03d}")
    return codes


def generate_network(cfg: DgpConfig) -> SyntheticInputs:
    """Draw centroids, state assignment, populations, and the tie network.

    Connectedness decays stochastically with pairwise distance, so log ties
    correlate negatively with distance; states are longitude bands, which
    keeps them spatially coherent.
    """
    rng = np.random.default_rng([cfg.seed, 1])
    n = cfg.n_regions
    lats = rng.uniform(25.0, 48.0, n)
    lons = rng.uniform(-122.0, -70.0, n)

    rank = np.empty(n, dtype=int)
    rank[np.argsort(lons)] = np.arange(n)
    state_ranks = rank * cfg.n_states // n
    codes = _region_codes(cfg, state_ranks)

    populations = np.round(10.0 ** rng.uniform(3.6, 5.8, n)).astype(int)

    from .geo import pairwise_distances

    distances = pairwise_distances(lats, lons)
    noise = np.triu(rng.normal(0.0, 0.6, (n, n)), 1)
    log_sci = 2.0 - distances / 900.0 + noise + noise.T
    sci = np.exp(log_sci)
    np.fill_diagonal(sci, 0.0)

    if cfg.network_density < 1.0:
        keep = np.triu(rng.random((n, n)) < cfg.network_density, 1)
        keep = keep | keep.T
        sci = sci * keep
        for i in np.flatnonzero(sci.sum(axis=1) == 0):
            j = int(np.argmin(np.where(np.arange(n) == i, np.inf, distances[i])))
            value = math.exp(2.0 - distances[i, j] / 900.0)
            sci[i, j] = sci[j, i] = value

    order = np.argsort(codes)
    codes_sorted = tuple(np.asarray(codes)[order])
    network = SocialNetwork(codes_sorted, sci[np.ix_(order, order)])
    geography = Geography(
        {codes_sorted[k]: (float(lats[order][k]), float(lons[order][k])) for k in range(n)}
    )
    pops = {codes_sorted[k]: int(populations[order][k]) for k in range(n)}
    states = tuple(sorted({state_of(c) for c in codes_sorted}))
    return SyntheticInputs(network, geography, pops, states)


def _build_policy(cfg: DgpConfig, states: tuple[str, ...], rng) -> PolicyTable:
    schedule = cfg.adoption_schedule
    if schedule is None:
        return PolicyTable({})
    if isinstance(schedule, str):
        prob = float(_RANDOM_SCHEDULE.match(schedule).group("p"))
        years = cfg.years
        adoption = {}
        for state in states:
            if rng.random() < prob:
                adoption[state] = int(rng.integers(years[2], years[-1] + 1))
        return PolicyTable(adoption)
    unknown = set(schedule) - set(states)
    if unknown:
        raise ConfigError(f"adoption_schedule names unknown states {sorted(unknown)}")
    return PolicyTable({s: int(y) for s, y in schedule.items()})


def _draw_elections(cfg: DgpConfig, regions, rng) -> ElectionTable:
    last_year = cfg.years[-1]
    eyears = [y for y in ELECTION_YEARS if y <= last_year]
    returns: dict[tuple[str, int], int] = {}
    for region in regions:
        value = int(rng.random() < 0.5)
        for year in eyears:
            if year != eyears[0] and rng.random() < 0.15:
                value = 1 - value
            returns[(region, year)] = value
    return ElectionTable(returns)


def _draw_covariates(cfg: DgpConfig, regions, years, political, rng) -> dict[str, np.ndarray]:
    """Covariate grid (n, T) per name, persistent within region over time."""
    n, t = len(regions), len(years)

    def persistent(low, high, wiggle):
        base = rng.uniform(low, high, n)
        series = base[:, None] + rng.normal(0.0, wiggle, (n, t))
        return np.clip(series, low, high)

    grid = {
        "population_density": np.exp(rng.uniform(1.0, 7.5, n))[:, None]
        * np.exp(rng.normal(0.0, 0.02, (n, t))),
        "pct_age_0_17": persistent(15.0, 30.0, 0.4),
        "pct_age_18_44": persistent(25.0, 45.0, 0.5),
        "pct_age_45_64": persistent(20.0, 35.0, 0.4),
        "pct_asian": persistent(0.0, 15.0, 0.2),
        "pct_black": persistent(0.0, 40.0, 0.3),
        "pct_other": persistent(0.0, 10.0, 0.2),
        "pct_hispanic": persistent(0.0, 50.0, 0.3),
        "median_household_income": rng.uniform(35_000.0, 90_000.0, n)[:, None]
        + np.cumsum(rng.normal(600.0, 300.0, (n, t)), axis=1),
        "pct_limited_english": persistent(0.0, 12.0, 0.15),
        "pct_unemployed": persistent(2.0, 12.0, 0.3),
        "pct_less_than_hs": persistent(5.0, 30.0, 0.3),
        "political_affiliation": np.array(
            [[float(political[(r, y)]) for y in years] for r in regions]
        ),
    }
    return grid


def simulate_panel(cfg: DgpConfig, inputs: SyntheticInputs) -> SimulatedData:
    """Generate the panel with a planted linear outcome structure.

    The outcome is base_rate + zeta1*z(social) + zeta2*z(spatial) + psi*policy
    + delta1*z(policy social exposure) + covariate effects + region/year/
    state-year effects + noise. Exposures are computed from a latent base
    mortality field and returned alongside the panel for estimation.
    """
    rng = np.random.default_rng([cfg.seed, 2])
    regions = inputs.network.region_index
    years = cfg.years
    n, t = len(regions), len(years)

    policy = _build_policy(cfg, inputs.states, rng)
    elections = _draw_elections(cfg, regions, rng)
    political = carry_forward_political(elections, years)
    covariates = _draw_covariates(cfg, regions, years, political, rng)

    # latent base mortality field feeding the proximity exposures
    base = (
        cfg.base_rate
        + rng.normal(0.0, 3.0, n)[:, None]
        + rng.normal(0.0, 1.0, t)[None, :]
        + rng.normal(0.0, 2.0, (n, t))
    )
    base = np.clip(base, 0.5, None)

    base_frame = pd.DataFrame(
        {
            "region": np.repeat(regions, t),
            "year": np.tile(years, n),
            "deaths": 0,
            "population": [inputs.populations[r] for r in np.repeat(regions, t)],
            "erpo_active": 0,
            "crude_rate": base.ravel(),
        }
    )
    base_panel = PanelDataset(base_frame, ())
    dm = DistanceMatrix.from_geography(inputs.geography, regions)

    policy_exposures = {
        "erpo_social_exposure": erpo_social_exposure(
            inputs.network, policy, regions, years
        ),
        "erpo_spatial_exposure": erpo_spatial_exposure(dm, policy, regions, years),
    }

    erpo_active = np.array(
        [[float(policy.indicator(state_of(r), y)) for y in years] for r in regions]
    )

    # everything except the proximity terms
    rest = np.full((n, t), float(cfg.base_rate))
    if cfg.true_psi != 0.0:
        rest += cfg.true_psi * erpo_active
    if cfg.true_delta1 != 0.0:
        rest += cfg.true_delta1 * zscore(policy_exposures["erpo_social_exposure"].matrix)[0]
    for name, effect in _COVARIATE_EFFECTS.items():
        column = covariates[name]
        if name in _ZSCORED_COVARIATES:
            column = zscore(column)[0]
        rest += effect * column
    rest += rng.normal(0.0, cfg.fe_region_sd, n)[:, None]
    rest += rng.normal(0.0, cfg.fe_year_sd, t)[None, :]
    if cfg.fe_state_year_sd > 0:
        state_fx = rng.normal(0.0, cfg.fe_state_year_sd, (len(inputs.states), t))
        state_pos = {s: k for k, s in enumerate(inputs.states)}
        rows = np.array([state_pos[state_of(r)] for r in regions])
        rest += state_fx[rows, :]
    rest += rng.normal(0.0, cfg.noise_sd, (n, t))

    if cfg.contagion_feedback:
        # per-unit feedback through the realized outcome itself:
        # y_t solves (I - z1*W - z2*A) y_t = rest_t, year by year
        weights_social = social_weight_matrix(
            inputs.network, inputs.populations, regions
        )
        off = ~np.eye(n, dtype=bool)
        inv = np.zeros((n, n))
        inv[off] = 1.0 / dm.submatrix(regions)[off]
        weights_spatial = inv / inv.sum(axis=1, keepdims=True)
        system = (
            np.eye(n)
            - cfg.true_zeta1 * weights_social
            - cfg.true_zeta2 * weights_spatial
        )
        outcome = np.linalg.solve(system, rest)
    else:
        proximity = {
            "social_proximity": deaths_in_social_proximity(base_panel, inputs.network),
            "spatial_proximity": deaths_in_spatial_proximity(base_panel, dm),
        }
        outcome = (
            rest
            + cfg.true_zeta1 * zscore(proximity["social_proximity"].matrix)[0]
            + cfg.true_zeta2 * zscore(proximity["spatial_proximity"].matrix)[0]
        )

    pops = np.array([inputs.populations[r] for r in regions], dtype=float)
    deaths = np.maximum(0, np.round(outcome * pops[:, None] / RATE_SCALE)).astype(int)

    frame = pd.DataFrame(
        {
            "region": np.repeat(regions, t),
            "year": np.tile(years, n),
            "deaths": deaths.ravel(),
            "population": np.repeat(pops.astype(int), t),
            "crude_rate": outcome.ravel(),
            "erpo_active": erpo_active.astype(int).ravel(),
        }
    )
    for name in DEFAULT_COVARIATES:
        frame[name] = covariates[name].ravel()
    panel = PanelDataset(frame, DEFAULT_COVARIATES)

    if cfg.contagion_feedback:
        proximity = {
            "social_proximity": deaths_in_social_proximity(panel, inputs.network),
            "spatial_proximity": deaths_in_spatial_proximity(panel, dm),
        }
    exposures = {**proximity, **policy_exposures}

    truths = {
        "zeta1": cfg.true_zeta1,
        "zeta2": cfg.true_zeta2,
        "psi": cfg.true_psi,
        "delta1": cfg.true_delta1,
    }
    return SimulatedData(panel, exposures, policy, elections, inputs, truths, cfg)


def _split_age_counts(sim: SimulatedData) -> AgeCountsTable:
    """Distribute panel deaths and populations over the 18 age strata."""
    rng = np.random.default_rng([sim.config.seed, 3])
    std = np.asarray(STANDARD_POPULATION_2000, dtype=float)
    pop_profile = std / std.sum()
    # deaths skew toward middle/older ages relative to the population profile
    hazard = np.linspace(0.2, 2.2, N_AGE_GROUPS)
    death_profile = pop_profile * hazard
    death_profile /= death_profile.sum()

    cells = {}
    for row in sim.panel.frame.itertuples(index=False):
        deaths = rng.multinomial(int(row.deaths), death_profile)
        raw = pop_profile * int(row.population)
        pops = np.maximum(1, np.floor(raw).astype(np.int64))
        shortfall = int(row.population) - int(pops.sum())
        if shortfall > 0:
            order = np.argsort(raw - np.floor(raw))[::-1]
            for k in range(shortfall):
                pops[order[k % N_AGE_GROUPS]] += 1
        cells[(row.region, int(row.year))] = AgeStratifiedCounts(deaths, pops)
    return AgeCountsTable(cells)


BUNDLE_FILES = {
    "panel": "panel.csv",
    "sci": "sci.csv",
    "geography": "geography.csv",
    "policy": "policy.csv",
    "elections": "elections.csv",
    "age": "age_counts.csv",
    "standard_population": "standard_population.csv",
}


def write_bundle(sim: SimulatedData, out_dir: str, delimiter: str = ",") -> dict:
    """Write a complete input bundle in the standard file formats.

    Death counts are integers, so rates reloaded from the bundle are
    quantized at 1e5/population relative to the in-memory panel.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {key: os.path.join(out_dir, name) for key, name in BUNDLE_FILES.items()}
    write_panel(sim.panel, paths["panel"], delimiter)
    write_sci(sim.inputs.network, paths["sci"], delimiter)
    write_geography(sim.inputs.geography, paths["geography"], delimiter)
    write_policy(sim.policy, paths["policy"], delimiter)
    write_elections(sim.elections, paths["elections"], delimiter)
    write_age_counts(_split_age_counts(sim), paths["age"], delimiter)
    std = StandardPopulation(np.asarray(STANDARD_POPULATION_2000, dtype=float))
    write_standard_population(std, paths["standard_population"], delimiter)

    manifest = {
        "config": sim.config.to_dict(),
        "truths": sim.truths,
        "files": dict(BUNDLE_FILES),
        "n_regions": len(sim.panel.regions),
        "n_states": len(sim.inputs.states),
        "years": list(sim.panel.years),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# Brute-force oracle (test use only; no shared computation with exposure)
# ---------------------------------------------------------------------------

def _oracle_distance_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    h = (
        math.sin(0.5 * (lat2 - lat1)) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin(0.5 * (lon2 - lon1)) ** 2
    )
    return 2.0 * 6371.0088 * math.asin(min(1.0, math.sqrt(h)))


def brute_force_exposures(
    panel: PanelDataset,
    net: SocialNetwork,
    geo: Geography,
    policy: PolicyTable,
    include_self: bool = False,
    outcome: str = "crude",
) -> dict[str, dict[tuple[str, int], float]]:
    """Naive enumeration of all four exposure metrics, for oracle tests."""
    regions = panel.regions
    years = panel.years
    if len(regions) > ORACLE_MAX_REGIONS:
        raise OracleScaleExceededError(len(regions), ORACLE_MAX_REGIONS)

    column = "crude_rate" if outcome == "crude" else "age_adjusted_rate"
    rates: dict[tuple[str, int], float] = {}
    pops: dict[str, float] = {}
    first_year = years[0]
    for row in panel.frame.itertuples(index=False):
        rates[(row.region, int(row.year))] = float(getattr(row, column))
        if int(row.year) == first_year:
            pops[row.region] = float(row.population)

    social: dict[tuple[str, int], float] = {}
    spatial: dict[tuple[str, int], float] = {}
    pol_social: dict[tuple[str, int], float] = {}
    pol_spatial: dict[tuple[str, int], float] = {}

    for i in regions:
        alters = [j for j in regions if j != i]
        sci_mass = {j: pops[j] * net.lookup(i, j) for j in alters}
        inv_mass = {
            j: 1.0 / _oracle_distance_km(geo.latlon(i), geo.latlon(j)) for j in alters
        }
        sci_total = sum(net.lookup(i, j) for j in alters)
        if include_self:
            sci_total += net.lookup(i, i)
        for year in years:
            # deaths in proximity: weighted averages over non-missing alters
            for mass, out in ((sci_mass, social), (inv_mass, spatial)):
                numerator = 0.0
                denominator = 0.0
                for j in alters:
                    rate = rates[(j, year)]
                    if math.isnan(rate):
                        continue
                    numerator += mass[j] * rate
                    denominator += mass[j]
                out[(i, year)] = numerator / denominator
            # policy shares: out-of-state mass in active states
            soc_hit = 0.0
            spa_hit = 0.0
            for j in alters:
                if state_of(j) == state_of(i):
                    continue
                if not policy.indicator(state_of(j), year):
                    continue
                soc_hit += net.lookup(i, j)
                spa_hit += inv_mass[j]
            pol_social[(i, year)] = soc_hit / sci_total
            pol_spatial[(i, year)] = spa_hit / sum(inv_mass.values())

    return {
        "social_proximity": social,
        "spatial_proximity": spatial,
        "erpo_social_exposure": pol_social,
        "erpo_spatial_exposure": pol_spatial,
    }


def brute_force_standardize(
    values: dict[tuple[str, int], float]
) -> dict[tuple[str, int], float]:
    data = list(values.values())
    mean = sum(data) / len(data)
    var = sum((v - mean) ** 2 for v in data) / len(data)
    sd = math.sqrt(var)
    return {key: (v - mean) / sd for key, v in values.items()}


def brute_force_delta(
    values: dict[tuple[str, int], float], y0: int, y1: int
) -> dict[str, float]:
    z = brute_force_standardize(values)
    regions = sorted({region for region, _ in z})
    return {r: z[(r, y1)] - z[(r, y0)] for r in regions}
