"""Derived regressors: proximity-weighted outcomes and policy exposures.

Two weighting schemes are used throughout. Social weights scale each alter's
connectedness by its population and normalize over alters:

    w_ij = n_j * sci_ij / sum_{k != i} n_k * sci_ik

Spatial weights do the same with inverse great-circle distance:

    a_ij = (1/d_ij) / sum_{k != i} (1/d_ik)

"Deaths in proximity" series are the weighted averages of alter outcome rates
at the same year. Policy exposure series are the share of a region's tie mass
(connectedness or inverse distance) pointing at out-of-state regions whose
state has an active policy in that year; adoption is absorbing, so both are
nondecreasing in time.

All series are computed for every (region, year) in the panel. Standardization
is pooled over all region-years and uses the population (divide by N) standard
deviation convention.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Sequence

import numpy as np
import pandas as pd

from .coredata import PanelDataset, PolicyTable, SocialNetwork, state_of
from .errors import IsolatedRegionError, MissingColumnError, MissingYearError, ParseError, ZeroVarianceError
from .geo import DistanceMatrix

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ExposureSeries:
    """A named per-(region, year) value grid.

    ``center`` and ``scale`` record the transform applied when the series was
    standardized, so results can be reported back in natural units.
    """

    name: str
    regions: tuple[str, ...]
    years: tuple[int, ...]
    matrix: np.ndarray
    standardized: bool = False
    center: float | None = None
    scale: float | None = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        expected = (len(self.regions), len(self.years))
        if self.matrix.shape != expected:
            raise ValueError(f"matrix shape {self.matrix.shape} != {expected}")
        self._rpos = {code: k for k, code in enumerate(self.regions)}
        self._ypos = {year: k for k, year in enumerate(self.years)}

    def value(self, region: str, year: int) -> float:
        return float(self.matrix[self._rpos[region], self._ypos[year]])

    def items(self) -> Iterator[tuple[tuple[str, int], float]]:
        for a, region in enumerate(self.regions):
            for b, year in enumerate(self.years):
                yield (region, year), float(self.matrix[a, b])

    def aligned(self, regions: Sequence[str], years: Sequence[int]) -> np.ndarray:
        """Values for parallel arrays of row keys."""
        ridx = pd.Index(self.regions).get_indexer(regions)
        yidx = pd.Index(self.years).get_indexer(years)
        if (ridx < 0).any():
            missing = np.asarray(regions)[ridx < 0][0]
            raise KeyError(f"region {missing} not in series '{self.name}'")
        if (yidx < 0).any():
            raise MissingYearError(int(np.asarray(years)[yidx < 0][0]), self.name)
        return self.matrix[ridx, yidx]

    def to_frame(self) -> pd.DataFrame:
        n, t = self.matrix.shape
        return pd.DataFrame(
            {
                "fips": np.repeat(self.regions, t),
                "year": np.tile(self.years, n),
                "name": self.name,
                "value": self.matrix.ravel(),
                "standardized": int(self.standardized),
            }
        )


def zscore(values: np.ndarray, name: str = "") -> tuple[np.ndarray, float, float]:
    """Center/scale to mean zero, unit population SD; NaNs pass through."""
    values = np.asarray(values, dtype=float)
    mean = float(np.nanmean(values))
    sd = float(np.nanstd(values))  # population convention (divide by N)
    if not np.isfinite(sd) or sd == 0.0:
        raise ZeroVarianceError(name)
    return (values - mean) / sd, mean, sd


def standardize(series: ExposureSeries) -> ExposureSeries:
    """Pooled z-score over all region-years; records the transform."""
    z, mean, sd = zscore(series.matrix, series.name)
    return replace(series, matrix=z, standardized=True, center=mean, scale=sd)


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------

def social_weight_matrix(
    net: SocialNetwork,
    populations: Mapping[str, int],
    regions: Sequence[str],
) -> np.ndarray:
    """Row-normalized population-scaled connectedness over ``regions``.

    Row i holds w_ij for all alters j (self weight is zero). Raises for any
    region with no positive tie to the rest of the universe.
    """
    sci = net.off_diagonal(regions)
    pops = np.array([populations[r] for r in regions], dtype=float)
    if (pops <= 0).any():
        bad = regions[int(np.argmax(pops <= 0))]
        raise ValueError(f"region {bad}: population must be positive")
    mass = sci * pops[None, :]
    totals = mass.sum(axis=1)
    if (totals <= 0).any():
        raise IsolatedRegionError(regions[int(np.argmax(totals <= 0))])
    return mass / totals[:, None]


def social_weights(
    net: SocialNetwork,
    populations: Mapping[str, int],
    focal: str,
) -> dict[str, float]:
    """Social weights of ``focal`` toward every other region in the network."""
    regions = net.region_index
    i = net.index_of(focal)
    row = net.matrix[i].copy()
    row[i] = 0.0
    mass = row * np.array([populations[r] for r in regions], dtype=float)
    total = mass.sum()
    if total <= 0:
        raise IsolatedRegionError(focal)
    return {
        code: float(mass[k] / total) for k, code in enumerate(regions) if code != focal
    }


# ---------------------------------------------------------------------------
# Deaths in proximity
# ---------------------------------------------------------------------------

def _proximity_series(
    name: str,
    weights: np.ndarray,
    panel: PanelDataset,
    outcome: str,
) -> ExposureSeries:
    rates, finite = panel.rate_matrix(outcome)
    n, t = rates.shape
    if finite.all():
        values = weights @ rates
    else:
        values = np.empty((n, t))
        renormalized = 0
        for col in range(t):
            m = finite[:, col]
            if m.all():
                values[:, col] = weights @ rates[:, col]
                continue
            covered = weights[:, m].sum(axis=1)
            if (covered <= 0).any():
                bad = panel.regions[int(np.argmax(covered <= 0))]
                raise IsolatedRegionError(
                    bad, f"all positively-weighted alters suppressed in {panel.years[col]}"
                )
            values[:, col] = (weights[:, m] @ rates[m, col]) / covered
            renormalized += int(((weights[:, ~m] > 0).any(axis=1)).sum())
        logger.info(
            "%s: renormalized weights over non-suppressed alters for %d region-years",
            name,
            renormalized,
        )
    return ExposureSeries(name, panel.regions, panel.years, values)


def deaths_in_social_proximity(
    panel: PanelDataset,
    net: SocialNetwork,
    outcome: str = "crude",
    population_base: str = "first_year",
) -> ExposureSeries:
    """Connectedness-weighted average of alter outcome rates, per (region, year).

    Populations entering the weights are fixed at the first study year by
    default; ``population_base="annual"`` recomputes weights per year.
    """
    name = "social_proximity" if outcome == "crude" else "social_proximity_age_adjusted"
    if population_base == "first_year":
        weights = social_weight_matrix(net, panel.population_map(), panel.regions)
        return _proximity_series(name, weights, panel, outcome)
    if population_base != "annual":
        raise ValueError(f"unknown population base '{population_base}'")
    rates, finite = panel.rate_matrix(outcome)
    columns = []
    for col, year in enumerate(panel.years):
        weights = social_weight_matrix(net, panel.population_map(year), panel.regions)
        sub = PanelDataset(
            panel.frame[panel.frame["year"] == year], panel.covariates
        )
        columns.append(_proximity_series(name, weights, sub, outcome).matrix[:, 0])
    return ExposureSeries(name, panel.regions, panel.years, np.column_stack(columns))


def deaths_in_spatial_proximity(
    panel: PanelDataset,
    dm: DistanceMatrix,
    outcome: str = "crude",
) -> ExposureSeries:
    """Inverse-distance-weighted average of alter outcome rates."""
    name = "spatial_proximity" if outcome == "crude" else "spatial_proximity_age_adjusted"
    distances = dm.submatrix(panel.regions)
    n = len(panel.regions)
    off = ~np.eye(n, dtype=bool)
    inv = np.zeros((n, n))
    inv[off] = 1.0 / distances[off]
    weights = inv / inv.sum(axis=1, keepdims=True)
    return _proximity_series(name, weights, panel, outcome)


# ---------------------------------------------------------------------------
# Policy exposures
# ---------------------------------------------------------------------------

def _state_structure(regions: Sequence[str]) -> tuple[list[str], np.ndarray, np.ndarray]:
    states = sorted({state_of(r) for r in regions})
    spos = {s: k for k, s in enumerate(states)}
    codes = np.array([spos[state_of(r)] for r in regions])
    indicator = np.zeros((len(regions), len(states)))
    indicator[np.arange(len(regions)), codes] = 1.0
    return states, codes, indicator


def _policy_share(
    name: str,
    mass: np.ndarray,
    denom: np.ndarray,
    regions: Sequence[str],
    years: Sequence[int],
    policy: PolicyTable,
) -> ExposureSeries:
    """Share of tie mass pointing at out-of-state regions with active policy.

    ``mass`` has a zero diagonal; ``denom`` is the per-row normalizer.
    """
    states, codes, indicator = _state_structure(regions)
    per_state = mass @ indicator  # (n, n_states): mass from i into each state
    # numerator sums only over out-of-state alters: drop each row's own state
    per_state[np.arange(len(regions)), codes] = 0.0
    active = np.array(
        [[float(policy.indicator(s, y)) for y in years] for s in states]
    )
    values = (per_state @ active) / denom[:, None]
    return ExposureSeries(name, tuple(regions), tuple(int(y) for y in years), values)


def erpo_social_exposure(
    net: SocialNetwork,
    policy: PolicyTable,
    regions: Sequence[str],
    years: Sequence[int],
    include_self: bool = False,
) -> ExposureSeries:
    """Share of connectedness pointing at regions in policy-active states.

    The denominator sums connectedness over all other regions (in-state and
    out-of-state); ``include_self=True`` additionally counts any self-pair,
    exposed for sensitivity runs.
    """
    regions = tuple(sorted(regions))
    sci = net.off_diagonal(regions)
    denom = sci.sum(axis=1)
    if include_self:
        idx = np.array([net.index_of(r) for r in regions])
        denom = denom + net.matrix[idx, idx]
    if (denom <= 0).any():
        raise IsolatedRegionError(regions[int(np.argmax(denom <= 0))])
    return _policy_share("erpo_social_exposure", sci, denom, regions, years, policy)


def erpo_spatial_exposure(
    dm: DistanceMatrix,
    policy: PolicyTable,
    regions: Sequence[str],
    years: Sequence[int],
) -> ExposureSeries:
    """Share of inverse-distance mass pointing at policy-active states.

    The denominator sums 1/d over all other regions regardless of state.
    """
    regions = tuple(sorted(regions))
    distances = dm.submatrix(regions)
    n = len(regions)
    off = ~np.eye(n, dtype=bool)
    inv = np.zeros((n, n))
    inv[off] = 1.0 / distances[off]
    denom = inv.sum(axis=1)
    return _policy_share("erpo_spatial_exposure", inv, denom, regions, years, policy)


def exposure_delta(series: ExposureSeries, y0: int, y1: int) -> dict[str, float]:
    """Per-region change between two years of a standardized series."""
    if not series.standardized:
        raise ValueError(f"series '{series.name}' must be standardized before deltas")
    for year in (y0, y1):
        if year not in series.years:
            raise MissingYearError(year, series.name)
    a = series.years.index(y0)
    b = series.years.index(y1)
    diff = series.matrix[:, b] - series.matrix[:, a]
    return {region: float(diff[k]) for k, region in enumerate(series.regions)}


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def write_exposure(series: ExposureSeries, path: str, delimiter: str = ",") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["fips", "year", "name", "value", "standardized_flag"])
        flag = int(series.standardized)
        for a, region in enumerate(series.regions):
            for b, year in enumerate(series.years):
                writer.writerow(
                    [region, year, series.name, repr(float(series.matrix[a, b])), flag]
                )


def load_exposure(path: str, delimiter: str = ",") -> ExposureSeries:
    frame = pd.read_csv(
        path, delimiter=delimiter, dtype={"fips": str}, float_precision="round_trip"
    )
    for column in ("fips", "year", "name", "value", "standardized_flag"):
        if column not in frame.columns:
            raise MissingColumnError(path, column)
    names = frame["name"].unique()
    if len(names) != 1:
        raise ParseError(0, "name", f"{path}: expected a single series, got {list(names)}")
    regions = tuple(sorted(frame["fips"].unique()))
    years = tuple(int(y) for y in sorted(frame["year"].unique()))
    pivot = frame.pivot(index="fips", columns="year", values="value")
    matrix = pivot.loc[list(regions), list(years)].to_numpy(dtype=float)
    return ExposureSeries(
        str(names[0]),
        regions,
        years,
        matrix,
        standardized=bool(frame["standardized_flag"].iloc[0]),
    )


def write_delta(delta: Mapping[str, float], path: str, delimiter: str = ",") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["fips", "delta"])
        for region in sorted(delta):
            writer.writerow([region, repr(float(delta[region]))])
