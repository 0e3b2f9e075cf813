"""Canonical data model and ingestion for all input tables.

Input files are delimited text tables with a required header row (comma by
default). Loaders validate aggressively: in strict mode the first defect
raises, otherwise defective rows are dropped, logged, and reported through the
returned object's ``dropped`` records.

Region identifiers are 5-digit zero-padded numeric strings; the first two
digits identify the parent state.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import (
    AsymmetricPairError,
    CoincidentCentroidError,
    DuplicateKeyError,
    MissingColumnError,
    NonpositiveSciError,
    NoPriorElectionError,
    ParseError,
    UnbalancedRegionError,
    ZeroPopulationError,
)

logger = logging.getLogger(__name__)

ELECTION_YEARS = (2008, 2012, 2016, 2020)

RATE_SCALE = 100_000.0

#: Canonical covariate names, in the order they appear in reports.
DEFAULT_COVARIATES = (
    "population_density",
    "pct_age_0_17",
    "pct_age_18_44",
    "pct_age_45_64",
    "pct_asian",
    "pct_black",
    "pct_other",
    "pct_hispanic",
    "median_household_income",
    "pct_limited_english",
    "pct_unemployed",
    "pct_less_than_hs",
    "political_affiliation",
)

N_AGE_GROUPS = 18
AGE_GROUP_LABELS = tuple(
    f"{5 * a}-{5 * a + 4}" for a in range(N_AGE_GROUPS - 1)
) + ("85+",)


def is_region_code(code: str) -> bool:
    """True for a 5-character, all-digit region identifier."""
    return len(code) == 5 and code.isascii() and code.isdigit()


def state_of(code: str) -> str:
    """State identifier embedded in a region code (its first two digits)."""
    return code[:2]


def crude_rate(deaths: int, population: int) -> float:
    """Deaths per 100,000 persons."""
    if population <= 0:
        raise ZeroPopulationError(f"population must be positive, got {population}")
    if deaths < 0:
        raise ValueError(f"deaths must be nonnegative, got {deaths}")
    return RATE_SCALE * deaths / population


@dataclass(frozen=True)
class DropRecord:
    """A row or region removed during validation."""

    row: int  # 1-based line number in the source file; 0 for post-load checks
    key: str
    reason: str


# ---------------------------------------------------------------------------
# Social network
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SocialNetwork:
    """Symmetric county-pair connectedness, dense over the region index.

    Absent pairs are exact zeros. Self-pairs may carry values from the input
    but are never used by exposure computations.
    """

    region_index: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        n = len(self.region_index)
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (n, n):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match {n} regions"
            )
        self._pos = {code: k for k, code in enumerate(self.region_index)}

    @classmethod
    def from_entries(
        cls,
        entries: Mapping[tuple[str, str], float],
        regions: Iterable[str] | None = None,
    ) -> "SocialNetwork":
        """Build from ordered-pair entries, mirroring and checking symmetry.

        ``regions`` may extend the index beyond the entries (regions whose
        every pair is zero); by default the index is inferred from the pairs.
        """
        if regions is None:
            regions = {code for pair in entries for code in pair}
        regions = tuple(sorted(regions))
        pos = {code: k for k, code in enumerate(regions)}
        matrix = np.zeros((len(regions), len(regions)))
        for (i, j), value in entries.items():
            if value < 0:
                raise NonpositiveSciError(i, j, value)
            if value == 0:
                continue
            a, b = pos[i], pos[j]
            for r, c in ((a, b), (b, a)):
                if matrix[r, c] != 0.0 and matrix[r, c] != value:
                    raise AsymmetricPairError(i, j, value, matrix[r, c])
                matrix[r, c] = value
        return cls(regions, matrix)

    @property
    def n_regions(self) -> int:
        return len(self.region_index)

    def index_of(self, code: str) -> int:
        try:
            return self._pos[code]
        except KeyError:
            raise KeyError(f"region {code} not in social network") from None

    def lookup(self, i: str, j: str) -> float:
        """Connectedness between two regions; 0.0 for absent pairs."""
        return float(self.matrix[self.index_of(i), self.index_of(j)])

    def off_diagonal(self, regions: Sequence[str] | None = None) -> np.ndarray:
        """Dense matrix restricted to ``regions`` with the diagonal zeroed."""
        if regions is None:
            sub = self.matrix.copy()
        else:
            idx = np.array([self.index_of(r) for r in regions])
            sub = self.matrix[np.ix_(idx, idx)].copy()
        np.fill_diagonal(sub, 0.0)
        return sub

    def scaled(self, factor: float) -> "SocialNetwork":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return SocialNetwork(self.region_index, self.matrix * factor)


# ---------------------------------------------------------------------------
# Geography, policy, elections
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Geography:
    """Region centroids in decimal degrees."""

    centroids: dict[str, tuple[float, float]]

    def __post_init__(self):
        seen: dict[tuple[float, float], str] = {}
        for code, (lat, lon) in self.centroids.items():
            if not -90.0 <= lat <= 90.0:
                raise ValueError(f"{code}: latitude {lat} out of range")
            if not -180.0 <= lon <= 180.0:
                raise ValueError(f"{code}: longitude {lon} out of range")
            other = seen.get((lat, lon))
            if other is not None:
                raise CoincidentCentroidError(other, code)
            seen[(lat, lon)] = code

    def latlon(self, code: str) -> tuple[float, float]:
        try:
            return self.centroids[code]
        except KeyError:
            raise KeyError(f"region {code} has no centroid") from None

    def __contains__(self, code: str) -> bool:
        return code in self.centroids


@dataclass(frozen=True)
class PolicyTable:
    """First active year per state; absent states never adopt.

    Adoption is absorbing: the indicator stays 1 from the first active year
    onward (no repeal is modeled).
    """

    adoption: Mapping[str, int]

    def indicator(self, state: str, year: int) -> int:
        first = self.adoption.get(state)
        return int(first is not None and year >= first)

    def active_states(self, year: int) -> frozenset[str]:
        return frozenset(s for s, y in self.adoption.items() if year >= y)


@dataclass(frozen=True)
class ElectionTable:
    """Binary returns per (region, presidential election year)."""

    returns: Mapping[tuple[str, int], int]

    def __post_init__(self):
        for (region, year), value in self.returns.items():
            if year not in ELECTION_YEARS:
                raise ValueError(f"{year} is not a supported election year")
            if value not in (0, 1):
                raise ValueError(f"({region}, {year}): return must be 0 or 1")

    def regions(self) -> tuple[str, ...]:
        return tuple(sorted({region for region, _ in self.returns}))

    def years_for(self, region: str) -> list[int]:
        return sorted(y for r, y in self.returns if r == region)


def carry_forward_political(
    elections: ElectionTable,
    years: Sequence[int],
    strict: bool = False,
) -> dict[tuple[str, int], int]:
    """Assign each (region, year) the return of the latest election <= year.

    Regions with no election at or before the first study year are skipped
    (strict mode raises instead). The output is piecewise constant in year
    with change points only at election years.
    """
    years = sorted(years)
    out: dict[tuple[str, int], int] = {}
    for region in elections.regions():
        eyears = elections.years_for(region)
        if not eyears or eyears[0] > years[0]:
            if strict:
                raise NoPriorElectionError(region, years[0])
            logger.warning(
                "political leaning: region %s has no election at or before %d; skipped",
                region,
                years[0],
            )
            continue
        for year in years:
            latest = max(e for e in eyears if e <= year)
            out[(region, year)] = elections.returns[(region, latest)]
    return out


# ---------------------------------------------------------------------------
# Age-stratified counts and the standard population
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class AgeStratifiedCounts:
    """Deaths and population over the 18 five-year age groups (0-4 ... 85+)."""

    deaths: np.ndarray
    population: np.ndarray

    def __post_init__(self):
        self.deaths = np.asarray(self.deaths, dtype=np.int64)
        self.population = np.asarray(self.population, dtype=np.int64)
        if self.deaths.shape != (N_AGE_GROUPS,) or self.population.shape != (N_AGE_GROUPS,):
            raise ValueError(f"expected exactly {N_AGE_GROUPS} age strata")
        if (self.deaths < 0).any() or (self.population < 0).any():
            raise ValueError("age strata counts must be nonnegative")

    @property
    def total_deaths(self) -> int:
        return int(self.deaths.sum())


@dataclass(eq=False)
class AgeCountsTable:
    """Age-stratified counts keyed by (region, year)."""

    cells: dict[tuple[str, int], AgeStratifiedCounts]

    def get(self, region: str, year: int) -> AgeStratifiedCounts | None:
        return self.cells.get((region, year))


@dataclass(eq=False)
class StandardPopulation:
    """Reference age-distribution weights, normalized to sum to one at load."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (N_AGE_GROUPS,):
            raise ValueError(f"expected exactly {N_AGE_GROUPS} weights")
        if (self.weights < 0).any():
            raise ValueError("standard population weights must be nonnegative")
        total = self.weights.sum()
        if total <= 0:
            raise ValueError("standard population weights sum to zero")
        self.weights = self.weights / total


# ---------------------------------------------------------------------------
# Panel
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PanelDataset:
    """Balanced county-year panel of outcomes, covariates, and policy status.

    ``frame`` is sorted by (region, year) and carries at least the columns
    region, year, deaths, population, crude_rate, erpo_active, plus the named
    covariates. Age-adjusted columns (age_adjusted_rate, age_suppressed) are
    added by the age-standardization step.
    """

    frame: pd.DataFrame
    covariates: tuple[str, ...]
    dropped: tuple[DropRecord, ...] = ()

    def __post_init__(self):
        self.frame = (
            self.frame.sort_values(["region", "year"]).reset_index(drop=True)
        )
        self._regions = tuple(sorted(self.frame["region"].unique()))
        self._years = tuple(int(y) for y in sorted(self.frame["year"].unique()))

    @property
    def regions(self) -> tuple[str, ...]:
        return self._regions

    @property
    def years(self) -> tuple[int, ...]:
        return self._years

    @property
    def n_obs(self) -> int:
        return len(self.frame)

    @property
    def has_age_adjusted(self) -> bool:
        return "age_adjusted_rate" in self.frame.columns

    def population_map(self, year: int | None = None) -> dict[str, int]:
        """Population per region for ``year`` (default: first study year)."""
        if year is None:
            year = self._years[0]
        sub = self.frame[self.frame["year"] == year]
        if len(sub) != len(self._regions):
            raise ValueError(f"panel has no complete cross-section for year {year}")
        return dict(zip(sub["region"], sub["population"].astype(int)))

    def rate_matrix(self, outcome: str = "crude") -> tuple[np.ndarray, np.ndarray]:
        """(n_regions, n_years) outcome matrix plus a finite-value mask.

        Suppressed or missing cells (age-adjusted outcome only) are NaN in the
        matrix and False in the mask.
        """
        column = _outcome_column(self, outcome)
        values = self.frame[column].to_numpy(dtype=float)
        n, t = len(self._regions), len(self._years)
        if len(values) != n * t:
            raise ValueError("panel is not balanced; load_panel enforces balance")
        # frame is sorted region-major, year-minor over a balanced panel
        matrix = values.reshape(n, t)
        return matrix, np.isfinite(matrix)

    def restrict_regions(self, regions: Iterable[str]) -> "PanelDataset":
        keep = set(regions)
        frame = self.frame[self.frame["region"].isin(keep)].copy()
        return PanelDataset(frame, self.covariates, self.dropped)


def _outcome_column(panel: PanelDataset, outcome: str) -> str:
    if outcome == "crude":
        return "crude_rate"
    if outcome == "age_adjusted":
        if not panel.has_age_adjusted:
            raise ValueError(
                "panel has no age-adjusted rates; run the age-standardization step"
            )
        return "age_adjusted_rate"
    raise ValueError(f"unknown outcome '{outcome}'")


# ---------------------------------------------------------------------------
# File schemas and loaders
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PanelSchema:
    """Maps canonical panel fields to column names in the input file."""

    region: str = "fips"
    year: str = "year"
    deaths: str = "deaths"
    population: str = "population"
    erpo: str = "erpo"
    covariates: Mapping[str, str] = field(
        default_factory=lambda: {name: name for name in DEFAULT_COVARIATES}
    )


def _open_reader(path: str, delimiter: str, required: Sequence[str]) -> tuple:
    fh = open(path, newline="", encoding="utf-8")
    reader = csv.DictReader(fh, delimiter=delimiter)
    header = reader.fieldnames or []
    for column in required:
        if column not in header:
            fh.close()
            raise MissingColumnError(path, column)
    return fh, reader


def _parse_region(raw: str) -> str:
    code = raw.strip()
    if not is_region_code(code):
        raise ValueError(f"not a 5-digit region code: {raw!r}")
    return code


def _parse_int(raw: str) -> int:
    return int(raw.strip())


def _parse_float(raw: str) -> float:
    value = float(raw.strip())
    if not np.isfinite(value):
        raise ValueError(f"non-finite value: {raw!r}")
    return value


def load_panel(
    path: str,
    schema: PanelSchema | None = None,
    delimiter: str = ",",
    strict: bool = False,
    years: Sequence[int] | None = None,
) -> PanelDataset:
    """Load and validate the county-year panel.

    Rows failing field validation are dropped (strict: raised). After row
    validation the panel is balanced over the study window: regions missing
    any year are dropped entirely and logged (strict: UnbalancedRegionError).
    Duplicate (region, year) keys always raise.
    """
    schema = schema or PanelSchema()
    required = [schema.region, schema.year, schema.deaths, schema.population, schema.erpo]
    required += list(schema.covariates.values())
    fh, reader = _open_reader(path, delimiter, required)

    rows: list[dict] = []
    drops: list[DropRecord] = []
    seen: set[tuple[str, int]] = set()
    covariate_names = tuple(schema.covariates)

    def fail(lineno: int, fieldname: str, reason: str, key: str):
        if strict:
            fh.close()
            raise ParseError(lineno, fieldname, reason)
        drops.append(DropRecord(lineno, key, reason))
        logger.warning("panel %s row %d dropped: %s", path, lineno, reason)

    with fh:
        for lineno, raw in enumerate(reader, start=2):
            key = f"{raw.get(schema.region, '?')}/{raw.get(schema.year, '?')}"
            try:
                region = _parse_region(raw[schema.region])
            except ValueError as exc:
                fail(lineno, schema.region, str(exc), key)
                continue
            try:
                year = _parse_int(raw[schema.year])
            except ValueError:
                fail(lineno, schema.year, f"bad year {raw[schema.year]!r}", key)
                continue
            if (region, year) in seen:
                raise DuplicateKeyError((region, year))
            try:
                deaths = _parse_int(raw[schema.deaths])
                if deaths < 0:
                    raise ValueError("deaths must be nonnegative")
            except ValueError as exc:
                fail(lineno, schema.deaths, f"bad deaths: {exc}", key)
                continue
            try:
                population = _parse_int(raw[schema.population])
                if population <= 0:
                    raise ValueError("population must be positive")
            except ValueError as exc:
                fail(lineno, schema.population, f"bad population: {exc}", key)
                continue
            try:
                erpo = _parse_int(raw[schema.erpo])
                if erpo not in (0, 1):
                    raise ValueError("erpo indicator must be 0 or 1")
            except ValueError as exc:
                fail(lineno, schema.erpo, f"bad erpo flag: {exc}", key)
                continue

            record = {
                "region": region,
                "year": year,
                "deaths": deaths,
                "population": population,
                "erpo_active": erpo,
            }
            ok = True
            for name, column in schema.covariates.items():
                try:
                    value = _parse_float(raw[column])
                    if name.startswith("pct_") and not 0.0 <= value <= 100.0:
                        raise ValueError(f"{name}={value} outside [0, 100]")
                except ValueError as exc:
                    fail(lineno, column, f"bad covariate: {exc}", key)
                    ok = False
                    break
                record[name] = value
            if not ok:
                continue
            record["crude_rate"] = crude_rate(deaths, population)
            seen.add((region, year))
            rows.append(record)

    if not rows:
        raise ParseError(0, "panel", f"{path}: no valid rows")

    frame = pd.DataFrame(rows)
    window = sorted(years) if years is not None else sorted(frame["year"].unique())
    frame = frame[frame["year"].isin(window)]

    # balance: every retained region must appear in every year of the window
    counts = frame.groupby("region")["year"].nunique()
    incomplete = counts[counts < len(window)].index
    for region in incomplete:
        have = set(frame.loc[frame["region"] == region, "year"])
        missing = set(window) - have
        if strict:
            raise UnbalancedRegionError(region, missing)
        drops.append(
            DropRecord(0, region, f"region missing years {sorted(missing)}; dropped")
        )
        logger.warning(
            "panel %s: region %s missing years %s; dropped", path, region, sorted(missing)
        )
    frame = frame[~frame["region"].isin(set(incomplete))]
    if frame.empty:
        raise ParseError(0, "panel", f"{path}: no region covers the full study window")

    return PanelDataset(frame, covariate_names, tuple(drops))


def load_sci(path: str, delimiter: str = ",") -> SocialNetwork:
    """Load a long-format connectedness file (user_loc, fr_loc, scaled_sci).

    Pairs listed in both directions must agree exactly; zero-valued pairs are
    omitted (absent means zero), negative values raise.
    """
    fh, reader = _open_reader(path, delimiter, ["user_loc", "fr_loc", "scaled_sci"])
    entries: dict[tuple[str, str], float] = {}
    seen: set[str] = set()
    with fh:
        for lineno, raw in enumerate(reader, start=2):
            try:
                i = _parse_region(raw["user_loc"])
                j = _parse_region(raw["fr_loc"])
            except ValueError as exc:
                raise ParseError(lineno, "user_loc/fr_loc", str(exc)) from None
            try:
                value = _parse_float(raw["scaled_sci"])
            except ValueError as exc:
                raise ParseError(lineno, "scaled_sci", str(exc)) from None
            if value < 0:
                raise NonpositiveSciError(i, j, value)
            seen.update((i, j))
            if value == 0.0:
                continue
            prior = entries.get((j, i))
            if prior is not None and prior != value:
                raise AsymmetricPairError(j, i, prior, value)
            prior = entries.get((i, j))
            if prior is not None and prior != value:
                raise DuplicateKeyError((i, j))
            entries[(i, j)] = value
    return SocialNetwork.from_entries(entries, seen)


def load_geography(path: str, delimiter: str = ",") -> Geography:
    """Load region centroids from columns (fips, lat, lon)."""
    fh, reader = _open_reader(path, delimiter, ["fips", "lat", "lon"])
    centroids: dict[str, tuple[float, float]] = {}
    with fh:
        for lineno, raw in enumerate(reader, start=2):
            try:
                code = _parse_region(raw["fips"])
                lat = _parse_float(raw["lat"])
                lon = _parse_float(raw["lon"])
            except ValueError as exc:
                raise ParseError(lineno, "fips/lat/lon", str(exc)) from None
            if not -90.0 <= lat <= 90.0 or not -180.0 <= lon <= 180.0:
                raise ParseError(lineno, "lat/lon", f"({lat}, {lon}) out of range")
            if code in centroids:
                raise DuplicateKeyError(code)
            centroids[code] = (lat, lon)
    return Geography(centroids)


def load_policy(path: str, delimiter: str = ",") -> PolicyTable:
    """Load state adoption years from columns (state, first_year)."""
    fh, reader = _open_reader(path, delimiter, ["state", "first_year"])
    adoption: dict[str, int] = {}
    with fh:
        for lineno, raw in enumerate(reader, start=2):
            state = raw["state"].strip()
            if len(state) != 2 or not state.isdigit():
                raise ParseError(lineno, "state", f"bad state code {raw['state']!r}")
            if state in adoption:
                raise DuplicateKeyError(state)
            try:
                adoption[state] = _parse_int(raw["first_year"])
            except ValueError as exc:
                raise ParseError(lineno, "first_year", str(exc)) from None
    return PolicyTable(adoption)


def load_elections(path: str, delimiter: str = ",") -> ElectionTable:
    """Load presidential returns from columns (fips, year, rep_majority)."""
    fh, reader = _open_reader(path, delimiter, ["fips", "year", "rep_majority"])
    returns: dict[tuple[str, int], int] = {}
    with fh:
        for lineno, raw in enumerate(reader, start=2):
            try:
                code = _parse_region(raw["fips"])
                year = _parse_int(raw["year"])
                value = _parse_int(raw["rep_majority"])
            except ValueError as exc:
                raise ParseError(lineno, "fips/year/rep_majority", str(exc)) from None
            if year not in ELECTION_YEARS:
                raise ParseError(
                    lineno, "year", f"{year} is not one of {ELECTION_YEARS}"
                )
            if value not in (0, 1):
                raise ParseError(lineno, "rep_majority", "must be 0 or 1")
            if (code, year) in returns:
                raise DuplicateKeyError((code, year))
            returns[(code, year)] = value
    return ElectionTable(returns)


def load_age_counts(path: str, delimiter: str = ",") -> AgeCountsTable:
    """Load age-stratified counts (fips, year, age_group_index, deaths, population)."""
    fh, reader = _open_reader(
        path, delimiter, ["fips", "year", "age_group_index", "deaths", "population"]
    )
    deaths: dict[tuple[str, int], np.ndarray] = {}
    pops: dict[tuple[str, int], np.ndarray] = {}
    filled: dict[tuple[str, int], np.ndarray] = {}
    with fh:
        for lineno, raw in enumerate(reader, start=2):
            try:
                code = _parse_region(raw["fips"])
                year = _parse_int(raw["year"])
                stratum = _parse_int(raw["age_group_index"])
                d = _parse_int(raw["deaths"])
                p = _parse_int(raw["population"])
            except ValueError as exc:
                raise ParseError(lineno, "age row", str(exc)) from None
            if not 0 <= stratum < N_AGE_GROUPS:
                raise ParseError(
                    lineno, "age_group_index", f"must lie in [0, {N_AGE_GROUPS})"
                )
            if d < 0 or p < 0:
                raise ParseError(lineno, "deaths/population", "must be nonnegative")
            key = (code, year)
            if key not in deaths:
                deaths[key] = np.zeros(N_AGE_GROUPS, dtype=np.int64)
                pops[key] = np.zeros(N_AGE_GROUPS, dtype=np.int64)
                filled[key] = np.zeros(N_AGE_GROUPS, dtype=bool)
            if filled[key][stratum]:
                raise DuplicateKeyError((code, year, stratum))
            deaths[key][stratum] = d
            pops[key][stratum] = p
            filled[key][stratum] = True
    cells = {}
    for key, mask in filled.items():
        if not mask.all():
            missing = [a for a in range(N_AGE_GROUPS) if not mask[a]]
            raise ParseError(0, "age strata", f"{key}: missing strata {missing}")
        cells[key] = AgeStratifiedCounts(deaths[key], pops[key])
    return AgeCountsTable(cells)


def load_standard_population(path: str, delimiter: str = ",") -> StandardPopulation:
    """Load standard-population weights (age_group_index, weight)."""
    fh, reader = _open_reader(path, delimiter, ["age_group_index", "weight"])
    weights = np.full(N_AGE_GROUPS, np.nan)
    with fh:
        for lineno, raw in enumerate(reader, start=2):
            try:
                stratum = _parse_int(raw["age_group_index"])
                weight = _parse_float(raw["weight"])
            except ValueError as exc:
                raise ParseError(lineno, "age_group_index/weight", str(exc)) from None
            if not 0 <= stratum < N_AGE_GROUPS:
                raise ParseError(lineno, "age_group_index", "stratum out of range")
            if np.isfinite(weights[stratum]):
                raise DuplicateKeyError(stratum)
            weights[stratum] = weight
    if not np.isfinite(weights).all():
        raise ParseError(0, "weight", "not all 18 strata have weights")
    return StandardPopulation(weights)


# ---------------------------------------------------------------------------
# Writers (same formats the loaders read; used by fixtures and the CLI)
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_rows(path: str, header: Sequence[str], rows: Iterable[Sequence], delimiter: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_panel(panel: PanelDataset, path: str, delimiter: str = ",") -> None:
    header = ["fips", "year", "deaths", "population", *panel.covariates, "erpo"]
    rows = (
        [r.region, r.year, r.deaths, r.population]
        + [getattr(r, c) for c in panel.covariates]
        + [r.erpo_active]
        for r in panel.frame.itertuples(index=False)
    )
    _write_rows(path, header, rows, delimiter)


def write_sci(net: SocialNetwork, path: str, delimiter: str = ",") -> None:
    """Serialize the upper triangle (including any self-pairs)."""
    rows = []
    n = net.n_regions
    for a in range(n):
        for b in range(a, n):
            value = net.matrix[a, b]
            if value != 0.0:
                rows.append((net.region_index[a], net.region_index[b], value))
    _write_rows(path, ["user_loc", "fr_loc", "scaled_sci"], rows, delimiter)


def write_geography(geo: Geography, path: str, delimiter: str = ",") -> None:
    rows = ((code, lat, lon) for code, (lat, lon) in sorted(geo.centroids.items()))
    _write_rows(path, ["fips", "lat", "lon"], rows, delimiter)


def write_policy(policy: PolicyTable, path: str, delimiter: str = ",") -> None:
    rows = sorted(policy.adoption.items())
    _write_rows(path, ["state", "first_year"], rows, delimiter)


def write_elections(elections: ElectionTable, path: str, delimiter: str = ",") -> None:
    rows = (
        (region, year, value)
        for (region, year), value in sorted(elections.returns.items())
    )
    _write_rows(path, ["fips", "year", "rep_majority"], rows, delimiter)


def write_age_counts(table: AgeCountsTable, path: str, delimiter: str = ",") -> None:
    rows = []
    for (region, year), counts in sorted(table.cells.items()):
        for stratum in range(N_AGE_GROUPS):
            rows.append(
                (region, year, stratum, int(counts.deaths[stratum]), int(counts.population[stratum]))
            )
    _write_rows(
        path, ["fips", "year", "age_group_index", "deaths", "population"], rows, delimiter
    )


def write_standard_population(std: StandardPopulation, path: str, delimiter: str = ",") -> None:
    rows = ((a, std.weights[a]) for a in range(N_AGE_GROUPS))
    _write_rows(path, ["age_group_index", "weight"], rows, delimiter)
