"""Direct age standardization of mortality rates with cell suppression.

The adjusted rate is the standard-population-weighted sum of stratum-specific
rates, scaled to deaths per 100,000:

    adjusted = 100000 * sum_a w_a * d_a / p_a

Cells with fewer than 10 total deaths are suppressed. Empty strata (zero
deaths and zero population) contribute zero; a stratum with deaths but no
population is a data error.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .coredata import (
    AgeCountsTable,
    AgeStratifiedCounts,
    PanelDataset,
    RATE_SCALE,
    StandardPopulation,
)
from .errors import InconsistentDeathsError, MissingAgeDataError, ZeroStratumPopulationError

logger = logging.getLogger(__name__)

SUPPRESSION_THRESHOLD = 10


@dataclass(frozen=True)
class AdjustedRate:
    """Age-adjusted rate per 100,000, or a suppressed placeholder."""

    value: float  # NaN when suppressed
    suppressed: bool
    total_deaths: int


def age_adjusted_rate(counts: AgeStratifiedCounts, std: StandardPopulation) -> AdjustedRate:
    """Directly standardized rate; suppressed below the death-count threshold."""
    deaths = counts.deaths.astype(float)
    population = counts.population.astype(float)
    bad = (deaths > 0) & (population == 0)
    if bad.any():
        raise ZeroStratumPopulationError(int(np.argmax(bad)))
    total = counts.total_deaths
    if total < SUPPRESSION_THRESHOLD:
        return AdjustedRate(math.nan, True, total)
    rates = np.zeros_like(deaths)
    occupied = population > 0
    rates[occupied] = deaths[occupied] / population[occupied]
    value = RATE_SCALE * float(np.dot(std.weights, rates))
    return AdjustedRate(value, False, total)


def build_age_adjusted_panel(
    panel: PanelDataset,
    age: AgeCountsTable,
    std: StandardPopulation,
) -> PanelDataset:
    """Panel with age_adjusted_rate and age_suppressed columns populated.

    Every (region, year) in the panel must have age-stratified counts whose
    deaths sum to the panel's death count. Suppression statistics are logged;
    suppressed cells keep NaN rates and are excluded later from age-adjusted
    estimation samples.
    """
    frame = panel.frame.copy()
    values = np.empty(len(frame))
    suppressed = np.zeros(len(frame), dtype=bool)
    n_suppressed = 0
    for k, row in enumerate(frame.itertuples(index=False)):
        counts = age.get(row.region, int(row.year))
        if counts is None:
            raise MissingAgeDataError(row.region, int(row.year))
        if counts.total_deaths != int(row.deaths):
            raise InconsistentDeathsError(
                row.region, int(row.year), counts.total_deaths, int(row.deaths)
            )
        adjusted = age_adjusted_rate(counts, std)
        values[k] = adjusted.value
        suppressed[k] = adjusted.suppressed
        n_suppressed += int(adjusted.suppressed)
    frame["age_adjusted_rate"] = values
    frame["age_suppressed"] = suppressed
    share = n_suppressed / len(frame) if len(frame) else 0.0
    logger.info(
        "age standardization: %d of %d region-years suppressed (%.1f%%)",
        n_suppressed,
        len(frame),
        100.0 * share,
    )
    return PanelDataset(frame, panel.covariates, panel.dropped)


def suppression_records(panel: PanelDataset) -> list[tuple[str, int, int]]:
    """(region, year, total deaths) for every suppressed cell."""
    if "age_suppressed" not in panel.frame.columns:
        return []
    sub = panel.frame[panel.frame["age_suppressed"]]
    return [
        (r.region, int(r.year), int(r.deaths)) for r in sub.itertuples(index=False)
    ]
