"""Shared fixture builders for hand-sized test data."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from sociospatial.coredata import Geography, PanelDataset, SocialNetwork

KM_PER_RADIAN = 6371.0088


def panel_from_cells(
    cells: dict[tuple[str, int], tuple[int, int]],
    covariates: dict[str, dict[tuple[str, int], float]] | None = None,
) -> PanelDataset:
    """Build a panel from {(region, year): (deaths, population)} cells."""
    covariates = covariates or {}
    rows = []
    for (region, year), (deaths, population) in cells.items():
        row = {
            "region": region,
            "year": year,
            "deaths": deaths,
            "population": population,
            "crude_rate": 100_000.0 * deaths / population,
            "erpo_active": 0,
        }
        for name, values in covariates.items():
            row[name] = values[(region, year)]
        rows.append(row)
    return PanelDataset(pd.DataFrame(rows), tuple(covariates))


def network_from_pairs(pairs: dict[tuple[str, str], float]) -> SocialNetwork:
    return SocialNetwork.from_entries(pairs)


def equator_geography(offsets_km: dict[str, float]) -> Geography:
    """Regions on the equator at exact kilometer offsets (great-circle exact)."""
    return Geography(
        {
            code: (0.0, np.degrees(km / KM_PER_RADIAN))
            for code, km in offsets_km.items()
        }
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
