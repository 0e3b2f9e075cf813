"""Socio-spatial exposure metrics and fixed-effects panel estimation.

The package reconstructs a full analytic pipeline for county-year mortality
panels: connectedness- and distance-weighted exposure metrics, crude and
age-standardized rates, and population-weighted regression with absorbed
high-dimensional fixed effects and state-clustered inference, all verified
against brute-force oracles and synthetic data with planted coefficients.
"""

from .coredata import (
    DEFAULT_COVARIATES,
    ElectionTable,
    Geography,
    PanelDataset,
    PolicyTable,
    SocialNetwork,
    carry_forward_political,
    crude_rate,
    load_panel,
    load_sci,
    state_of,
)
from .agestd import AdjustedRate, age_adjusted_rate, build_age_adjusted_panel
from .exposure import (
    ExposureSeries,
    deaths_in_social_proximity,
    deaths_in_spatial_proximity,
    erpo_social_exposure,
    erpo_spatial_exposure,
    exposure_delta,
    social_weights,
    standardize,
)
from .geo import DistanceMatrix, EARTH_RADIUS_KM, haversine, spatial_weights
from .regress import (
    FitResult,
    ModelSpec,
    absorb,
    cluster_vcov,
    dummy_ols_oracle,
    fit,
    wls,
)
from .specs import SPEC_NAMES, build_spec
from .synthlab import DgpConfig, brute_force_exposures, generate_network, simulate_panel

__version__ = "0.1.0"
