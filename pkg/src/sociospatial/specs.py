"""Registry of the named model specifications the CLI can estimate.

The crude-outcome specifications control for the full covariate set; the
age-adjusted variants drop the three age-structure shares (the outcome is
already standardized for age) and regress the age-adjusted proximity series.
Continuous covariates (population density, median household income) and every
exposure regressor are z-scored on the estimation sample.
"""

from __future__ import annotations

from .errors import ConfigError
from .regress import ModelSpec

#: covariates used by the socio-spatial models (no political affiliation)
SOCIO_COVARIATES = (
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
)

#: policy models additionally control for political affiliation
POLICY_COVARIATES = SOCIO_COVARIATES + ("political_affiliation",)

_AGE_SHARES = ("pct_age_0_17", "pct_age_18_44", "pct_age_45_64")
_CONTINUOUS = ("population_density", "median_household_income")


def _drop_age_shares(covariates: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(c for c in covariates if c not in _AGE_SHARES)


def _suffix(names: tuple[str, ...], age_adjusted: bool) -> tuple[str, ...]:
    if not age_adjusted:
        return names
    return tuple(f"{n}_age_adjusted" for n in names)


def _make(name, exposure_names, covariates, fixed_effects, age_adjusted,
          standardize_exposures=True) -> ModelSpec:
    covariates = _drop_age_shares(covariates) if age_adjusted else covariates
    regressors = exposure_names + covariates
    standardize = tuple(c for c in covariates if c in _CONTINUOUS)
    if standardize_exposures:
        standardize = exposure_names + standardize
    return ModelSpec(
        name=name,
        regressors=regressors,
        outcome="age_adjusted" if age_adjusted else "crude",
        fixed_effects=fixed_effects,
        weights="population",
        cluster="state",
        standardize=standardize,
    )


def _build(base: str, age_adjusted: bool) -> ModelSpec:
    name = f"{base}_age_adjusted" if age_adjusted else base
    proximity = _suffix(("social_proximity", "spatial_proximity"), age_adjusted)
    if base == "socio_spatial_m1":
        return _make(name, proximity[:1], SOCIO_COVARIATES, ("region", "year"), age_adjusted)
    if base == "socio_spatial_m2":
        return _make(name, proximity, SOCIO_COVARIATES, ("region", "year"), age_adjusted)
    if base == "erpo_direct":
        spec = _make(
            name, ("erpo_active",), POLICY_COVARIATES, ("region", "year"),
            age_adjusted, standardize_exposures=False,
        )
        return spec
    if base == "erpo_social":
        return _make(
            name, ("erpo_social_exposure",), POLICY_COVARIATES,
            ("region", "state_by_year"), age_adjusted,
        )
    if base == "erpo_social_spatial":
        return _make(
            name, ("erpo_social_exposure", "erpo_spatial_exposure"),
            POLICY_COVARIATES, ("region", "state_by_year"), age_adjusted,
        )
    if base == "robustness_social_control":
        return _make(
            name,
            ("erpo_social_exposure", "erpo_spatial_exposure", proximity[0]),
            POLICY_COVARIATES, ("region", "state_by_year"), age_adjusted,
        )
    raise ConfigError(f"unknown model spec '{base}'")


_BASES = (
    "socio_spatial_m1",
    "socio_spatial_m2",
    "erpo_direct",
    "erpo_social",
    "erpo_social_spatial",
    "robustness_social_control",
)

SPEC_NAMES = _BASES + tuple(f"{b}_age_adjusted" for b in _BASES)


def build_spec(name: str) -> ModelSpec:
    """Look up a named specification."""
    if name.endswith("_age_adjusted"):
        base = name[: -len("_age_adjusted")]
        return _build(base, age_adjusted=True)
    return _build(name, age_adjusted=False)


def exposure_names_for(spec: ModelSpec) -> tuple[str, ...]:
    """Exposure series (not panel columns) the spec depends on."""
    panel_columns = set(POLICY_COVARIATES) | {"erpo_active"}
    return tuple(r for r in spec.regressors if r not in panel_columns)
