"""Exception hierarchy for the sociospatial engine.

Every error raised by the engine derives from SociospatialError so callers
(notably the CLI) can map failures to exit codes without enumerating types.
"""

from __future__ import annotations


class SociospatialError(Exception):
    """Base class for all engine errors."""


# --- ingestion / validation -------------------------------------------------

class MissingColumnError(SociospatialError):
    def __init__(self, path: str, column: str):
        super().__init__(f"{path}: required column '{column}' not found in header")
        self.path = path
        self.column = column


class ParseError(SociospatialError):
    def __init__(self, row: int, fieldname: str, detail: str = ""):
        msg = f"row {row}, field '{fieldname}' could not be parsed"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.row = row
        self.fieldname = fieldname


class DuplicateKeyError(SociospatialError):
    def __init__(self, key):
        super().__init__(f"duplicate key {key!r}")
        self.key = key


class UnbalancedRegionError(SociospatialError):
    def __init__(self, region: str, missing_years):
        super().__init__(
            f"region {region} missing from years {sorted(missing_years)}"
        )
        self.region = region
        self.missing_years = tuple(sorted(missing_years))


class AsymmetricPairError(SociospatialError):
    def __init__(self, i: str, j: str, forward: float, backward: float):
        super().__init__(
            f"connectedness listed for both ({i},{j})={forward!r} and "
            f"({j},{i})={backward!r} with different values"
        )
        self.pair = (i, j)


class NonpositiveSciError(SociospatialError):
    def __init__(self, i: str, j: str, value: float):
        super().__init__(f"connectedness for ({i},{j}) is negative: {value!r}")
        self.pair = (i, j)


class ZeroPopulationError(SociospatialError):
    pass


class NoPriorElectionError(SociospatialError):
    def __init__(self, region: str, first_year: int):
        super().__init__(
            f"region {region} has no election return at or before {first_year}"
        )
        self.region = region
        self.first_year = first_year


# --- geography ----------------------------------------------------------------

class CoincidentCentroidError(SociospatialError):
    def __init__(self, a: str, b: str):
        super().__init__(f"regions {a} and {b} share the exact same centroid")
        self.regions = (a, b)


# --- exposures ------------------------------------------------------------------

class IsolatedRegionError(SociospatialError):
    def __init__(self, region: str, detail: str = "no positive ties to any alter"):
        super().__init__(f"region {region}: {detail}")
        self.region = region


class MissingYearError(SociospatialError):
    def __init__(self, year: int, series: str = ""):
        where = f" in series '{series}'" if series else ""
        super().__init__(f"year {year} not present{where}")
        self.year = year


class ZeroVarianceError(SociospatialError):
    def __init__(self, name: str = ""):
        super().__init__(f"cannot standardize '{name}': pooled variance is zero")
        self.name = name


# --- regression -------------------------------------------------------------------

class NoConvergenceError(SociospatialError):
    def __init__(self, iterations: int, last_delta: float):
        super().__init__(
            f"fixed-effect absorption did not converge after {iterations} sweeps "
            f"(last max group-mean {last_delta:.3e})"
        )
        self.iterations = iterations
        self.last_delta = last_delta


class RankDeficientError(SociospatialError):
    def __init__(self, pruned):
        super().__init__(
            f"design matrix has no usable columns after pruning {list(pruned)}"
        )
        self.pruned = tuple(pruned)


class SingleClusterError(SociospatialError):
    pass


class UnknownRegressorError(SociospatialError):
    def __init__(self, name: str):
        super().__init__(
            f"regressor '{name}' is neither a panel column nor a provided exposure"
        )
        self.name = name


# --- age standardization -----------------------------------------------------------

class ZeroStratumPopulationError(SociospatialError):
    def __init__(self, stratum: int):
        super().__init__(
            f"age stratum {stratum} has deaths but zero population"
        )
        self.stratum = stratum


class MissingAgeDataError(SociospatialError):
    def __init__(self, region: str, year: int):
        super().__init__(f"no age-stratified counts for ({region}, {year})")
        self.key = (region, year)


class InconsistentDeathsError(SociospatialError):
    def __init__(self, region: str, year: int, stratified: int, total: int):
        super().__init__(
            f"({region}, {year}): age strata sum to {stratified} deaths "
            f"but the panel records {total}"
        )
        self.key = (region, year)


# --- synthetic lab / oracles ----------------------------------------------------------

class OracleScaleExceededError(SociospatialError):
    def __init__(self, n_regions: int, limit: int):
        super().__init__(
            f"brute-force oracle limited to {limit} regions, got {n_regions}"
        )


class TooManyDummiesError(SociospatialError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"dummy-variable oracle limited to {limit} columns, got {count}")


class ConfigError(SociospatialError):
    pass
