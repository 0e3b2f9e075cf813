"""Population-weighted least squares with absorbed fixed effects.

Estimation proceeds in four stages: standardize designated regressors on the
estimation sample, sweep out fixed effects by iterated weighted group
demeaning, solve the weighted least-squares problem through a rank-revealing
QR decomposition, and form the cluster-robust sandwich covariance.

By the Frisch-Waugh-Lovell theorem the absorbed slope estimates equal those of
the explicit dummy-variable regression; ``dummy_ols_oracle`` estimates that
regression directly and is used to verify ``fit`` on desk-scale problems.

Conventions, pinned by tests:

* absorption runs to a 1e-10 tolerance on the largest absolute weighted group
  mean, with at most 10,000 sweeps;
* a column is flagged collinear when absorption shrinks its weighted norm
  below 1e-10 of its pre-absorption norm;
* the cluster covariance uses the CR1 factor [G/(G-1)] * [(N-1)/(N-K)] where K
  counts retained regressors plus absorbed fixed-effect degrees of freedom,
  with t(G-1) critical values (CR0 drops the factor);
* R-squared is computed on the original outcome, so absorbed fixed effects
  contribute explanatory power; their degrees of freedom enter adjusted
  R-squared with exact inter-factor redundancies (connected components).

With no fixed effects a constant is absorbed (equivalently: an intercept is
included), so a spec without factors is ordinary weighted least squares.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import stats
from scipy.linalg import qr, solve_triangular
from scipy.sparse.csgraph import connected_components

from .coredata import PanelDataset, state_of
from .errors import (
    NoConvergenceError,
    RankDeficientError,
    SingleClusterError,
    TooManyDummiesError,
    UnknownRegressorError,
)
from .exposure import ExposureSeries, zscore

logger = logging.getLogger(__name__)

ABSORB_TOL = 1e-10
ABSORB_MAX_SWEEPS = 10_000
COLLINEARITY_RTOL = 1e-10
QR_RCOND = 1e-10

VALID_FIXED_EFFECTS = ("region", "year", "state_by_year")


@dataclass(frozen=True)
class ModelSpec:
    """Declarative regression specification."""

    name: str
    regressors: tuple[str, ...]
    outcome: str = "crude"
    fixed_effects: tuple[str, ...] = ()
    weights: str = "population"
    cluster: str = "state"
    standardize: tuple[str, ...] = ()
    sample: Callable[[str, int], bool] | None = None

    def __post_init__(self):
        if not self.regressors:
            raise ValueError(f"spec '{self.name}': at least one regressor required")
        if len(set(self.regressors)) != len(self.regressors):
            raise ValueError(f"spec '{self.name}': duplicate regressor names")
        for fe in self.fixed_effects:
            if fe not in VALID_FIXED_EFFECTS:
                raise ValueError(f"spec '{self.name}': unknown fixed effect '{fe}'")
        if "year" in self.fixed_effects and "state_by_year" in self.fixed_effects:
            raise ValueError(
                f"spec '{self.name}': year is nested in state_by_year; "
                "the two cannot be absorbed together"
            )
        if self.outcome not in ("crude", "age_adjusted"):
            raise ValueError(f"spec '{self.name}': unknown outcome '{self.outcome}'")
        if self.weights not in ("population", "none"):
            raise ValueError(f"spec '{self.name}': unknown weights '{self.weights}'")
        if self.cluster != "state":
            raise ValueError(f"spec '{self.name}': unsupported cluster '{self.cluster}'")
        unknown = set(self.standardize) - set(self.regressors)
        if unknown:
            raise ValueError(
                f"spec '{self.name}': standardize list names non-regressors {sorted(unknown)}"
            )


@dataclass(frozen=True)
class AbsorptionInfo:
    iterations: int
    final_delta: float


@dataclass(eq=False)
class FitResult:
    """Estimates, inference, and diagnostics for one fitted specification."""

    spec_name: str
    outcome: str
    coefficients: dict[str, float]
    cluster_se: dict[str, float]
    ci95: dict[str, tuple[float, float]]
    p_values: dict[str, float]
    n_obs: int
    n_clusters: int
    r2: float
    adj_r2: float
    dof_model: int
    fe_dof: int
    residuals: np.ndarray
    pruned: tuple[str, ...]
    convergence: AbsorptionInfo
    standardization: dict[str, tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def from_json_dict(cls, raw: Mapping) -> "FitResult":
        return cls(
            spec_name=raw["spec"],
            outcome=raw["outcome"],
            coefficients=dict(raw["coefficients"]),
            cluster_se=dict(raw["cluster_se"]),
            ci95={k: (v[0], v[1]) for k, v in raw["ci95"].items()},
            p_values=dict(raw["p"]),
            n_obs=int(raw["n_obs"]),
            n_clusters=int(raw["n_clusters"]),
            r2=float(raw["r2"]),
            adj_r2=float(raw["adj_r2"]),
            dof_model=int(raw["dof_model"]),
            fe_dof=int(raw["fe_dof"]),
            residuals=np.empty(0),
            pruned=tuple(raw["pruned"]),
            convergence=AbsorptionInfo(
                int(raw["convergence"]["iterations"]),
                float(raw["convergence"]["final_delta"]),
            ),
            standardization={
                k: (v[0], v[1]) for k, v in raw.get("standardization", {}).items()
            },
        )

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec_name,
            "outcome": self.outcome,
            "coefficients": {k: float(v) for k, v in self.coefficients.items()},
            "cluster_se": {k: float(v) for k, v in self.cluster_se.items()},
            "ci95": {k: [float(lo), float(hi)] for k, (lo, hi) in self.ci95.items()},
            "p": {k: float(v) for k, v in self.p_values.items()},
            "n_obs": self.n_obs,
            "n_clusters": self.n_clusters,
            "r2": float(self.r2),
            "adj_r2": float(self.adj_r2),
            "dof_model": self.dof_model,
            "fe_dof": self.fe_dof,
            "pruned": list(self.pruned),
            "convergence": {
                "iterations": self.convergence.iterations,
                "final_delta": float(self.convergence.final_delta),
            },
            "standardization": {
                k: [float(m), float(s)] for k, (m, s) in self.standardization.items()
            },
        }


def significance_stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def format_table(
    results: Sequence[FitResult],
    labels: Sequence[str] | None = None,
    title: str = "",
) -> str:
    """Text table mirroring the usual journal layout: coefficients with
    significance stars, clustered standard errors in parentheses beneath."""
    labels = list(labels) if labels is not None else [r.spec_name for r in results]
    order: list[str] = []
    for result in results:
        for name in list(result.coefficients) + list(result.pruned):
            if name not in order:
                order.append(name)
    name_width = max([len(n) for n in order] + [24])
    col_width = max([len(c) for c in labels] + [14])
    lines = []
    if title:
        lines.append(title)
    rule = "-" * (name_width + (col_width + 2) * len(results))
    lines.append(rule)
    lines.append(
        " " * name_width + "".join(f"  {label:>{col_width}}" for label in labels)
    )
    lines.append(rule)
    for name in order:
        coef_cells, se_cells = [], []
        for result in results:
            if name in result.coefficients:
                star = significance_stars(result.p_values[name])
                coef_cells.append(f"{result.coefficients[name]:.3f}{star}")
                se_cells.append(f"({result.cluster_se[name]:.3f})")
            elif name in result.pruned:
                coef_cells.append("dropped")
                se_cells.append("")
            else:
                coef_cells.append("")
                se_cells.append("")
        lines.append(
            f"{name:<{name_width}}" + "".join(f"  {c:>{col_width}}" for c in coef_cells)
        )
        lines.append(
            " " * name_width + "".join(f"  {c:>{col_width}}" for c in se_cells)
        )
    lines.append(rule)
    for label_row, attr, fmt in (
        ("Observations", "n_obs", "{:,d}"),
        ("R2", "r2", "{:.3f}"),
        ("Adjusted R2", "adj_r2", "{:.3f}"),
    ):
        cells = [fmt.format(getattr(r, attr)) for r in results]
        lines.append(
            f"{label_row:<{name_width}}" + "".join(f"  {c:>{col_width}}" for c in cells)
        )
    lines.append(rule)
    lines.append(
        "Robust standard errors in parentheses. * p<0.1; ** p<0.05; *** p<0.01"
    )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Absorption
# ---------------------------------------------------------------------------

def absorb(
    design: np.ndarray,
    outcome: np.ndarray,
    fe_groups: Sequence[np.ndarray],
    weights: np.ndarray,
    tol: float = ABSORB_TOL,
    max_sweeps: int = ABSORB_MAX_SWEEPS,
) -> tuple[np.ndarray, np.ndarray, AbsorptionInfo]:
    """Sweep out fixed effects by iterated weighted group demeaning.

    Each sweep demeans every column (outcome included) within the groups of
    every factor in turn; convergence is declared when no group of any factor
    retains a weighted mean above ``tol``. A single factor therefore converges
    in one sweep. Returns residualized copies and the sweep count.
    """
    X = np.array(design, dtype=float, copy=True)
    if X.ndim != 2:
        raise ValueError("design must be 2-dimensional")
    y = np.array(outcome, dtype=float, copy=True)
    w = np.asarray(weights, dtype=float)
    if (w <= 0).any():
        raise ValueError("weights must be positive")
    if not fe_groups:
        return X, y, AbsorptionInfo(0, 0.0)

    codes = []
    for group in fe_groups:
        _, inverse = np.unique(np.asarray(group), return_inverse=True)
        codes.append(inverse)
    group_weight = [np.bincount(c, weights=w) for c in codes]
    Z = np.column_stack([y, X])
    n_cols = Z.shape[1]

    delta = np.inf
    iterations = 0
    for sweep in range(1, max_sweeps + 1):
        for c, cw in zip(codes, group_weight):
            for k in range(n_cols):
                means = np.bincount(c, weights=w * Z[:, k]) / cw
                Z[:, k] -= means[c]
        delta = 0.0
        for c, cw in zip(codes, group_weight):
            for k in range(n_cols):
                means = np.bincount(c, weights=w * Z[:, k]) / cw
                residual = float(np.abs(means).max()) if means.size else 0.0
                if residual > delta:
                    delta = residual
        iterations = sweep
        if delta <= tol:
            break
    if delta > tol:
        raise NoConvergenceError(iterations, delta)
    return Z[:, 1:], Z[:, 0], AbsorptionInfo(iterations, delta)


def fe_span_dof(fe_groups: Sequence[np.ndarray]) -> int:
    """Dimension of the space spanned by all group indicator columns.

    For two factors the exact inter-factor redundancy is the number of
    connected components of the bipartite level co-occurrence graph.
    """
    if not fe_groups:
        return 0
    codes = []
    for group in fe_groups:
        _, inverse = np.unique(np.asarray(group), return_inverse=True)
        codes.append(inverse)
    if len(codes) == 1:
        return int(codes[0].max()) + 1
    if len(codes) == 2:
        a, b = codes
        la, lb = int(a.max()) + 1, int(b.max()) + 1
        pairs = np.unique(a.astype(np.int64) * lb + b.astype(np.int64))
        rows = pairs // lb
        cols = pairs % lb + la
        graph = sp.coo_matrix(
            (np.ones(len(pairs)), (rows, cols)), shape=(la + lb, la + lb)
        )
        n_components, _ = connected_components(graph, directed=False)
        return la + lb - n_components
    raise NotImplementedError("at most two absorbed factors are supported")


# ---------------------------------------------------------------------------
# Weighted least squares
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class WlsResult:
    beta: np.ndarray
    kept: tuple[int, ...]
    pruned: tuple[int, ...]
    residuals: np.ndarray


def _pivoted_solve(Xw: np.ndarray, yw: np.ndarray, rcond: float):
    _, R, piv = qr(Xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size else 0.0
    rank = int((diag > rcond * scale).sum()) if scale > 0 else 0
    kept = tuple(int(i) for i in np.sort(piv[:rank]))
    pruned = tuple(int(i) for i in np.sort(piv[rank:]))
    if rank == 0:
        return np.empty(0), kept, pruned
    q2, r2 = qr(Xw[:, kept], mode="economic")
    beta = solve_triangular(r2, q2.T @ yw)
    return beta, kept, pruned


def wls(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    names: Sequence[str] | None = None,
    rcond: float = QR_RCOND,
) -> WlsResult:
    """Weighted least squares via rank-revealing QR with collinearity pruning.

    Minimizes sum_i w_i (y_i - x_i'b)^2. Numerically dependent columns are
    pruned and reported; if nothing survives, RankDeficientError is raised.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    names = tuple(names) if names is not None else tuple(f"x{k}" for k in range(X.shape[1]))
    sw = np.sqrt(np.asarray(weights, dtype=float))
    beta, kept, pruned = _pivoted_solve(X * sw[:, None], y * sw, rcond)
    if not kept:
        raise RankDeficientError([names[i] for i in pruned])
    if pruned:
        logger.info("wls: pruned collinear columns %s", [names[i] for i in pruned])
    residuals = y - X[:, kept] @ beta
    return WlsResult(beta, kept, pruned, residuals)


# ---------------------------------------------------------------------------
# Cluster-robust covariance
# ---------------------------------------------------------------------------

def cluster_vcov(
    X: np.ndarray,
    residuals: np.ndarray,
    weights: np.ndarray,
    clusters: Sequence,
    fe_dof: int = 0,
    correction: str = "cr1",
) -> np.ndarray:
    """Clustered sandwich covariance of the WLS coefficients.

    (X'WX)^-1 [ sum_g (X_g' W_g e_g)(X_g' W_g e_g)' ] (X'WX)^-1, scaled by the
    CR1 factor [G/(G-1)] * [(N-1)/(N-K)] where K counts the columns of X plus
    ``fe_dof`` absorbed parameters. With every row its own cluster this is the
    HC1-style heteroskedasticity-robust estimator.
    """
    X = np.asarray(X, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    w = np.asarray(weights, dtype=float)
    n, k_x = X.shape
    _, codes = np.unique(np.asarray(clusters), return_inverse=True)
    n_clusters = int(codes.max()) + 1 if len(codes) else 0
    if n_clusters < 2:
        raise SingleClusterError("cluster-robust inference requires at least 2 clusters")
    wx = X * w[:, None]
    scores = wx * residuals[:, None]
    cluster_scores = np.zeros((n_clusters, k_x))
    for k in range(k_x):
        cluster_scores[:, k] = np.bincount(codes, weights=scores[:, k])
    meat = cluster_scores.T @ cluster_scores
    bread = np.linalg.inv(X.T @ wx)
    if correction == "cr1":
        k_total = k_x + fe_dof
        if n <= k_total:
            raise ValueError(f"CR1 needs N > K; got N={n}, K={k_total}")
        factor = (n_clusters / (n_clusters - 1.0)) * ((n - 1.0) / (n - k_total))
    elif correction == "cr0":
        factor = 1.0
    else:
        raise ValueError(f"unknown correction '{correction}'")
    vcov = factor * bread @ meat @ bread
    return 0.5 * (vcov + vcov.T)


# ---------------------------------------------------------------------------
# Full fit
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class _Assembled:
    regions: np.ndarray
    years: np.ndarray
    y: np.ndarray
    X: np.ndarray
    names: tuple[str, ...]
    weights: np.ndarray
    standardization: dict[str, tuple[float, float]]


def _assemble(
    panel: PanelDataset,
    exposures: Mapping[str, ExposureSeries] | None,
    spec: ModelSpec,
    weights_base: str,
) -> _Assembled:
    frame = panel.frame
    mask = np.ones(len(frame), dtype=bool)
    if spec.outcome == "age_adjusted":
        if not panel.has_age_adjusted:
            raise ValueError(
                f"spec '{spec.name}' uses the age-adjusted outcome but the panel "
                "has no age-adjusted rates"
            )
        mask &= frame["age_adjusted_rate"].notna().to_numpy()
    if spec.sample is not None:
        keys = zip(frame["region"], frame["year"])
        mask &= np.fromiter(
            (bool(spec.sample(r, int(y))) for r, y in keys), dtype=bool, count=len(frame)
        )
    sub = frame[mask]
    if len(sub) < len(spec.regressors) + 2:
        raise ValueError(
            f"spec '{spec.name}': estimation sample has {len(sub)} rows, "
            f"needs at least {len(spec.regressors) + 2}"
        )
    regions = sub["region"].to_numpy()
    years = sub["year"].to_numpy(dtype=int)
    outcome_col = "crude_rate" if spec.outcome == "crude" else "age_adjusted_rate"
    y = sub[outcome_col].to_numpy(dtype=float)

    columns = []
    standardization: dict[str, tuple[float, float]] = {}
    for name in spec.regressors:
        if exposures is not None and name in exposures:
            col = np.asarray(exposures[name].aligned(regions, years), dtype=float)
        elif name in sub.columns:
            col = sub[name].to_numpy(dtype=float)
        else:
            raise UnknownRegressorError(name)
        if name in spec.standardize:
            col, mean, sd = zscore(col, name)
            standardization[name] = (mean, sd)
        columns.append(col)
    X = np.column_stack(columns)

    if spec.weights == "population":
        if weights_base == "annual":
            w = sub["population"].to_numpy(dtype=float)
        elif weights_base == "fixed":
            base = panel.population_map()
            w = np.array([base[r] for r in regions], dtype=float)
        else:
            raise ValueError(f"unknown weights base '{weights_base}'")
    else:
        w = np.ones(len(sub))
    return _Assembled(regions, years, y, X, tuple(spec.regressors), w, standardization)


def _fe_code_arrays(spec: ModelSpec, regions: np.ndarray, years: np.ndarray) -> list[np.ndarray]:
    factors: list[np.ndarray] = []
    for fe in spec.fixed_effects:
        if fe == "region":
            keys = regions
        elif fe == "year":
            keys = years
        else:  # state_by_year
            keys = np.array([f"{state_of(r)}:{y}" for r, y in zip(regions, years)])
        factors.append(np.unique(keys, return_inverse=True)[1])
    if not factors:
        factors.append(np.zeros(len(regions), dtype=np.intp))  # grand mean / intercept
    return factors


def _warn_singletons(factors: Sequence[np.ndarray], spec_name: str) -> None:
    for k, codes in enumerate(factors):
        counts = np.bincount(codes)
        singletons = int((counts == 1).sum())
        if singletons:
            logger.warning(
                "spec '%s': factor %d has %d singleton groups "
                "(they demean to zero but count toward degrees of freedom)",
                spec_name,
                k,
                singletons,
            )


def _weighted_norms(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.sqrt((w[:, None] * X * X).sum(axis=0))


def fit(
    panel: PanelDataset,
    exposures: Mapping[str, ExposureSeries] | None,
    spec: ModelSpec,
    weights_base: str = "annual",
    correction: str = "cr1",
) -> FitResult:
    """Estimate a specification: standardize, absorb, solve, and cluster.

    Coefficients on standardized regressors are in outcome units per one
    standard deviation; all other coefficients are per natural unit.
    """
    asm = _assemble(panel, exposures, spec, weights_base)
    factors = _fe_code_arrays(spec, asm.regions, asm.years)
    _warn_singletons(factors, spec.name)

    Xa, ya, info = absorb(asm.X, asm.y, factors, asm.weights)

    pre = _weighted_norms(asm.X, asm.weights)
    post = _weighted_norms(Xa, asm.weights)
    absorbed = post <= COLLINEARITY_RTOL * pre
    pruned_names = [asm.names[k] for k in range(len(asm.names)) if absorbed[k]]
    if pruned_names:
        logger.info(
            "spec '%s': columns absorbed by fixed effects: %s", spec.name, pruned_names
        )
    keep = [k for k in range(len(asm.names)) if not absorbed[k]]
    if not keep:
        raise RankDeficientError(pruned_names)
    kept_names = [asm.names[k] for k in keep]

    solved = wls(Xa[:, keep], ya, asm.weights, names=kept_names)
    pruned_names += [kept_names[i] for i in solved.pruned]
    final_names = [kept_names[i] for i in solved.kept]
    X_final = Xa[:, keep][:, list(solved.kept)]

    fe_dof = fe_span_dof(factors)
    clusters = np.array([state_of(r) for r in asm.regions])
    vcov = cluster_vcov(
        X_final, solved.residuals, asm.weights, clusters, fe_dof=fe_dof, correction=correction
    )
    se = np.sqrt(np.maximum(np.diag(vcov), 0.0))
    n_clusters = len(np.unique(clusters))
    dof_t = n_clusters - 1
    t_crit = float(stats.t.ppf(0.975, dof_t))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0, solved.beta / se, np.inf)
    p_values = 2.0 * stats.t.sf(np.abs(t_stats), dof_t)

    w = asm.weights
    wmean = float(np.average(asm.y, weights=w))
    ss_tot = float(np.sum(w * (asm.y - wmean) ** 2))
    ss_res = float(np.sum(w * solved.residuals**2))
    n = len(asm.y)
    k_params = len(final_names) + fe_dof
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else np.nan
    adj_r2 = (
        1.0 - (1.0 - r2) * (n - 1.0) / (n - k_params) if n > k_params else np.nan
    )

    return FitResult(
        spec_name=spec.name,
        outcome=spec.outcome,
        coefficients={name: float(b) for name, b in zip(final_names, solved.beta)},
        cluster_se={name: float(s) for name, s in zip(final_names, se)},
        ci95={
            name: (float(b - t_crit * s), float(b + t_crit * s))
            for name, b, s in zip(final_names, solved.beta, se)
        },
        p_values={name: float(p) for name, p in zip(final_names, p_values)},
        n_obs=n,
        n_clusters=n_clusters,
        r2=r2,
        adj_r2=adj_r2,
        dof_model=k_params,
        fe_dof=fe_dof,
        residuals=solved.residuals,
        pruned=tuple(pruned_names),
        convergence=info,
        standardization=asm.standardization,
    )


def dummy_ols_oracle(
    panel: PanelDataset,
    exposures: Mapping[str, ExposureSeries] | None,
    spec: ModelSpec,
    weights_base: str = "annual",
    correction: str = "cr1",
    max_dummies: int = 2000,
) -> FitResult:
    """Estimate the same model with explicit fixed-effect indicator columns.

    One level is dropped per factor and an intercept is always included, so a
    spec with no fixed effects is the same WLS ``fit`` runs. Slope estimates
    must agree with ``fit`` to high precision (Frisch-Waugh-Lovell); used only
    at desk scale.
    """
    asm = _assemble(panel, exposures, spec, weights_base)
    factors = _fe_code_arrays(spec, asm.regions, asm.years)

    n = len(asm.y)
    blocks = [asm.X, np.ones((n, 1))]
    names: list[str] = list(asm.names) + ["_intercept"]
    n_dummies = 0
    for f, codes in enumerate(factors):
        levels = int(codes.max()) + 1
        n_dummies += levels - 1
        if levels > 1:
            block = np.zeros((n, levels - 1))
            for level in range(1, levels):
                block[:, level - 1] = codes == level
            blocks.append(block)
            names += [f"_fe{f}_{level}" for level in range(1, levels)]
    if n_dummies > max_dummies:
        raise TooManyDummiesError(n_dummies, max_dummies)

    X_full = np.column_stack(blocks)
    solved = wls(X_full, asm.y, asm.weights, names=names)
    kept_names = [names[i] for i in solved.kept]
    pruned_slopes = tuple(
        names[i] for i in solved.pruned if names[i] in asm.names
    )

    clusters = np.array([state_of(r) for r in asm.regions])
    vcov = cluster_vcov(
        X_full[:, list(solved.kept)],
        solved.residuals,
        asm.weights,
        clusters,
        fe_dof=0,
        correction=correction,
    )
    se_all = np.sqrt(np.maximum(np.diag(vcov), 0.0))
    n_clusters = len(np.unique(clusters))
    dof_t = n_clusters - 1
    t_crit = float(stats.t.ppf(0.975, dof_t))

    coefficients, cluster_se, ci95, p_values = {}, {}, {}, {}
    for pos, name in enumerate(kept_names):
        if name not in asm.names:
            continue
        b, s = float(solved.beta[pos]), float(se_all[pos])
        coefficients[name] = b
        cluster_se[name] = s
        ci95[name] = (b - t_crit * s, b + t_crit * s)
        t_stat = b / s if s > 0 else np.inf
        p_values[name] = float(2.0 * stats.t.sf(abs(t_stat), dof_t))

    w = asm.weights
    wmean = float(np.average(asm.y, weights=w))
    ss_tot = float(np.sum(w * (asm.y - wmean) ** 2))
    ss_res = float(np.sum(w * solved.residuals**2))
    k_params = len(solved.kept)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else np.nan
    adj_r2 = (
        1.0 - (1.0 - r2) * (n - 1.0) / (n - k_params) if n > k_params else np.nan
    )
    return FitResult(
        spec_name=spec.name,
        outcome=spec.outcome,
        coefficients=coefficients,
        cluster_se=cluster_se,
        ci95=ci95,
        p_values=p_values,
        n_obs=n,
        n_clusters=n_clusters,
        r2=r2,
        adj_r2=adj_r2,
        dof_model=k_params,
        fe_dof=k_params - len(coefficients),
        residuals=solved.residuals,
        pruned=pruned_slopes,
        convergence=AbsorptionInfo(0, 0.0),
        standardization=asm.standardization,
    )
