"""Acceptance criteria for the full engine.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them all).
Headline magnitudes from restricted-data analyses are not reproducible at desk
scale, so acceptance rests on oracle equivalence, invariants, Monte Carlo
recovery of planted coefficients, and the performance/determinism envelope.
"""

import hashlib
import json
import time
from pathlib import Path

import numpy as np

import sociospatial as ss
from sociospatial.cli import main
from sociospatial.exposure import standardize
from sociospatial.regress import cluster_vcov, dummy_ols_oracle, fit
from sociospatial.synthlab import (
    DgpConfig,
    brute_force_delta,
    brute_force_exposures,
    generate_network,
    simulate_panel,
)


def report(name: str, passed: bool, detail: str = ""):
    line = f"[{'PASS' if passed else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert passed, line


def small_sim(seed, fe_mode):
    cfg = DgpConfig(
        n_regions=10, n_states=3, n_years=8, seed=seed,
        adoption_schedule="random(0.5)", true_psi=-0.4, true_delta1=-0.15,
        fe_state_year_sd=0.3,
    )
    sim = simulate_panel(cfg, generate_network(cfg))
    if fe_mode == "region+year":
        spec = ss.build_spec("socio_spatial_m2")
    else:
        spec = ss.build_spec("erpo_social_spatial")
    return sim, spec


def test_fwl_oracle_equivalence():
    """fit() slopes match the dummy-variable regression on 25 fixtures."""
    start = time.time()
    worst = 0.0
    for seed in range(25):
        fe_mode = "region+year" if seed % 2 == 0 else "region+state_by_year"
        sim, spec = small_sim(seed, fe_mode)
        a = fit(sim.panel, sim.exposures, spec)
        b = dummy_ols_oracle(sim.panel, sim.exposures, spec)
        for name, value in b.coefficients.items():
            rel = abs(a.coefficients[name] - value) / max(1e-12, abs(value))
            worst = max(worst, rel)
    elapsed = time.time() - start
    report(
        "FWL/oracle equivalence (25 fixtures, both FE sets)",
        worst < 1e-8 and elapsed < 5.0,
        f"worst rel dev {worst:.2e}, {elapsed:.2f}s",
    )


def test_cluster_vcov_oracle():
    """Sandwich matches a direct per-cluster assembly; HC1 in the limit."""
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        n, k = 60, 4
        X = rng.normal(0, 1, (n, k))
        e = rng.normal(0, 1, n)
        w = rng.uniform(0.5, 3.0, n)
        clusters = rng.integers(0, 6, n)
        clusters[:6] = np.arange(6)
        got = cluster_vcov(X, e, w, clusters, fe_dof=2)
        meat = np.zeros((k, k))
        for g in range(6):
            s = np.zeros(k)
            for i in np.flatnonzero(clusters == g):
                s += w[i] * e[i] * X[i]
            meat += np.outer(s, s)
        bread = np.linalg.inv(X.T @ (w[:, None] * X))
        factor = (6 / 5) * ((n - 1) / (n - k - 2))
        ref = factor * bread @ meat @ bread
        worst = max(worst, float(np.abs(got - ref).max() / np.abs(ref).max()))

    rng = np.random.default_rng(99)
    n, k = 45, 3
    X = rng.normal(0, 1, (n, k))
    e = rng.normal(0, 1, n)
    w = rng.uniform(0.5, 2.0, n)
    got = cluster_vcov(X, e, w, np.arange(n))
    xtwx_inv = np.linalg.inv(X.T @ (w[:, None] * X))
    hc1 = (n / (n - k)) * xtwx_inv @ (X.T @ ((w * e) ** 2 * X.T).T) @ xtwx_inv
    hc1_dev = float(np.abs(got - hc1).max() / np.abs(hc1).max())
    report(
        "cluster vcov oracle (10 fixtures + HC1 degenerate case)",
        worst < 1e-10 and hc1_dev < 1e-10,
        f"worst rel dev {worst:.2e}, HC1 dev {hc1_dev:.2e}",
    )


def test_exposure_oracle_and_bounds():
    """All five exposure operations vs brute force; convexity and [0,1]."""
    worst = 0.0
    for seed in range(6):
        cfg = DgpConfig(
            n_regions=12, n_states=3, n_years=6, seed=seed,
            adoption_schedule="random(0.6)", network_density=0.85,
        )
        sim = simulate_panel(cfg, generate_network(cfg))
        dm = ss.DistanceMatrix.from_geography(sim.inputs.geography, sim.panel.regions)
        engine = {
            "social_proximity": ss.deaths_in_social_proximity(sim.panel, sim.inputs.network),
            "spatial_proximity": ss.deaths_in_spatial_proximity(sim.panel, dm),
            "erpo_social_exposure": ss.erpo_social_exposure(
                sim.inputs.network, sim.policy, sim.panel.regions, sim.panel.years
            ),
            "erpo_spatial_exposure": ss.erpo_spatial_exposure(
                dm, sim.policy, sim.panel.regions, sim.panel.years
            ),
        }
        oracle = brute_force_exposures(
            sim.panel, sim.inputs.network, sim.inputs.geography, sim.policy
        )
        for name, reference in oracle.items():
            for key, value in reference.items():
                dev = abs(engine[name].value(*key) - value) / max(1.0, abs(value))
                worst = max(worst, dev)
        if len(sim.policy.adoption) and sim.exposures["erpo_social_exposure"].matrix.std() > 0:
            y0, y1 = sim.panel.years[0], sim.panel.years[-1]
            ref_delta = brute_force_delta(oracle["erpo_social_exposure"], y0, y1)
            got_delta = ss.exposure_delta(
                standardize(engine["erpo_social_exposure"]), y0, y1
            )
            for region, value in ref_delta.items():
                worst = max(worst, abs(got_delta[region] - value))

    # convexity and [0,1] bounds at 100 regions
    bounds_ok = True
    for seed in (101, 202):
        cfg = DgpConfig(n_regions=100, n_states=20, n_years=5, seed=seed,
                        adoption_schedule="random(0.5)")
        sim = simulate_panel(cfg, generate_network(cfg))
        dm = ss.DistanceMatrix.from_geography(sim.inputs.geography, sim.panel.regions)
        rates, _ = sim.panel.rate_matrix()
        for series in (
            ss.deaths_in_social_proximity(sim.panel, sim.inputs.network),
            ss.deaths_in_spatial_proximity(sim.panel, dm),
        ):
            for i in range(100):
                others = np.delete(rates, i, axis=0)
                row = series.matrix[i]
                bounds_ok &= bool(
                    (row >= others.min(axis=0) - 1e-10).all()
                    and (row <= others.max(axis=0) + 1e-10).all()
                )
        for series in (
            ss.erpo_social_exposure(
                sim.inputs.network, sim.policy, sim.panel.regions, sim.panel.years
            ),
            ss.erpo_spatial_exposure(dm, sim.policy, sim.panel.regions, sim.panel.years),
        ):
            bounds_ok &= bool(
                (series.matrix >= 0.0).all() and (series.matrix <= 1.0).all()
            )
    report(
        "exposure oracle (five operations, <=12 regions) + convexity/[0,1] bounds",
        worst < 1e-10 and bounds_ok,
        f"worst dev {worst:.2e}",
    )


def test_coefficient_recovery_monte_carlo():
    """Planted 3.0/0.8 with region+year FE: 3-SE hits and CI coverage."""
    start = time.time()
    n_reps = 200
    hits = {"social_proximity": 0, "spatial_proximity": 0}
    covered = {"social_proximity": 0, "spatial_proximity": 0}
    truth = {"social_proximity": 3.0, "spatial_proximity": 0.8}
    for seed in range(n_reps):
        cfg = DgpConfig(n_regions=100, n_states=50, n_years=13, seed=seed)
        sim = simulate_panel(cfg, generate_network(cfg))
        result = fit(sim.panel, sim.exposures, ss.build_spec("socio_spatial_m2"))
        for name in truth:
            est, se = result.coefficients[name], result.cluster_se[name]
            lo, hi = result.ci95[name]
            hits[name] += abs(est - truth[name]) <= 3 * se
            covered[name] += lo <= truth[name] <= hi
    elapsed = time.time() - start
    hit_rates = {k: v / n_reps for k, v in hits.items()}
    coverages = {k: v / n_reps for k, v in covered.items()}
    ok = (
        all(v >= 0.99 for v in hit_rates.values())
        and all(0.92 <= v <= 0.98 for v in coverages.values())
        and elapsed < 120.0
    )
    report(
        "coefficient recovery Monte Carlo (200 seeds, 100 regions x 13 years)",
        ok,
        f"3SE {hit_rates}, coverage {coverages}, {elapsed:.0f}s",
    )


def test_policy_exposure_recovery_monte_carlo():
    """Planted -0.2 policy-share effect under staggered adoption and
    state-by-year fixed effects: sign recovery and CI coverage."""
    n_reps = 200
    signs = coverage = 0
    for seed in range(n_reps):
        cfg = DgpConfig(
            n_regions=100, n_states=50, n_years=13, seed=seed,
            true_zeta1=0.0, true_zeta2=0.0, true_delta1=-0.2,
            noise_sd=0.1, fe_state_year_sd=0.5, adoption_schedule="random(0.5)",
        )
        sim = simulate_panel(cfg, generate_network(cfg))
        result = fit(sim.panel, sim.exposures, ss.build_spec("erpo_social"))
        est = result.coefficients["erpo_social_exposure"]
        lo, hi = result.ci95["erpo_social_exposure"]
        signs += est < 0
        coverage += lo <= -0.2 <= hi
    ok = signs / n_reps >= 0.99 and 0.92 <= coverage / n_reps <= 0.98
    report(
        "policy-exposure recovery Monte Carlo (200 seeds, state-by-year FE)",
        ok,
        f"sign {signs / n_reps}, coverage {coverage / n_reps}",
    )


def test_age_standardization_rules():
    """Uniform-rate invariance and the 9-vs-10 deaths suppression boundary."""
    from sociospatial.agestd import age_adjusted_rate
    from sociospatial.coredata import AgeStratifiedCounts, N_AGE_GROUPS, StandardPopulation

    rng = np.random.default_rng(0)
    std = StandardPopulation(rng.uniform(0.5, 2.0, N_AGE_GROUPS))
    population = np.full(N_AGE_GROUPS, 40_000)
    uniform = age_adjusted_rate(
        AgeStratifiedCounts(np.full(N_AGE_GROUPS, 2), population), std
    )
    r = 100_000.0 * 2 / 40_000
    uniform_ok = not uniform.suppressed and abs(uniform.value - r) <= 1e-10

    nine = np.zeros(N_AGE_GROUPS, dtype=int)
    nine[:9] = 1
    ten = np.zeros(N_AGE_GROUPS, dtype=int)
    ten[:10] = 1
    suppressed = age_adjusted_rate(AgeStratifiedCounts(nine, population), std)
    reported = age_adjusted_rate(AgeStratifiedCounts(ten, population), std)
    boundary_ok = suppressed.suppressed and not reported.suppressed
    report(
        "age standardization: uniform-rate invariance + suppression boundary",
        uniform_ok and boundary_ok,
        f"|adjusted - r| = {abs(uniform.value - r):.1e}",
    )


def test_scale_invariance_end_to_end():
    """Global SCI and distance rescaling leave weights, exposures, and fit
    estimates unchanged."""
    cfg = DgpConfig(n_regions=40, n_states=8, n_years=6, seed=55,
                    adoption_schedule="random(0.6)", true_delta1=-0.2,
                    fe_state_year_sd=0.3)
    sim = simulate_panel(cfg, generate_network(cfg))
    panel, net, geo = sim.panel, sim.inputs.network, sim.inputs.geography
    dm = ss.DistanceMatrix.from_geography(geo, panel.regions)
    scaled_net = net.scaled(1871.3)
    scaled_dm = dm.scaled(0.037)

    def all_series(network, distances):
        return {
            "social_proximity": ss.deaths_in_social_proximity(panel, network),
            "spatial_proximity": ss.deaths_in_spatial_proximity(panel, distances),
            "erpo_social_exposure": ss.erpo_social_exposure(
                network, sim.policy, panel.regions, panel.years
            ),
            "erpo_spatial_exposure": ss.erpo_spatial_exposure(
                distances, sim.policy, panel.regions, panel.years
            ),
        }

    base = all_series(net, dm)
    scaled = all_series(scaled_net, scaled_dm)
    worst = 0.0
    for name in base:
        worst = max(worst, float(np.abs(base[name].matrix - scaled[name].matrix).max()))
    # SCI rescaling leaves the social series identical; distance rescaling the
    # spatial series; fit estimates must then agree too
    spec = ss.build_spec("erpo_social_spatial")
    fit_base = fit(panel, base, spec)
    fit_scaled = fit(panel, scaled, spec)
    for name, value in fit_base.coefficients.items():
        worst = max(worst, abs(fit_scaled.coefficients[name] - value))
        worst = max(worst, abs(fit_scaled.cluster_se[name] - fit_base.cluster_se[name]))
    report(
        "scale invariance: SCI x c and distance x c leave results unchanged",
        worst < 1e-10,
        f"worst abs dev {worst:.2e}",
    )


def test_performance_envelope():
    """Exposure construction at 3,100 regions and a 40k-row two-factor fit."""
    cfg = DgpConfig(
        n_regions=3100, n_states=51, n_years=13, seed=2024,
        adoption_schedule="random(0.4)", true_delta1=-0.2, fe_state_year_sd=0.5,
    )
    inputs = generate_network(cfg)
    sim = simulate_panel(cfg, inputs)

    start = time.time()
    dm = ss.DistanceMatrix.from_geography(inputs.geography, sim.panel.regions)
    ss.deaths_in_social_proximity(sim.panel, inputs.network)
    ss.deaths_in_spatial_proximity(sim.panel, dm)
    ss.erpo_social_exposure(inputs.network, sim.policy, sim.panel.regions, sim.panel.years)
    ss.erpo_spatial_exposure(dm, sim.policy, sim.panel.regions, sim.panel.years)
    exposure_time = time.time() - start

    start = time.time()
    result = fit(sim.panel, sim.exposures, ss.build_spec("erpo_social_spatial"))
    fit_time = time.time() - start
    report(
        "performance envelope (3,100 regions dense; 40,300-row two-factor fit)",
        exposure_time < 30.0 and fit_time < 10.0,
        f"exposures {exposure_time:.1f}s (<30s), fit {fit_time:.1f}s (<10s), "
        f"n_obs {result.n_obs}",
    )


def test_pipeline_determinism(tmp_path):
    """simulate -> exposures -> fit -> report is byte-identical across runs."""
    def run(root: Path) -> dict[str, str]:
        root.mkdir()
        assert main(["simulate", "--out", str(root / "bundle"), "--seed", "31416"]) == 0
        config = {
            "inputs": {
                "panel": str(root / "bundle" / "panel.csv"),
                "sci": str(root / "bundle" / "sci.csv"),
                "geography": str(root / "bundle" / "geography.csv"),
                "policy": str(root / "bundle" / "policy.csv"),
                "elections": str(root / "bundle" / "elections.csv"),
                "age": str(root / "bundle" / "age_counts.csv"),
                "standard_population": str(root / "bundle" / "standard_population.csv"),
            },
            "out": str(root / "out"),
            "specs": ["socio_spatial_m2", "erpo_social", "erpo_social_spatial"],
        }
        path = root / "run.json"
        path.write_text(json.dumps(config))
        assert main(["exposures", "--config", str(path)]) == 0
        assert main(["fit", "--config", str(path)]) == 0
        assert main(["report", "--config", str(path)]) == 0
        digests = {}
        for f in sorted(root.rglob("*")):
            if f.is_file() and f.name != "run.json":
                digests[str(f.relative_to(root))] = hashlib.sha256(f.read_bytes()).hexdigest()
        return digests

    first = run(tmp_path / "a")
    second = run(tmp_path / "b")
    report(
        "pipeline determinism (simulate/exposures/fit/report, two runs)",
        first == second,
        f"{len(first)} artifacts compared",
    )
