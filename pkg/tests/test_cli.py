"""CLI pipeline behavior: stages, exit codes, determinism."""

import hashlib
import json
from pathlib import Path

import pytest

from sociospatial.cli import main

DGP = {
    "n_regions": 24,
    "n_states": 6,
    "n_years": 5,
    "seed": 404,
    "adoption_schedule": "random(0.7)",
    "true_psi": -0.4,
}


def tree_digest(root: Path) -> dict[str, str]:
    digests = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digests[str(path.relative_to(root))] = hashlib.sha256(
                path.read_bytes()
            ).hexdigest()
    return digests


@pytest.fixture
def workspace(tmp_path):
    dgp_path = tmp_path / "dgp.json"
    dgp_path.write_text(json.dumps(DGP))
    assert main(["simulate", "--config", str(dgp_path), "--out", str(tmp_path / "bundle")]) == 0
    config = {
        "inputs": {
            key: str(tmp_path / "bundle" / name)
            for key, name in (
                ("panel", "panel.csv"),
                ("sci", "sci.csv"),
                ("geography", "geography.csv"),
                ("policy", "policy.csv"),
                ("elections", "elections.csv"),
                ("age", "age_counts.csv"),
                ("standard_population", "standard_population.csv"),
            )
        },
        "out": str(tmp_path / "out"),
        "specs": [
            "socio_spatial_m1",
            "socio_spatial_m2",
            "erpo_direct",
            "robustness_social_control",
        ],
    }
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps(config))
    return tmp_path, config_path, config


class TestSimulate:
    def test_manifest_echoes_truths(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path / "b"), "--seed", "7"]) == 0
        manifest = json.loads((tmp_path / "b" / "manifest.json").read_text())
        assert manifest["truths"]["zeta1"] == 3.0
        assert manifest["config"]["seed"] == 7

    def test_invalid_config_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"n_regions": 3, "n_states": 9}))
        assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "b")]) == 2

    def test_same_seed_identical_bundles(self, tmp_path):
        for name in ("b1", "b2"):
            assert main(["simulate", "--out", str(tmp_path / name), "--seed", "55"]) == 0
        assert tree_digest(tmp_path / "b1") == tree_digest(tmp_path / "b2")


class TestExposures:
    def test_writes_all_series_and_delta(self, workspace):
        tmp_path, config_path, _ = workspace
        assert main(["exposures", "--config", str(config_path)]) == 0
        exposure_dir = tmp_path / "out" / "exposures"
        names = sorted(p.name for p in exposure_dir.glob("*.csv"))
        expected = {
            "social_proximity.csv",
            "spatial_proximity.csv",
            "social_proximity_age_adjusted.csv",
            "spatial_proximity_age_adjusted.csv",
            "erpo_social_exposure.csv",
            "erpo_spatial_exposure.csv",
        }
        assert expected.issubset(set(names))
        assert any(n.startswith("delta_erpo_social_exposure") for n in names)
        # every exported file parses back
        from sociospatial.exposure import load_exposure

        for name in expected:
            series = load_exposure(str(exposure_dir / name))
            assert series.matrix.size > 0
        assert (exposure_dir / "summary.json").exists()
        assert (tmp_path / "out" / "suppression_log.csv").exists()

    def test_missing_geography_exits_2(self, workspace, capsys):
        tmp_path, config_path, config = workspace
        config["inputs"]["geography"] = str(tmp_path / "nope.csv")
        config_path.write_text(json.dumps(config))
        assert main(["exposures", "--config", str(config_path)]) == 2
        err = capsys.readouterr().err
        assert "nope.csv" in err and "error" in err

    def test_rerun_byte_identical(self, workspace):
        tmp_path, config_path, _ = workspace
        assert main(["exposures", "--config", str(config_path)]) == 0
        first = tree_digest(tmp_path / "out")
        assert main(["exposures", "--config", str(config_path)]) == 0
        assert tree_digest(tmp_path / "out") == first


class TestFit:
    def test_fit_writes_artifacts(self, workspace, capsys):
        tmp_path, config_path, _ = workspace
        assert main(["fit", "--config", str(config_path), "--spec", "socio_spatial_m2"]) == 0
        payload = json.loads((tmp_path / "out" / "fits" / "socio_spatial_m2.json").read_text())
        assert "social_proximity" in payload["coefficients"]
        assert payload["n_obs"] == 24 * 5
        table = (tmp_path / "out" / "fits" / "socio_spatial_m2.txt").read_text()
        assert "spatial_proximity" in table
        out = capsys.readouterr().out
        assert "Observations" in out

    def test_unknown_spec_name_exits_2(self, workspace):
        _, config_path, _ = workspace
        assert main(["fit", "--config", str(config_path), "--spec", "not_a_spec"]) == 2

    def test_unresolvable_regressor_exits_3(self, workspace, capsys):
        tmp_path, config_path, config = workspace
        config["inputs"].pop("policy")  # no policy file: ERPO series unavailable
        config_path.write_text(json.dumps(config))
        assert main(["fit", "--config", str(config_path), "--spec", "erpo_social"]) == 3
        assert "erpo_social_exposure" in capsys.readouterr().err

    def test_age_adjusted_spec(self, workspace):
        tmp_path, config_path, _ = workspace
        code = main(
            ["fit", "--config", str(config_path), "--spec", "socio_spatial_m2_age_adjusted"]
        )
        assert code == 0
        payload = json.loads(
            (tmp_path / "out" / "fits" / "socio_spatial_m2_age_adjusted.json").read_text()
        )
        assert payload["outcome"] == "age_adjusted"
        # suppressed cells leave the estimation sample
        assert payload["n_obs"] <= 24 * 5

    def test_uses_exposure_files_when_present(self, workspace):
        tmp_path, config_path, _ = workspace
        assert main(["exposures", "--config", str(config_path)]) == 0
        assert main(["fit", "--config", str(config_path), "--spec", "socio_spatial_m2"]) == 0

    def test_fit_rerun_byte_identical(self, workspace):
        tmp_path, config_path, _ = workspace
        assert main(["fit", "--config", str(config_path), "--spec", "socio_spatial_m2"]) == 0
        first = tree_digest(tmp_path / "out" / "fits")
        assert main(["fit", "--config", str(config_path), "--spec", "socio_spatial_m2"]) == 0
        assert tree_digest(tmp_path / "out" / "fits") == first


class TestReport:
    def test_report_before_fit_exits_4(self, workspace):
        _, config_path, _ = workspace
        assert main(["report", "--config", str(config_path)]) == 4

    def test_zero_specs_exits_4(self, workspace):
        tmp_path, config_path, config = workspace
        config["specs"] = []
        config_path.write_text(json.dumps(config))
        assert main(["report", "--config", str(config_path)]) == 4

    def test_three_column_report(self, workspace):
        tmp_path, config_path, _ = workspace
        assert main(["fit", "--config", str(config_path)]) == 0
        assert main(["report", "--config", str(config_path)]) == 0
        table = (tmp_path / "out" / "report" / "report.txt").read_text()
        assert "socio_spatial_m1" in table
        assert "socio_spatial_m2" in table
        assert "erpo_direct" in table
        aggregate = json.loads((tmp_path / "out" / "report" / "report.json").read_text())
        assert set(aggregate) == {
            "socio_spatial_m1",
            "socio_spatial_m2",
            "erpo_direct",
            "robustness_social_control",
        }


class TestOptions:
    def test_tab_delimited_pipeline(self, tmp_path):
        dgp = tmp_path / "dgp.json"
        dgp.write_text(json.dumps({**DGP, "seed": 808}))
        assert main([
            "simulate", "--config", str(dgp),
            "--out", str(tmp_path / "bundle"), "--delimiter", "\t",
        ]) == 0
        header = (tmp_path / "bundle" / "panel.csv").read_text().splitlines()[0]
        assert "\t" in header
        config = {
            "inputs": {
                "panel": str(tmp_path / "bundle" / "panel.csv"),
                "sci": str(tmp_path / "bundle" / "sci.csv"),
                "geography": str(tmp_path / "bundle" / "geography.csv"),
                "policy": str(tmp_path / "bundle" / "policy.csv"),
            },
            "out": str(tmp_path / "out"),
            "specs": ["socio_spatial_m2"],
            "options": {"delimiter": "\t"},
        }
        path = tmp_path / "run.json"
        path.write_text(json.dumps(config))
        assert main(["exposures", "--config", str(path)]) == 0
        assert main(["fit", "--config", str(path)]) == 0

    def test_option_overrides_change_results(self, workspace):
        tmp_path, config_path, config = workspace
        assert main(["fit", "--config", str(config_path), "--spec", "socio_spatial_m2",
                     "--cr", "cr1"]) == 0
        cr1 = json.loads((tmp_path / "out" / "fits" / "socio_spatial_m2.json").read_text())
        assert main(["fit", "--config", str(config_path), "--spec", "socio_spatial_m2",
                     "--cr", "cr0"]) == 0
        cr0 = json.loads((tmp_path / "out" / "fits" / "socio_spatial_m2.json").read_text())
        name = "social_proximity"
        assert cr0["coefficients"][name] == cr1["coefficients"][name]
        assert cr0["cluster_se"][name] < cr1["cluster_se"][name]

    def test_include_self_and_social_base_options(self, workspace):
        tmp_path, config_path, config = workspace
        config["options"] = {
            "denominator": "include-self",
            "social_population_base": "annual",
            "weights_base": "fixed",
        }
        config_path.write_text(json.dumps(config))
        assert main(["exposures", "--config", str(config_path)]) == 0
        assert main(["fit", "--config", str(config_path), "--spec", "erpo_direct"]) == 0

    def test_stale_exposure_file_is_reported_not_a_traceback(self, workspace):
        tmp_path, config_path, _ = workspace
        assert main(["exposures", "--config", str(config_path)]) == 0
        # corrupt a series so it no longer covers the panel's regions
        path = tmp_path / "out" / "exposures" / "social_proximity.csv"
        lines = path.read_text().splitlines()
        keep = [lines[0]] + [l for l in lines[1:] if not l.startswith(lines[1].split(",")[0])]
        path.write_text("\n".join(keep) + "\n")
        assert main(["fit", "--config", str(config_path), "--spec", "socio_spatial_m2"]) == 3


class TestEndToEndDeterminism:
    def test_full_pipeline_byte_identical(self, tmp_path):
        digests = []
        for run in ("r1", "r2"):
            root = tmp_path / run
            root.mkdir()
            assert main(["simulate", "--out", str(root / "bundle"), "--seed", "99"]) == 0
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
                "specs": ["socio_spatial_m2", "erpo_social"],
            }
            config_path = root / "run.json"
            config_path.write_text(json.dumps(config))
            assert main(["exposures", "--config", str(config_path)]) == 0
            assert main(["fit", "--config", str(config_path)]) == 0
            assert main(["report", "--config", str(config_path)]) == 0
            bundle = tree_digest(root / "bundle")
            out = tree_digest(root / "out")
            digests.append((bundle, out))
        assert digests[0] == digests[1]
