"""Command-line pipeline: simulate -> exposures -> fit -> report.

Each stage writes durable, deterministic intermediates under the output
directory, so expensive exposure construction is reused across fitted
specifications. Exit codes: 0 ok, 2 input validation, 3 estimation,
4 missing artifact.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import agestd, specs as spec_registry
from .coredata import (
    DEFAULT_COVARIATES,
    PanelDataset,
    PanelSchema,
    carry_forward_political,
    load_age_counts,
    load_elections,
    load_geography,
    load_panel,
    load_policy,
    load_sci,
    load_standard_population,
)
from .errors import ConfigError, MissingYearError, SociospatialError, ZeroVarianceError
from .exposure import (
    ExposureSeries,
    deaths_in_social_proximity,
    deaths_in_spatial_proximity,
    erpo_social_exposure,
    erpo_spatial_exposure,
    exposure_delta,
    load_exposure,
    standardize,
    write_delta,
    write_exposure,
)
from .geo import DistanceMatrix
from .regress import FitResult, fit, format_table
from .synthlab import DgpConfig, generate_network, simulate_panel, write_bundle

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ESTIMATION = 3
EXIT_MISSING_ARTIFACT = 4

INPUT_KEYS = ("panel", "sci", "geography", "policy", "elections", "age", "standard_population")

DEFAULT_OPTIONS = {
    "delimiter": ",",
    "strict": False,
    "denominator": "exclude-self",       # Eq-5-style share: self pair in denominator?
    "weights_base": "annual",            # regression population weights
    "social_population_base": "first_year",  # alter populations in social weights
    "cr": "cr1",
    "delta_years": None,                 # [y0, y1]; default first/last panel year
}


def _diagnostic(exc: Exception) -> None:
    print(
        f"sociospatial: error kind={type(exc).__name__} detail={exc}",
        file=sys.stderr,
    )


@dataclass(eq=False)
class RunConfig:
    inputs: dict[str, str]
    out: str
    specs: tuple[str, ...]
    options: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str, overrides: dict | None = None) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        inputs = dict(raw.get("inputs", {}))
        unknown = set(inputs) - set(INPUT_KEYS)
        if unknown:
            raise ConfigError(f"unknown input keys {sorted(unknown)}")
        names = list(raw.get("specs", []))
        if len(names) != len(set(names)):
            raise ConfigError("spec names must be unique")
        for name in names:
            if name not in spec_registry.SPEC_NAMES:
                raise ConfigError(
                    f"unknown spec '{name}'; known: {', '.join(spec_registry.SPEC_NAMES)}"
                )
        options = dict(DEFAULT_OPTIONS)
        raw_options = dict(raw.get("options", {}))
        unknown = set(raw_options) - set(DEFAULT_OPTIONS)
        if unknown:
            raise ConfigError(f"unknown option keys {sorted(unknown)}")
        options.update(raw_options)
        out = raw.get("out", "out")
        config = cls(inputs, out, tuple(names), options)
        if overrides:
            config.apply_overrides(overrides)
        return config

    def apply_overrides(self, overrides: dict) -> None:
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "out":
                self.out = value
            else:
                self.options[key] = value

    def input_path(self, key: str) -> str | None:
        return self.inputs.get(key)

    def validate_inputs(self, required: tuple[str, ...]) -> None:
        for key in required:
            path = self.inputs.get(key)
            if not path:
                raise ConfigError(f"config is missing required input '{key}'")
            if not os.path.exists(path):
                raise ConfigError(f"input file for '{key}' does not exist: {path}")
        for key, path in self.inputs.items():
            if path and not os.path.exists(path):
                raise ConfigError(f"input file for '{key}' does not exist: {path}")


@dataclass(eq=False)
class PipelineData:
    panel: PanelDataset
    net: object
    geo: object
    dm: DistanceMatrix
    policy: object | None
    age: object | None
    std: object | None
    adjusted_panel: PanelDataset | None = None


def _panel_schema_for(path: str, delimiter: str) -> PanelSchema:
    """Schema over the canonical covariate columns actually in the file."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh, delimiter=delimiter))
    present = [c for c in DEFAULT_COVARIATES if c in header]
    return PanelSchema(covariates={c: c for c in present})


def _attach_political(panel: PanelDataset, elections, strict: bool) -> PanelDataset:
    mapping = carry_forward_political(elections, panel.years, strict=strict)
    covered = {region for region, _ in mapping}
    keep = [r for r in panel.regions if r in covered]
    missing = sorted(set(panel.regions) - covered)
    if missing:
        logger.warning(
            "dropping %d regions without derivable political leaning: %s",
            len(missing),
            missing[:10],
        )
        panel = panel.restrict_regions(keep)
    frame = panel.frame.copy()
    frame["political_affiliation"] = [
        float(mapping[(r, int(y))]) for r, y in zip(frame["region"], frame["year"])
    ]
    return PanelDataset(frame, panel.covariates + ("political_affiliation",), panel.dropped)


def _load_pipeline(config: RunConfig) -> PipelineData:
    config.validate_inputs(required=("panel", "sci", "geography"))
    delimiter = config.options["delimiter"]
    strict = bool(config.options["strict"])

    schema = _panel_schema_for(config.inputs["panel"], delimiter)
    panel = load_panel(config.inputs["panel"], schema, delimiter, strict=strict)
    net = load_sci(config.inputs["sci"], delimiter)
    geo = load_geography(config.inputs["geography"], delimiter)

    # regions must have a centroid and a row in the connectedness network
    usable = [r for r in panel.regions if r in geo and r in set(net.region_index)]
    excluded = sorted(set(panel.regions) - set(usable))
    if excluded:
        if strict:
            raise ConfigError(
                f"{len(excluded)} panel regions lack a centroid or network row: "
                f"{excluded[:10]}"
            )
        logger.warning(
            "dropping %d regions without centroid or network row: %s",
            len(excluded),
            excluded[:10],
        )
        panel = panel.restrict_regions(usable)

    if "political_affiliation" not in panel.covariates and config.inputs.get("elections"):
        elections = load_elections(config.inputs["elections"], delimiter)
        panel = _attach_political(panel, elections, strict)

    dm = DistanceMatrix.from_geography(geo, panel.regions)
    policy = (
        load_policy(config.inputs["policy"], delimiter)
        if config.inputs.get("policy")
        else None
    )
    age = (
        load_age_counts(config.inputs["age"], delimiter)
        if config.inputs.get("age")
        else None
    )
    std = (
        load_standard_population(config.inputs["standard_population"], delimiter)
        if config.inputs.get("standard_population")
        else None
    )
    data = PipelineData(panel, net, geo, dm, policy, age, std)
    if age is not None and std is not None:
        data.adjusted_panel = agestd.build_age_adjusted_panel(panel, age, std)
    return data


def _build_raw_exposures(data: PipelineData, config: RunConfig) -> dict[str, ExposureSeries]:
    """Every exposure series the loaded inputs can support, unstandardized."""
    social_base = config.options["social_population_base"]
    series = {
        "social_proximity": deaths_in_social_proximity(
            data.panel, data.net, "crude", social_base
        ),
        "spatial_proximity": deaths_in_spatial_proximity(data.panel, data.dm, "crude"),
    }
    if data.adjusted_panel is not None:
        series["social_proximity_age_adjusted"] = deaths_in_social_proximity(
            data.adjusted_panel, data.net, "age_adjusted", social_base
        )
        series["spatial_proximity_age_adjusted"] = deaths_in_spatial_proximity(
            data.adjusted_panel, data.dm, "age_adjusted"
        )
    if data.policy is not None:
        include_self = config.options["denominator"] == "include-self"
        series["erpo_social_exposure"] = erpo_social_exposure(
            data.net, data.policy, data.panel.regions, data.panel.years, include_self
        )
        series["erpo_spatial_exposure"] = erpo_spatial_exposure(
            data.dm, data.policy, data.panel.regions, data.panel.years
        )
    return series


def _delta_years(config: RunConfig, panel: PanelDataset) -> tuple[int, int]:
    pair = config.options.get("delta_years")
    if pair is None:
        return panel.years[0], panel.years[-1]
    if len(pair) != 2:
        raise ConfigError("delta_years option must be a [y0, y1] pair")
    y0, y1 = int(pair[0]), int(pair[1])
    for year in (y0, y1):
        if year not in panel.years:
            raise MissingYearError(year, "panel")
    return y0, y1


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    try:
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    raw = json.load(fh)
            except FileNotFoundError:
                raise ConfigError(f"config file not found: {args.config}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad DGP config: {exc}") from None
        else:
            raw = {}
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = DgpConfig.from_dict(raw)
        inputs = generate_network(cfg)
        sim = simulate_panel(cfg, inputs)
        manifest = write_bundle(sim, args.out, args.delimiter)
    except (SociospatialError, OSError, TypeError, ValueError) as exc:
        _diagnostic(exc)
        return EXIT_VALIDATION
    print(
        f"wrote bundle to {args.out}: {manifest['n_regions']} regions, "
        f"{manifest['n_states']} states, years {manifest['years'][0]}-{manifest['years'][-1]}, "
        f"seed {cfg.seed}"
    )
    print(f"planted truths: {json.dumps(manifest['truths'], sort_keys=True)}")
    return EXIT_OK


def _exposure_dir(config: RunConfig) -> str:
    return os.path.join(config.out, "exposures")


def cmd_exposures(args) -> int:
    try:
        config = RunConfig.from_file(args.config, _overrides(args))
        data = _load_pipeline(config)
        raw_series = _build_raw_exposures(data, config)
        y0, y1 = _delta_years(config, data.panel)

        out_dir = _exposure_dir(config)
        os.makedirs(out_dir, exist_ok=True)
        summary = {}
        exported: dict[str, ExposureSeries] = {}
        for name in sorted(raw_series):
            try:
                series = standardize(raw_series[name])
            except ZeroVarianceError:
                # a constant series (e.g. no adoption anywhere) is valid data
                series = raw_series[name]
                logger.warning("series %s is constant; exported unstandardized", name)
            exported[name] = series
            write_exposure(
                series,
                os.path.join(out_dir, f"{name}.csv"),
                config.options["delimiter"],
            )
            mean = series.center if series.standardized else float(np.mean(series.matrix))
            sd = series.scale if series.standardized else float(np.std(series.matrix))
            summary[name] = {"mean": mean, "sd": sd, "n": int(series.matrix.size)}
            print(f"exposure {name}: mean={mean:.6g} sd={sd:.6g} (pre-standardization)")

        erpo_social = exported.get("erpo_social_exposure")
        if erpo_social is not None and erpo_social.standardized:
            delta = exposure_delta(erpo_social, y0, y1)
            delta_path = os.path.join(out_dir, f"delta_erpo_social_exposure_{y0}_{y1}.csv")
            write_delta(delta, delta_path, config.options["delimiter"])
            print(f"wrote {delta_path}")

        if data.adjusted_panel is not None:
            records = agestd.suppression_records(data.adjusted_panel)
            path = os.path.join(config.out, "suppression_log.csv")
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, delimiter=config.options["delimiter"], lineterminator="\n")
                writer.writerow(["fips", "year", "total_deaths"])
                writer.writerows(records)
            n_cells = data.adjusted_panel.n_obs
            print(
                f"suppressed cells: {len(records)} of {n_cells} "
                f"({100.0 * len(records) / n_cells:.2f}%)"
            )

        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except (SociospatialError, OSError, ValueError, KeyError) as exc:
        _diagnostic(exc)
        return EXIT_VALIDATION
    print(f"wrote {len(summary)} exposure files to {out_dir}")
    return EXIT_OK


def _resolve_exposures(
    data: PipelineData, config: RunConfig, needed: set[str]
) -> dict[str, ExposureSeries]:
    """Prefer series files written by cmd_exposures; build any that are absent."""
    out_dir = _exposure_dir(config)
    resolved: dict[str, ExposureSeries] = {}
    missing = set()
    for name in needed:
        path = os.path.join(out_dir, f"{name}.csv")
        if os.path.exists(path):
            resolved[name] = load_exposure(path, config.options["delimiter"])
        else:
            missing.add(name)
    if missing:
        built = _build_raw_exposures(data, config)
        for name in missing:
            if name not in built:
                # leave absent: fit reports the unknown regressor
                continue
            resolved[name] = built[name]
    return resolved


def cmd_fit(args) -> int:
    try:
        config = RunConfig.from_file(args.config, _overrides(args))
        names = tuple(args.spec) if args.spec else config.specs
        if not names:
            raise ConfigError("no specs requested (config 'specs' empty and no --spec)")
        model_specs = [spec_registry.build_spec(name) for name in names]
        data = _load_pipeline(config)
    except (SociospatialError, OSError, ValueError, KeyError) as exc:
        _diagnostic(exc)
        return EXIT_VALIDATION

    try:
        needed = set()
        for spec in model_specs:
            needed.update(spec_registry.exposure_names_for(spec))
        exposures = _resolve_exposures(data, config, needed)

        fits_dir = os.path.join(config.out, "fits")
        os.makedirs(fits_dir, exist_ok=True)
        for spec in model_specs:
            panel = data.panel
            if spec.outcome == "age_adjusted":
                if data.adjusted_panel is None:
                    raise ConfigError(
                        f"spec '{spec.name}' needs age inputs "
                        "(age and standard_population files)"
                    )
                panel = data.adjusted_panel
            result = fit(
                panel,
                exposures,
                spec,
                weights_base=config.options["weights_base"],
                correction=config.options["cr"],
            )
            with open(os.path.join(fits_dir, f"{spec.name}.json"), "w", encoding="utf-8") as fh:
                json.dump(result.to_json_dict(), fh, indent=2, sort_keys=True)
                fh.write("\n")
            table = format_table([result], labels=[spec.name])
            with open(os.path.join(fits_dir, f"{spec.name}.txt"), "w", encoding="utf-8") as fh:
                fh.write(table)
            print(table)
    except (SociospatialError, OSError, ValueError, KeyError) as exc:
        _diagnostic(exc)
        return EXIT_ESTIMATION
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        config = RunConfig.from_file(args.config, _overrides(args))
    except (SociospatialError, OSError, ValueError, KeyError) as exc:
        _diagnostic(exc)
        return EXIT_VALIDATION
    fits_dir = os.path.join(config.out, "fits")
    results = []
    try:
        if not config.specs:
            raise FileNotFoundError("config lists no specs to report")
        for name in config.specs:
            path = os.path.join(fits_dir, f"{name}.json")
            if not os.path.exists(path):
                raise FileNotFoundError(f"fit artifact missing: {path}")
            with open(path, encoding="utf-8") as fh:
                results.append(FitResult.from_json_dict(json.load(fh)))
    except (FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        _diagnostic(exc)
        return EXIT_MISSING_ARTIFACT

    report_dir = os.path.join(config.out, "report")
    os.makedirs(report_dir, exist_ok=True)
    table = format_table(results, labels=[r.spec_name for r in results])
    with open(os.path.join(report_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    aggregate = {r.spec_name: r.to_json_dict() for r in results}
    with open(os.path.join(report_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(aggregate, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(table)
    print(f"wrote report for {len(results)} specs to {report_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _overrides(args) -> dict:
    return {
        "out": getattr(args, "out", None),
        "strict": True if getattr(args, "strict", False) else None,
        "denominator": getattr(args, "denominator", None),
        "weights_base": getattr(args, "weights_base", None),
        "cr": getattr(args, "cr", None),
    }


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="run config JSON")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--strict", action="store_true", help="fail on any validation defect")
    parser.add_argument(
        "--threads", type=int, default=1,
        help="advisory; results are deterministic regardless",
    )
    parser.add_argument(
        "--denominator", choices=("exclude-self", "include-self"),
        help="self pair in the social-exposure denominator",
    )
    parser.add_argument(
        "--weights-base", dest="weights_base", choices=("annual", "fixed"),
        help="regression population weights: per-year or first study year",
    )
    parser.add_argument(
        "--cr", choices=("cr0", "cr1"), help="cluster covariance small-sample correction"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sociospatial",
        description="Socio-spatial exposure metrics and fixed-effects panel estimation",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic input bundle")
    sim.add_argument("--config", help="DGP config JSON (defaults used if omitted)")
    sim.add_argument("--out", required=True, help="bundle directory")
    sim.add_argument("--seed", type=int, help="override the config seed")
    sim.add_argument("--delimiter", default=",")
    sim.set_defaults(func=cmd_simulate)

    exp = sub.add_parser("exposures", help="build and export all exposure series")
    _add_run_flags(exp)
    exp.set_defaults(func=cmd_exposures)

    fit_cmd = sub.add_parser("fit", help="estimate named specifications")
    _add_run_flags(fit_cmd)
    fit_cmd.add_argument(
        "--spec", action="append",
        help="spec name (repeatable; default: all specs in the config)",
    )
    fit_cmd.set_defaults(func=cmd_fit)

    rep = sub.add_parser("report", help="aggregate fitted specs side by side")
    _add_run_flags(rep)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="[%(name)s] %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
