"""Command line pipeline: fit, extract, validate, profile.

Every subcommand reads one YAML run-configuration file and writes its
artifacts into an output directory. Outputs are deterministic given the
same inputs and seeds; the only timestamp lives in ``run_manifest.json``.

Exit codes: 0 success (an Invalid validation verdict is still data, not
an error), 1 for data problems, 2 for configuration problems.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .als import CATPCA, HISTORY_COLUMNS, CatpcaModel
from .data import load_dataset, filter_obese, save_dataset, split_dataset, summarize_classes
from .errors import CatpcaError, ConfigError, DataError
from .extraction import (ExtractionStrategy, apply_criterion, communalities,
                         eigenvalue_criterion, loading_filter, scree_knee,
                         select_components, variance_explained_criterion)
from .profiling import assign_variables, membership_counts, profile_components
from .schema import load_schema
from .svg import scree_svg
from .validation import validate_split

log = logging.getLogger("catpca")

EXTRACTION_FORMAT = "catpca-extraction"
EXTRACTION_FORMAT_VERSION = 1

_GENERATED_BY = f"# generated-by: catpca {__version__}"


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "" if math.isnan(value) else f"{value:.6f}"
    return str(value)


def write_csv(path, header, rows):
    """Write a table with the generated-by comment line on top."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(_GENERATED_BY + "\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _read_table(path):
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(line for line in handle if not line.startswith("#"))
        rows = list(reader)
    if not rows:
        raise DataError(f"{path} holds no table")
    return rows[0], rows[1:]


# ---- run configuration --------------------------------------------------


@dataclass
class RunConfig:
    """Validated contents of a run-configuration YAML file."""

    data: Path
    schema: Path
    output_dir: Path
    bmi_column: str | None = None
    filter_obese: bool = False
    split_ratio: float = 0.7
    split_seed: int = 0
    dimensions: int | None = None
    max_iterations: int = 100
    epsilon: float = 1e-5
    init: str = "numeric"
    model_seed: int = 0
    strategy: ExtractionStrategy = field(default_factory=ExtractionStrategy)
    total_variables: int | None = None
    dim_tolerance: int = 5
    vaf_tolerance: float = 5.0
    scree_svg: bool = True


def _require(mapping, key, kind, default, where, check=None, describe=""):
    value = mapping.get(key, default)
    if value is None and default is None:
        return None
    try:
        value = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key} must be a {kind.__name__}, got {value!r}") from None
    if check is not None and not check(value):
        raise ConfigError(f"{where}.{key} {describe}, got {value!r}")
    return value


def load_run_config(path):
    """Parse and range-check a run-configuration file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = yaml.safe_load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"config file {path} must hold a mapping")

    base = path.parent

    def _path(key, required=True):
        value = payload.get(key)
        if value is None:
            if required:
                raise ConfigError(f"config is missing the {key!r} path")
            return None
        candidate = Path(str(value))
        return candidate if candidate.is_absolute() else base / candidate

    split = payload.get("split") or {}
    model = payload.get("model") or {}
    extraction = payload.get("extraction") or {}
    validation = payload.get("validation") or {}
    output = payload.get("output") or {}
    for name, section in (("split", split), ("model", model), ("extraction", extraction),
                          ("validation", validation), ("output", output)):
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be a mapping")

    init = str(model.get("init", "numeric"))
    if init not in ("numeric", "random"):
        raise ConfigError(f"model.init must be 'numeric' or 'random', got {init!r}")
    criterion = str(extraction.get("criterion", "eigenvalue"))
    if criterion not in ("eigenvalue", "variance_explained", "scree_knee"):
        raise ConfigError(
            "extraction.criterion must be one of eigenvalue, variance_explained, "
            f"scree_knee, got {criterion!r}"
        )

    strategy = ExtractionStrategy(
        criterion=criterion,
        eigenvalue_threshold=_require(extraction, "eigenvalue_threshold", float, 1.0,
                                      "extraction", lambda v: v > 0, "must be positive"),
        near_threshold=_require(extraction, "near_threshold", float, 0.85,
                                "extraction", lambda v: v > 0, "must be positive"),
        variance_target=_require(extraction, "variance_target", float, 0.85,
                                 "extraction", lambda v: 0 < v <= 1, "must lie in (0, 1]"),
        loading_threshold=_require(extraction, "loading_threshold", float, 0.50,
                                   "extraction", lambda v: v >= 0, "must be non-negative"),
        loading_tolerance=_require(extraction, "loading_tolerance", float, 0.04,
                                   "extraction", lambda v: v >= 0, "must be non-negative"),
        communality_threshold=_require(extraction, "communality_threshold", float, 0.50,
                                       "extraction", lambda v: v >= 0, "must be non-negative"),
        communality_tolerance=_require(extraction, "communality_tolerance", float, 0.04,
                                       "extraction", lambda v: v >= 0, "must be non-negative"),
    )

    dimensions = model.get("dimensions")
    if dimensions is not None:
        dimensions = _require(model, "dimensions", int, None, "model",
                              lambda v: v >= 1, "must be at least 1")

    return RunConfig(
        data=_path("data"),
        schema=_path("schema"),
        output_dir=_path("output_dir", required=False) or (base / "out"),
        bmi_column=(str(payload["bmi_column"]) if payload.get("bmi_column") else None),
        filter_obese=bool(payload.get("filter_obese", False)),
        split_ratio=_require(split, "ratio", float, 0.7, "split",
                             lambda v: 0 < v < 1, "must lie strictly between 0 and 1"),
        split_seed=_require(split, "seed", int, 0, "split"),
        dimensions=dimensions,
        max_iterations=_require(model, "max_iterations", int, 100, "model",
                                lambda v: v >= 1, "must be at least 1"),
        epsilon=_require(model, "epsilon", float, 1e-5, "model",
                         lambda v: v > 0, "must be positive"),
        init=init,
        model_seed=_require(model, "seed", int, 0, "model"),
        strategy=strategy,
        total_variables=(_require(extraction, "total_variables", int, None, "extraction",
                                  lambda v: v >= 1, "must be at least 1")
                         if extraction.get("total_variables") is not None else None),
        dim_tolerance=_require(validation, "dim_tolerance", int, 5, "validation",
                               lambda v: v >= 0, "must be non-negative"),
        vaf_tolerance=_require(validation, "vaf_tolerance", float, 5.0, "validation",
                               lambda v: v >= 0, "must be non-negative"),
        scree_svg=bool(output.get("scree_svg", True)),
    )


# ---- shared pieces -------------------------------------------------------


def _prepare_dataset(config):
    if not config.data.exists():
        raise ConfigError(f"data file not found: {config.data}")
    if not config.schema.exists():
        raise ConfigError(f"schema file not found: {config.schema}")
    schema = load_schema(config.schema)
    dataset = load_dataset(config.data, schema)
    log.info("loaded %d rows x %d columns from %s", dataset.n, dataset.m, config.data)
    if config.filter_obese:
        if not config.bmi_column:
            raise ConfigError("filter_obese requires bmi_column to be set")
        before = dataset.n
        dataset = filter_obese(dataset, config.bmi_column)
        log.info("obesity filter kept %d of %d rows", dataset.n, before)
    return dataset


def _build_estimator(config, seed_override=None):
    seed = config.model_seed if seed_override is None else seed_override
    return CATPCA(
        n_components=config.dimensions,
        max_iter=config.max_iterations,
        tol=config.epsilon,
        init=config.init,
        random_state=seed,
    )


def _write_manifest(out_dir, command, config_path, seed):
    manifest = {
        "command": command,
        "version": __version__,
        "config": str(config_path),
        "output_dir": str(out_dir),
        "seed_override": seed,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(out_dir / "run_manifest.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")


def _write_model_tables(model, out_dir, formats):
    if "csv" in formats:
        write_csv(out_dir / "iteration_history.csv", HISTORY_COLUMNS,
                  [rec.as_row() for rec in model.history])
        write_csv(out_dir / "model_summary.csv",
                  ["dimension", "cronbach_alpha", "eigenvalue",
                   "percent_of_variance", "cumulative_percent"],
                  model.variance_summary())
    if "text" in formats:
        last = model.history[-1]
        lines = [
            f"catpca fit: {model.n} rows, {model.m} active variables, {model.p} dimensions",
            f"converged: {model.converged} ({model.convergence_reason}) "
            f"after {last.iteration} iterations",
            f"variance accounted for: {last.vaf_total:.6f} of {model.m * model.p}"
            f" ({100.0 * last.vaf_total / (model.m * model.p):.2f}%)",
            f"loss: {last.loss_total:.6f} = centroid {last.loss_centroid:.6f}"
            f" + restriction {last.loss_restriction:.6f}",
        ]
        for note in model.rank_warnings:
            lines.append(f"warning: {note}")
        (out_dir / "fit_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_spectrum_csv(path):
    header, rows = _read_table(path)
    header = [h.strip().lower() for h in header]
    if "eigenvalue" not in header:
        raise DataError(f"{path} has no 'eigenvalue' column")
    col = header.index("eigenvalue")
    try:
        spectrum = np.array([float(row[col]) for row in rows if row and row[col].strip() != ""])
    except ValueError as exc:
        raise DataError(f"{path}: bad eigenvalue cell ({exc})") from exc
    if spectrum.size == 0:
        raise DataError(f"{path} holds no eigenvalues")
    return spectrum


def _resolve_model_input(config, out_dir, model_arg):
    path = Path(model_arg) if model_arg else out_dir / "model.json"
    if not path.exists():
        raise ConfigError(
            f"model input not found: {path} (run 'catpca fit' first or pass --model)"
        )
    if path.suffix.lower() == ".csv":
        return None, _load_spectrum_csv(path)
    model = CatpcaModel.load(path)
    return model, None


# ---- subcommands ---------------------------------------------------------


def cmd_fit(config, out_dir, formats, seed_override=None):
    dataset = _prepare_dataset(config)
    if config.filter_obese and config.bmi_column and "csv" in formats:
        summary = summarize_classes(dataset, config.bmi_column)
        write_csv(out_dir / "class_summary.csv",
                  ["obesity_class", "count", "percent", "is_mode"],
                  [[s.obesity_class.value, s.count, s.percent, s.is_mode] for s in summary])
    estimator = _build_estimator(config, seed_override)
    estimator.fit(dataset)
    model = estimator.model_
    model.save(out_dir / "model.json")
    _write_model_tables(model, out_dir, formats)
    log.info("fit finished: vaf %.6f, converged=%s", model.history[-1].vaf_total, model.converged)
    return 0


def _criterion_rows(result, spectrum, m):
    rows = []
    retained = set(result.retained_dimensions)
    running = 0.0
    for dim, value in enumerate(spectrum, start=1):
        running += 100.0 * value / m
        rows.append([dim, value, running, dim in retained])
    return rows


def cmd_extract(config, out_dir, formats, model_arg=None):
    model, spectrum = _resolve_model_input(config, out_dir, model_arg)
    strategy = config.strategy
    if model is not None:
        eigenvalues = np.asarray(model.eigenvalues, dtype=float)
        order = np.argsort(-eigenvalues, kind="stable")
        spectrum = eigenvalues[order]
        m = model.m
    else:
        if np.any(np.diff(spectrum) > 1e-9):
            raise DataError("spectrum in model summary is not sorted in descending order")
        m = config.total_variables or len(spectrum)

    results = {}
    for name in ("eigenvalue", "variance_explained", "scree_knee"):
        probe = ExtractionStrategy(**{**strategy.__dict__, "criterion": name})
        try:
            results[name] = apply_criterion(spectrum, m, probe)
        except ValueError as exc:
            log.warning("criterion %s skipped: %s", name, exc)
    if strategy.criterion not in results:
        raise DataError(f"criterion {strategy.criterion!r} failed on this spectrum")

    if "csv" in formats:
        for name, result in results.items():
            write_csv(out_dir / f"criterion_{name}.csv",
                      ["dimension", "eigenvalue", "cumulative_percent", "retained"],
                      _criterion_rows(result, spectrum, m))
        write_csv(out_dir / "scree_data.csv", ["dimension", "eigenvalue"],
                  list(enumerate(spectrum, start=1)))
    if config.scree_svg:
        knee = results["scree_knee"].parameters.get("knee") if "scree_knee" in results else None
        (out_dir / "scree.svg").write_text(scree_svg(spectrum, knee=knee), encoding="utf-8")

    payload = {
        "format": EXTRACTION_FORMAT,
        "format_version": EXTRACTION_FORMAT_VERSION,
        "criterion": strategy.criterion,
        "total_variables": int(m),
        "criteria": {
            name: {
                "dimensions": result.count,
                "cumulative_vaf_percent": result.cumulative_vaf_percent,
                "parameters": result.parameters,
            } for name, result in results.items()
        },
    }
    lines = [f"extraction on {m} variables, {len(spectrum)} dimensions"]
    for name, result in results.items():
        marker = " (selected)" if name == strategy.criterion else ""
        lines.append(f"{name}{marker}: {result.count} dimensions, "
                     f"{result.cumulative_vaf_percent:.2f}% of variance")

    if model is not None:
        outcome = select_components(model, strategy)
        payload["retained_components"] = outcome.retained_components
        payload["retained_variables"] = outcome.retained_variables
        payload["final_variables"] = outcome.final_variables
        lines.extend(outcome.log)
        if "csv" in formats:
            table = outcome.communality_table
            rows = []
            for i, name in enumerate(table.variables):
                rows.append([name] + list(table.squared[i]) +
                            [table.totals[i], bool(table.passed[i])])
            write_csv(out_dir / "communalities.csv",
                      ["variable"] + [f"component_{d}" for d in table.dimensions] +
                      ["communality", "passed"],
                      rows)
            filt = outcome.loading_result
            write_csv(out_dir / "loading_filter.csv",
                      ["variable", "max_component", "max_loading", "retained"],
                      [[name,
                        filt.max_loadings[name][0] if name in filt.max_loadings else None,
                        filt.max_loadings[name][1] if name in filt.max_loadings else None,
                        name in filt.retained_variables]
                       for name in model.variable_names])

    with open(out_dir / "extraction.json", "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")
    if "text" in formats:
        (out_dir / "extraction_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_validate(config, out_dir, formats, seed_override=None):
    dataset = _prepare_dataset(config)
    seed = config.split_seed if seed_override is None else seed_override
    pair = split_dataset(dataset, config.split_ratio, seed)
    save_dataset(pair.train, out_dir / "split_train.csv", comment=_GENERATED_BY.lstrip("# "))
    save_dataset(pair.test, out_dir / "split_test.csv", comment=_GENERATED_BY.lstrip("# "))
    with open(out_dir / "split_manifest.json", "w", encoding="utf-8") as handle:
        json.dump({
            "seed": pair.seed,
            "ratio": pair.ratio,
            "n_total": dataset.n,
            "n_train": pair.train.n,
            "n_test": pair.test.n,
            "train_row_ids": pair.train.row_ids.tolist(),
            "test_row_ids": pair.test.row_ids.tolist(),
        }, handle, indent=2)
        handle.write("\n")

    estimator = _build_estimator(config, seed_override)
    train_model = estimator.fit(pair.train).model_
    test_model = _build_estimator(config, seed_override).fit(pair.test).model_
    report = validate_split(train_model, test_model, config.strategy,
                            dim_tolerance=config.dim_tolerance,
                            vaf_tolerance=config.vaf_tolerance)

    if "csv" in formats:
        name = report.criterion
        write_csv(out_dir / "validation_report.csv",
                  ["criterion", "train_n", "test_n", "train_dimensions", "test_dimensions",
                   "dimension_delta", "train_vaf_percent", "test_vaf_percent",
                   "vaf_percent_delta", "dim_tolerance", "vaf_tolerance", "verdict"],
                  [[name, report.train.n, report.test.n,
                    report.train.criterion_counts.get(name),
                    report.test.criterion_counts.get(name),
                    report.dimension_delta,
                    report.train.criterion_percents.get(name),
                    report.test.criterion_percents.get(name),
                    report.vaf_percent_delta,
                    report.dim_tolerance, report.vaf_tolerance, report.verdict]])
    if "text" in formats:
        lines = [
            f"split validation ({report.criterion} criterion)",
            f"train: n={report.train.n}, test: n={report.test.n} "
            f"(ratio {config.split_ratio}, seed {seed})",
        ]
        for name in sorted(set(report.train.criterion_counts) | set(report.test.criterion_counts)):
            lines.append(
                f"  {name}: train {report.train.criterion_counts.get(name)} dims "
                f"({report.train.criterion_percents.get(name, float('nan')):.2f}%), "
                f"test {report.test.criterion_counts.get(name)} dims "
                f"({report.test.criterion_percents.get(name, float('nan')):.2f}%)"
            )
        lines.append(f"dimension delta: {report.dimension_delta} (tolerance {report.dim_tolerance})")
        lines.append(f"vaf percent delta: {report.vaf_percent_delta:.6f} "
                     f"(tolerance {report.vaf_tolerance})")
        lines.append(f"verdict: {report.verdict}")
        (out_dir / "validation_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    log.info("validation verdict: %s", report.verdict)
    print(f"verdict: {report.verdict}")
    return 0


def cmd_profile(config, out_dir, formats, model_arg=None):
    model, spectrum = _resolve_model_input(config, out_dir, model_arg)
    if model is None:
        raise ConfigError("profile needs a fitted model file, not a spectrum table")
    extraction_path = out_dir / "extraction.json"
    if not extraction_path.exists():
        raise ConfigError(
            f"extraction artifacts not found: {extraction_path} (run 'catpca extract' first)"
        )
    with open(extraction_path, "r", encoding="utf-8") as handle:
        extraction = json.load(handle)
    if extraction.get("format") != EXTRACTION_FORMAT or \
            extraction.get("format_version") != EXTRACTION_FORMAT_VERSION:
        raise DataError(f"{extraction_path} is not a readable extraction file")
    components = extraction.get("retained_components")
    variables = extraction.get("retained_variables")
    if not components or variables is None:
        raise ConfigError(
            "extraction file has no retained components "
            "(it was built from a spectrum table; run 'catpca extract' on a model)"
        )

    rows = [model.variable_names.index(name) for name in variables]
    columns = [int(c) - 1 for c in components]
    assignment = assign_variables(model.loadings[np.ix_(rows, columns)], components, variables)
    report = profile_components(model, assignment, components)
    counts = membership_counts(assignment, components)

    if "csv" in formats:
        write_csv(out_dir / "assignment.csv", ["variable", "component", "loading"],
                  [[name, component, loading]
                   for name, (component, loading) in assignment.items()])
        write_csv(out_dir / "membership_counts.csv", ["component", "member_count"],
                  sorted(counts.items()))
        skew_rows = []
        quant_rows = []
        for profile in report.components:
            for member in profile.members:
                skew_rows.append([member.variable, profile.component,
                                  member.skew_direction, member.skewness])
                for code in member.quantification:
                    quant_rows.append([member.variable, code,
                                       member.quantification[code],
                                       member.frequencies.get(code)])
        write_csv(out_dir / "skew_indicators.csv",
                  ["variable", "component", "skew_direction", "skewness"], skew_rows)
        write_csv(out_dir / "quantifications.csv",
                  ["variable", "code", "quantification", "frequency"], quant_rows)
    if "text" in formats:
        lines = [f"component profiles ({len(report.components)} retained components)"]
        for profile in report.components:
            lines.append("")
            noun = "variable" if len(profile.members) == 1 else "variables"
            lines.append(f"component {profile.component}: eigenvalue {profile.eigenvalue:.3f}, "
                         f"{profile.vaf_percent:.2f}% of variance, "
                         f"{len(profile.members)} {noun}")
            for member in profile.members:
                lines.append(f"  {member.variable}: loading {member.loading:+.3f} "
                             f"({member.sign}), skew {member.skew_direction} "
                             f"({member.skewness:+.3f})")
        for note in report.warnings:
            lines.append(f"warning: {note}")
        (out_dir / "profile_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


# ---- entry point ---------------------------------------------------------


def _setup_logging():
    level_name = os.environ.get("CATPCA_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="catpca",
        description="Categorical principal component analysis with optimal scaling.",
    )
    parser.add_argument("--version", action="version", version=f"catpca {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("fit", "fit the model and write iteration history and model summary"),
        ("extract", "run component retention criteria on a fitted model or spectrum"),
        ("validate", "split the data, fit both halves, and compare retention outcomes"),
        ("profile", "describe retained components through their member variables"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", required=True, help="run configuration YAML file")
        cmd.add_argument("--out", help="output directory (default from config)")
        cmd.add_argument("--format", dest="formats", action="append",
                         choices=("csv", "text"),
                         help="artifact family to emit; repeat for both (default: both)")
        cmd.add_argument("--seed", type=int, help="override the configured seeds")
        if name in ("extract", "profile"):
            cmd.add_argument("--model", help="fitted model JSON (or, for extract, a "
                                             "model-summary CSV with an eigenvalue column)")
    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_run_config(args.config)
        out_dir = Path(args.out) if args.out else config.output_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        formats = list(dict.fromkeys(args.formats)) if args.formats else ["csv", "text"]
        _write_manifest(out_dir, args.command, args.config, args.seed)
        if args.command == "fit":
            return cmd_fit(config, out_dir, formats, args.seed)
        if args.command == "extract":
            return cmd_extract(config, out_dir, formats, args.model)
        if args.command == "validate":
            return cmd_validate(config, out_dir, formats, args.seed)
        if args.command == "profile":
            return cmd_profile(config, out_dir, formats, args.model)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"catpca: config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"catpca: data error: {exc}", file=sys.stderr)
        return 1
    except CatpcaError as exc:  # pragma: no cover - safety net
        print(f"catpca: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
