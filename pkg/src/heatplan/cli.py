"""Command line interface: ``heatplan {synth,features,cluster,scan,optimize,analyze}``.

Settings come from built-in defaults, then an optional flat ``key = value``
file given with ``--config``, then command line flags. Every command writes
its artifacts and a ``manifest.json`` into ``--out``.

Exit status: 0 success, 2 invalid input, 3 numerical failure, 4 empty
filter result.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import logging
import platform
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, analysis, pipeline
from .clustering import METHODS, read_aggregation_csv, scan, write_aggregation_csv, write_scan_csv
from .esm import Tariffs, write_kpi_csv
from .exceptions import EmptySelectionError, NumericalError
from .features import histogram_table, write_features_csv
from .geodata import export_dataset, generate_synthetic, load_dataset
from .network import group_cohesion, shortest_single_combo_grid
from .optimizer import read_archive_csv, write_archive_csv
from .weather import export_weather, load_weather, synthetic_weather

logger = logging.getLogger("heatplan")

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_EMPTY = 4

_TARIFF_KEYS = tuple(f.name for f in fields(Tariffs))


@dataclass
class RunConfig:
    dataset: str | None = None
    roofs: str | None = None
    weather: str | None = None
    aggregation: str | None = None
    archive: str | None = None
    runs: tuple[str, ...] = ()
    out: str = "out"
    seed: int = 0
    n: int = 859
    layout: str = "two_districts"
    method: str = "kmeans_geo"
    methods: tuple[str, ...] = METHODS
    k_reps: int = 5
    k_groups: int = 10
    reps_range: str = "5:10"
    groups_range: str = "5:10"
    min_cluster_size: int = 5
    cohesion_mode: str = "building"
    generations: int = 2000
    population: int = 16
    seed_known_solutions: bool = True
    q_inf: float = 0.47
    kwh_per_person: float = 15000.0
    electricity_kwh: float = 2500.0
    cost_cap: float = pipeline.DEFAULT_COST_CAP
    min_share: float = pipeline.DEFAULT_MIN_SHARE
    tariffs: Tariffs = Tariffs()

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for name in ("k_reps", "k_groups", "generations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be an even number >= 4")
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        for m in (self.method, *self.methods):
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        if self.cohesion_mode not in ("building", "group"):
            raise ValueError("cohesion_mode must be 'building' or 'group'")
        if not 0 < self.q_inf <= 1:
            raise ValueError("q_inf must lie in (0, 1]")
        if not 0 <= self.min_share <= 1:
            raise ValueError("min_share must lie in [0, 1]")
        for name in ("dataset", "roofs", "weather", "aggregation", "archive"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(f"{name} file not found: {path}")

    def settings(self) -> pipeline.ModelSettings:
        return pipeline.ModelSettings(self.tariffs, self.q_inf, self.electricity_kwh, self.kwh_per_person)


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_range(text: str) -> range:
    lo, _, hi = text.partition(":")
    lo, hi = int(lo), int(hi or lo)
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid range {text!r}; expected LO:HI with 1 <= LO <= HI")
    return range(lo, hi + 1)


def _convert(name: str, raw: str):
    default = getattr(RunConfig, name) if name != "tariffs" else None
    if name in ("methods", "runs"):
        return tuple(s.strip() for s in raw.split(",") if s.strip())
    if isinstance(default, bool):
        return _parse_bool(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment. Tariff fields are top-level keys."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    text = Path(path).read_text(encoding="utf-8")
    parser.read_string("[run]\n" + text)
    known = {f.name for f in fields(RunConfig)} - {"tariffs"}
    values, tariffs = {}, {}
    for key, raw in parser["run"].items():
        key = key.replace("-", "_")
        if key in _TARIFF_KEYS:
            tariffs[key] = float(raw)
        elif key in known:
            values[key] = _convert(key, raw)
        else:
            raise ValueError(f"{path}: unknown configuration key {key!r}")
    if tariffs:
        values["tariffs"] = dataclasses.replace(Tariffs(), **tariffs)
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = tuple(flag) if isinstance(flag, list) else flag
    config = RunConfig(**values)
    config.validate()
    return config


# -- manifest -------------------------------------------------------------------

def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, config: RunConfig, inputs, extra=None) -> None:
    import scipy
    import sklearn

    params = dataclasses.asdict(config)
    for key in ("dataset", "roofs", "weather", "aggregation", "archive", "out"):
        if params[key] is not None:
            params[key] = Path(params[key]).name
    params["runs"] = [Path(r).name for r in config.runs]
    manifest = {
        "command": command,
        "seed": config.seed,
        "parameters": params,
        "inputs": {Path(p).name: _sha256(p) for p in inputs if p is not None},
        "versions": {"heatplan": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "scikit-learn": sklearn.__version__, "python": platform.python_version()},
    }
    if extra:
        manifest["results"] = extra
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")


# -- commands ---------------------------------------------------------------------

def _load_inputs(config: RunConfig) -> pipeline.Inputs:
    if config.dataset is None:
        raise ValueError("a dataset is required (--dataset or 'dataset' in the config file)")
    dataset = load_dataset(config.dataset, roofs_path=config.roofs)
    weather = load_weather(config.weather) if config.weather else synthetic_weather()
    return pipeline.prepare(dataset, weather)


def _input_files(config: RunConfig, *extra):
    return [config.dataset, config.roofs, config.weather, *extra]


def cmd_synth(config: RunConfig, out: Path) -> int:
    dataset = generate_synthetic(config.seed, config.n, config.layout)
    export_dataset(dataset, out / "buildings.csv", "csv", out / "roofs.csv")
    export_weather(synthetic_weather(), out / "weather.csv")
    write_manifest(out, "synth", config, [], {"buildings": len(dataset)})
    return 0


def cmd_features(config: RunConfig, out: Path) -> int:
    inputs = _load_inputs(config)
    write_features_csv(inputs.features, out / "features.csv")
    with open(out / "histogram.csv", "w", encoding="utf-8") as fh:
        fh.write("feature,left,right,count\n")
        for name, lo, hi, count in histogram_table(inputs.features):
            fh.write(f"{name},{lo!r},{hi!r},{count}\n")
    write_manifest(out, "features", config, _input_files(config))
    return 0


def _cluster_summary(agg, dataset, config: RunConfig) -> dict:
    return {"method": agg.method, "variables": agg.n_variables,
            "avg_line_length_m": group_cohesion(agg, dataset, config.cohesion_mode),
            "shortest_grid_m": shortest_single_combo_grid(agg, dataset)}


def cmd_cluster(config: RunConfig, out: Path) -> int:
    inputs = _load_inputs(config)
    agg = pipeline.aggregate(inputs, config.method, config.k_reps, config.k_groups, config.seed,
                             config.min_cluster_size)
    write_aggregation_csv(agg, out / "aggregation.csv")
    write_manifest(out, "cluster", config, _input_files(config), _cluster_summary(agg, inputs.dataset, config))
    return 0


def cmd_scan(config: RunConfig, out: Path) -> int:
    inputs = _load_inputs(config)
    rows = scan(inputs.dataset, inputs.normalized, config.methods, _parse_range(config.reps_range),
                _parse_range(config.groups_range), config.seed, inputs.features.matrix,
                config.min_cluster_size, config.cohesion_mode)
    write_scan_csv(rows, out / "scan.csv")
    write_manifest(out, "scan", config, _input_files(config), {"rows": len(rows)})
    return 0


def _read_aggregation(path, method, dataset):
    agg = read_aggregation_csv(path, method)
    if tuple(agg.ids) != tuple(dataset.ids):
        raise ValueError(f"{path}: building ids do not match the dataset")
    return agg


def cmd_optimize(config: RunConfig, out: Path) -> int:
    inputs = _load_inputs(config)
    if config.aggregation:
        agg = _read_aggregation(config.aggregation, config.method, inputs.dataset)
    else:
        agg = pipeline.aggregate(inputs, config.method, config.k_reps, config.k_groups, config.seed,
                                 config.min_cluster_size)
    run = pipeline.optimize(inputs, agg, config.seed, config.generations, config.population,
                            config.seed_known_solutions, config.settings())
    write_aggregation_csv(agg, out / "aggregation.csv")
    write_archive_csv(run.result.archive, out / "archive.csv")
    write_kpi_csv(run.result.evaluated, out / "kpi.csv")
    summary = _cluster_summary(agg, inputs.dataset, config)
    summary.update(evaluations=run.result.evaluations, archive_size=len(run.result.archive))
    write_manifest(out, "optimize", config, _input_files(config, config.aggregation), summary)
    return 0


def _run_method(run_dir: Path) -> str:
    manifest = run_dir / "manifest.json"
    if manifest.exists():
        method = json.loads(manifest.read_text(encoding="utf-8")).get("results", {}).get("method")
        if method:
            return method
    return run_dir.name


def cmd_analyze(config: RunConfig, out: Path) -> int:
    if config.dataset is None:
        raise ValueError("a dataset is required (--dataset or 'dataset' in the config file)")
    dataset = load_dataset(config.dataset, roofs_path=config.roofs)
    run_dirs = [Path(r) for r in config.runs]
    if not run_dirs:
        if not (config.aggregation and config.archive):
            raise ValueError("give --run DIR (repeatable) or both --aggregation and --archive")
        runs = [(config.method, Path(config.aggregation), Path(config.archive))]
    else:
        runs = [(_run_method(d), d / "aggregation.csv", d / "archive.csv") for d in run_dirs]

    reports, inputs_used, empty = [], [config.dataset, config.roofs], []
    for method, agg_path, archive_path in runs:
        for p in (agg_path, archive_path):
            if not p.exists():
                raise FileNotFoundError(f"missing run artifact: {p}")
        agg = _read_aggregation(agg_path, method, dataset)
        archive = read_archive_csv(archive_path)
        inputs_used += [agg_path, archive_path]
        run_out = out / method
        run_out.mkdir(parents=True, exist_ok=True)
        analysis.write_shares_csv(archive, agg, run_out / "shares.csv")
        cap = analysis.select_low_invest_under_cost_cap(archive, config.cost_cap, agg)
        shares = analysis.select_min_shares(archive, agg, config.min_share)
        report = pipeline.RunReport(method, cap, shares)
        by_id = {e.config_id: e for e in archive}
        for name, sel in (("cost_cap", cap), ("min_shares", shares)):
            if sel is None:
                empty.append(f"{method}/{name}")
                continue
            assignments = analysis.decompress(by_id[sel.config_id].genome, agg, dataset)
            report.assignments[name] = assignments
            (run_out / name).mkdir(exist_ok=True)
            analysis.write_assignment_geojson(assignments, dataset, run_out / name / "assignment.geojson")
        reports.append(report)

    consistency = {}
    for name in ("cost_cap", "min_shares"):
        result = pipeline.cross_method_consistency(reports, name)
        if result is not None:
            consistency[name] = result
    analysis.write_consistency_csv(consistency, out / "consistency.csv")
    selections = {f"{r.method}/{name}": dataclasses.asdict(sel) for r in reports
                  for name, sel in (("cost_cap", r.cost_cap), ("min_shares", r.min_shares)) if sel is not None}
    write_manifest(out, "analyze", config, inputs_used, {"selections": selections, "empty": empty})
    if empty:
        raise EmptySelectionError("no archived configuration satisfies: " + ", ".join(empty))
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "features": cmd_features,
    "cluster": cmd_cluster,
    "scan": cmd_scan,
    "optimize": cmd_optimize,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--dataset", help="buildings.csv or GeoJSON")
    data.add_argument("--roofs", help="roofs.csv (default: sibling of buildings.csv)")
    data.add_argument("--weather", help="weather CSV (default: synthetic year)")

    clus = argparse.ArgumentParser(add_help=False)
    clus.add_argument("--method", choices=METHODS)
    clus.add_argument("--k-reps", dest="k_reps", type=int)
    clus.add_argument("--k-groups", dest="k_groups", type=int)
    clus.add_argument("--min-cluster-size", dest="min_cluster_size", type=int)
    clus.add_argument("--cohesion-mode", dest="cohesion_mode", choices=("building", "group"))

    parser = argparse.ArgumentParser(prog="heatplan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"heatplan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset and weather year")
    p.add_argument("--n", type=int)
    p.add_argument("--layout", choices=("grid", "two_districts"))

    sub.add_parser("features", parents=[common, data], help="energy features per building")
    sub.add_parser("cluster", parents=[common, data, clus], help="two-step aggregation")

    p = sub.add_parser("scan", parents=[common, data, clus], help="variables and line length over (k_reps, k_groups)")
    p.add_argument("--methods", type=lambda s: s.split(","))
    p.add_argument("--reps-range", dest="reps_range")
    p.add_argument("--groups-range", dest="groups_range")

    p = sub.add_parser("optimize", parents=[common, data, clus], help="NSGA-II over the aggregated model")
    p.add_argument("--aggregation", help="aggregation.csv (default: cluster first)")
    p.add_argument("--generations", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--seed-known-solutions", dest="seed_known_solutions",
                   action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--q-inf", dest="q_inf", type=float)
    p.add_argument("--kwh-per-person", dest="kwh_per_person", type=float)
    p.add_argument("--electricity-kwh", dest="electricity_kwh", type=float)

    p = sub.add_parser("analyze", parents=[common, data], help="filters, decompression, consistency")
    p.add_argument("--run", dest="runs", action="append", help="optimize output directory (repeatable)")
    p.add_argument("--aggregation")
    p.add_argument("--archive")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--cost-cap", dest="cost_cap", type=float)
    p.add_argument("--min-share", dest="min_share", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "optimize" else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = build_config(args)
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](config, out)
    except EmptySelectionError as exc:
        print(f"heatplan: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (NumericalError, ArithmeticError) as exc:
        print(f"heatplan: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, LookupError, OSError) as exc:
        print(f"heatplan: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
