"""End-to-end workflow: compress (features, clustering), optimize, decompress and compare."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .clustering import Aggregation, normalized_features, two_step
from .demand import DEFAULT_ELECTRICITY_KWH, Q_INF
from .esm import EnergySystemModel, Tariffs
from .features import DatasetFeatures, compute_features
from .geodata import Dataset
from .optimizer import OptimizationResult, evolve
from .solar import StandardRoofSet
from .weather import WeatherSeries, synthetic_weather

DEFAULT_COST_CAP = 500.0
DEFAULT_MIN_SHARE = 0.33


@dataclass(frozen=True, eq=False)
class Inputs:
    dataset: Dataset
    weather: WeatherSeries
    standard: StandardRoofSet
    features: DatasetFeatures
    normalized: np.ndarray


def prepare(dataset: Dataset, weather: WeatherSeries | None = None) -> Inputs:
    weather = synthetic_weather() if weather is None else weather
    standard = StandardRoofSet.from_weather(weather)
    features = compute_features(dataset, weather, standard)
    return Inputs(dataset, weather, standard, features, normalized_features(features))


@dataclass(frozen=True)
class ModelSettings:
    tariffs: Tariffs = Tariffs()
    q_inf: float = Q_INF
    electricity_kwh: float = DEFAULT_ELECTRICITY_KWH
    kwh_per_person: float = 15000.0


@dataclass(eq=False)
class MethodRun:
    method: str
    aggregation: Aggregation
    model: EnergySystemModel
    result: OptimizationResult


def aggregate(inputs: Inputs, method: str, k_reps: int, k_groups: int, seed: int,
              min_cluster_size: int = 5) -> Aggregation:
    _, agg = two_step(inputs.dataset, inputs.normalized, inputs.features.matrix, method, k_reps, k_groups,
                      seed, min_cluster_size)
    return agg


def build_model(inputs: Inputs, aggregation: Aggregation, settings: ModelSettings = ModelSettings()):
    return EnergySystemModel(inputs.dataset, aggregation, inputs.weather, inputs.standard,
                             tariffs=settings.tariffs, q_inf=settings.q_inf,
                             electricity_kwh=settings.electricity_kwh,
                             kwh_per_person=settings.kwh_per_person, omega=inputs.features.omega)


def optimize(inputs: Inputs, aggregation: Aggregation, seed: int, generations: int, population: int = 16,
             seed_known: bool = True, settings: ModelSettings = ModelSettings()) -> MethodRun:
    model = build_model(inputs, aggregation, settings)
    result = evolve(model, len(model.combos), population, generations, seed=seed, seed_known=seed_known)
    return MethodRun(aggregation.method, aggregation, model, result)


@dataclass
class RunReport:
    method: str
    cost_cap: analysis.SolutionSelection | None
    min_shares: analysis.SolutionSelection | None
    assignments: dict[str, list[analysis.BuildingAssignment]] = field(default_factory=dict)
    share_triangle: np.ndarray | None = None


def analyze_run(run: MethodRun, cost_cap: float = DEFAULT_COST_CAP,
                min_share: float = DEFAULT_MIN_SHARE) -> RunReport:
    archive, agg = run.result.archive, run.aggregation
    by_id = {e.config_id: e for e in archive}
    report = RunReport(run.method,
                       analysis.select_low_invest_under_cost_cap(archive, cost_cap, agg),
                       analysis.select_min_shares(archive, agg, min_share),
                       share_triangle=analysis.technology_share_triangle(archive, agg))
    for name, sel in (("cost_cap", report.cost_cap), ("min_shares", report.min_shares)):
        if sel is not None:
            report.assignments[name] = analysis.decompress(by_id[sel.config_id].genome, agg)
    return report


def cross_method_consistency(reports, selection: str = "cost_cap"):
    """Consistency across methods for one filter; None unless every method has a selection."""
    chosen = {r.method: r.assignments.get(selection) for r in reports}
    if any(v is None for v in chosen.values()):
        return None
    return analysis.consistency(chosen)
