"""Footprint-specific energy indicators used to form building categories."""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .geodata import BuildingRecord, Dataset
from .solar import StandardRoofSet, dataset_standard_weights, day_hour_average
from .weather import WeatherSeries

# single family house, BDEW profile: kW peak per MWh/a
PEAK_PER_MWH = 0.228
CONNECTION_COST_PER_KW = 13.4111
CONNECTION_COST_BASE = 13976.0

FEATURE_NAMES = ("q_heat", "p9", "p12", "p15", "c_hnc")


def peak_heat_demand(annual_kwh: float) -> float:
    """Approximate peak heat load in kW from annual demand in kWh/a."""
    if annual_kwh < 0:
        raise ValueError(f"annual heat demand must be >= 0, got {annual_kwh}")
    return PEAK_PER_MWH * (annual_kwh / 1000.0)


def connection_cost(peak_kw: float) -> float:
    """Heat network house connection cost in EUR for a given peak load."""
    if peak_kw < 0:
        raise ValueError(f"peak load must be >= 0, got {peak_kw}")
    return CONNECTION_COST_PER_KW * peak_kw + CONNECTION_COST_BASE


@dataclass(frozen=True)
class FeatureVector:
    q_heat: float  # kWh/m2/a
    p9: float  # W/m2
    p12: float
    p15: float
    c_hnc: float  # EUR/m2

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


def feature_vector(building: BuildingRecord, pv_day_profile, anchor_hours=(9, 12, 15)) -> FeatureVector:
    """Divide every indicator of ``building`` by its footprint.

    ``pv_day_profile`` is the building's 24-hour year-averaged PV potential
    in W, typically reconstructed from standard-roof weights.
    """
    area = building.footprint_m2
    profile = np.asarray(pv_day_profile, dtype=float)
    p = [float(profile[h]) / area for h in anchor_hours]
    return FeatureVector(
        q_heat=building.annual_heat_demand_kwh / area,
        p9=p[0], p12=p[1], p15=p[2],
        c_hnc=connection_cost(peak_heat_demand(building.annual_heat_demand_kwh)) / area,
    )


@dataclass(frozen=True, eq=False)
class DatasetFeatures:
    """Raw features of a dataset plus the roof-aggregated standard weights."""

    ids: tuple[str, ...]
    matrix: np.ndarray  # (n, 5) in FEATURE_NAMES order
    omega: np.ndarray  # (n, N) m2 of standard roof per building

    def __len__(self):
        return len(self.ids)

    def vectors(self) -> list[FeatureVector]:
        return [FeatureVector(*row) for row in self.matrix.tolist()]


def compute_features(dataset: Dataset, weather: WeatherSeries, standard: StandardRoofSet) -> DatasetFeatures:
    omega = dataset_standard_weights(dataset, weather, standard)
    day_profiles = omega @ day_hour_average(standard.series)  # (n, 24) W
    rows = [feature_vector(b, day_profiles[i], standard.anchor_hours).as_array()
            for i, b in enumerate(dataset)]
    return DatasetFeatures(tuple(dataset.ids), np.vstack(rows), omega)


def write_features_csv(features: DatasetFeatures, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("id",) + FEATURE_NAMES)
        for bid, row in zip(features.ids, features.matrix.tolist()):
            writer.writerow([bid] + [repr(v) for v in row])


def histogram_table(features: DatasetFeatures, bins: int = 20) -> list[tuple[str, float, float, int]]:
    """Binned counts per feature: (feature, left edge, right edge, count)."""
    out = []
    for j, name in enumerate(FEATURE_NAMES):
        counts, edges = np.histogram(features.matrix[:, j], bins=bins)
        out.extend((name, float(edges[k]), float(edges[k + 1]), int(c)) for k, c in enumerate(counts))
    return out


# ---------------------------------------------------------------------------
# min-max scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalerParams:
    data_min: np.ndarray
    data_max: np.ndarray


def fit_minmax(vectors) -> ScalerParams:
    x = np.atleast_2d(np.asarray(vectors, dtype=float))
    if x.size == 0 or x.shape[0] == 0:
        raise ValueError("fit_minmax needs at least one vector")
    return ScalerParams(x.min(axis=0), x.max(axis=0))


def apply_minmax(vectors, params: ScalerParams) -> np.ndarray:
    """Map each dimension to [0, 1] over the fitted range; constant dimensions map to 0."""
    x = np.asarray(vectors, dtype=float)
    span = params.data_max - params.data_min
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (x - params.data_min) / safe, 0.0)


class MinMaxScaler(TransformerMixin, BaseEstimator):
    """Per-dimension [0, 1] scaling with constant dimensions mapped to 0."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        params = fit_minmax(X)
        self.data_min_ = params.data_min
        self.data_max_ = params.data_max
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_array(X, dtype=float)
        return apply_minmax(X, ScalerParams(self.data_min_, self.data_max_))
