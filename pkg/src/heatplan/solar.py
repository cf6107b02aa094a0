"""Standard-roof approximation of rooftop PV generation potential.

Every real roof's year-averaged day profile is matched, at a few anchor
hours, by a linear combination of a handful of "standard roofs". The
resulting weights are a compact clustering feature and reproduce the full
generation time series of a building via the standard-roof curves.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import NumericalError
from .geodata import BuildingRecord, Dataset
from .weather import HOURS_PER_YEAR, WeatherSeries

ALBEDO = 0.2
SYSTEM_EFFICIENCY = 0.18
CONDITION_LIMIT = 1e8

DEFAULT_AZIMUTHS = (90.0, 180.0, 270.0)
DEFAULT_TILT = 30.0
DEFAULT_ANCHOR_HOURS = (9, 12, 15)


def plane_of_array_series(weather: WeatherSeries, azimuth: float, tilt: float,
                          efficiency: float = SYSTEM_EFFICIENCY, albedo: float = ALBEDO) -> np.ndarray:
    """Unit-area PV power (W/m2) of a roof plane, isotropic-sky transposition."""
    if not 0.0 <= azimuth <= 360.0:
        raise ValueError(f"azimuth {azimuth} outside [0, 360]")
    if not 0.0 <= tilt <= 90.0:
        raise ValueError(f"tilt {tilt} outside [0, 90]")
    sun = weather.sun
    zen = np.radians(sun.zenith_deg)
    beta = np.radians(tilt)
    cos_aoi = np.cos(zen) * np.cos(beta) + np.sin(zen) * np.sin(beta) * np.cos(
        np.radians(sun.azimuth_deg - azimuth)
    )
    beam = weather.dni * np.clip(cos_aoi, 0.0, None)
    beam[sun.zenith_deg >= 90.0] = 0.0
    sky = weather.dhi * (1.0 + np.cos(beta)) / 2.0
    ground = weather.ghi * albedo * (1.0 - np.cos(beta)) / 2.0
    return efficiency * (beam + sky + ground)


def day_hour_average(series) -> np.ndarray:
    """Mean value at each hour of day over the 365 days of the year."""
    series = np.asarray(series, dtype=float)
    if series.shape[-1] != HOURS_PER_YEAR:
        raise ValueError(f"expected {HOURS_PER_YEAR} hourly values, got {series.shape[-1]}")
    return series.reshape(series.shape[:-1] + (365, 24)).mean(axis=-2)


@dataclass(frozen=True, eq=False)
class StandardRoofSet:
    azimuths: tuple[float, ...]
    tilts: tuple[float, ...]
    anchor_hours: tuple[int, ...]
    series: np.ndarray  # (N, 8760) W per m2 of roof
    anchor_matrix: np.ndarray = field(init=False)  # [t_d, n] = <P_n>(t_d)

    def __post_init__(self):
        n = len(self.azimuths)
        if len(self.tilts) != n or len(self.anchor_hours) != n:
            raise ValueError("number of anchor hours must equal the number of standard roofs")
        series = np.asarray(self.series, dtype=float)
        if series.shape != (n, HOURS_PER_YEAR):
            raise ValueError(f"series must have shape ({n}, {HOURS_PER_YEAR})")
        matrix = day_hour_average(series)[:, list(self.anchor_hours)].T
        cond = np.linalg.cond(matrix)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise NumericalError(
                f"standard-roof anchor matrix is ill-conditioned (cond={cond:.3g}); "
                "choose different anchor hours or standard roofs"
            )
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "anchor_matrix", matrix)

    @classmethod
    def from_weather(cls, weather: WeatherSeries, azimuths: Sequence[float] = DEFAULT_AZIMUTHS,
                     tilt: float | Sequence[float] = DEFAULT_TILT,
                     anchor_hours: Sequence[int] = DEFAULT_ANCHOR_HOURS) -> "StandardRoofSet":
        tilts = tuple(float(t) for t in np.broadcast_to(tilt, (len(azimuths),)))
        series = np.stack([plane_of_array_series(weather, a, t) for a, t in zip(azimuths, tilts)])
        return cls(tuple(float(a) for a in azimuths), tilts, tuple(int(h) for h in anchor_hours), series)

    def __len__(self):
        return len(self.azimuths)

    def reconstruct(self, weights) -> np.ndarray:
        return np.asarray(weights, dtype=float) @ self.series


def solve_roof_weights(roof_series, standard: StandardRoofSet) -> np.ndarray:
    """Weights w with sum_n w_n <P_n>(t_d) == <P_roof>(t_d) at every anchor hour.

    ``roof_series`` may be a single 8760 series or a stack of them; the
    result has the matching leading shape and one weight per standard roof.
    """
    target = day_hour_average(roof_series)[..., list(standard.anchor_hours)]
    return np.linalg.solve(standard.anchor_matrix, target.T).T


def roof_weights(weather: WeatherSeries, standard: StandardRoofSet, azimuth: float, tilt: float) -> np.ndarray:
    return solve_roof_weights(plane_of_array_series(weather, azimuth, tilt), standard)


def building_standard_weights(building: BuildingRecord, weather: WeatherSeries,
                              standard: StandardRoofSet, _cache: dict | None = None) -> np.ndarray:
    """Roof-aggregated weights in m2 of standard roof: sum over roofs of area * w."""
    omega = np.zeros(len(standard))
    for roof in building.roofs:
        key = (roof.azimuth_deg, roof.tilt_deg)
        if _cache is not None and key in _cache:
            w = _cache[key]
        else:
            w = roof_weights(weather, standard, roof.azimuth_deg, roof.tilt_deg)
            if _cache is not None:
                _cache[key] = w
        omega += roof.area_m2 * w
    return omega


def dataset_standard_weights(dataset: Dataset, weather: WeatherSeries, standard: StandardRoofSet) -> np.ndarray:
    """(n_buildings, N) roof-aggregated weights for a whole dataset."""
    cache: dict = {}
    return np.stack([building_standard_weights(b, weather, standard, cache) for b in dataset])


def building_pv_potential(building: BuildingRecord, weights, standard: StandardRoofSet) -> np.ndarray:
    """PV generation potential of a building in W.

    ``weights`` holds one weight vector per roof (in roof order); they are
    scaled by roof area and summed before applying the standard curves.
    """
    weights = np.asarray(weights, dtype=float).reshape(len(building.roofs), len(standard))
    if not building.roofs:
        return np.zeros(HOURS_PER_YEAR)
    areas = np.array([r.area_m2 for r in building.roofs])
    return standard.reconstruct(areas @ weights)
