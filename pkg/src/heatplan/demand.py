"""Hourly demand profiles from annual energies, and the peak diversity factor."""
from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .weather import HOURS_PER_YEAR, WeatherSeries

DIVERSITY_A = 0.450
DIVERSITY_B = 0.551
DIVERSITY_C = 53.8
DIVERSITY_D = 1.76
# large-n diversity used to turn a profile peak into a single-building peak
Q_INF = 0.47

HEAT_REFERENCE_TEMP_C = 17.0
# hot-water floor as a fraction of the largest degree value
HEAT_BASE_FRACTION = 0.05
DEFAULT_ELECTRICITY_KWH = 2500.0

# relative heat draw per hour of day, emphasis on the morning heat-up
HEAT_HOUR_FACTORS = np.array([
    0.62, 0.60, 0.60, 0.62, 0.70, 0.95, 1.45, 1.60, 1.45, 1.20, 1.05, 1.00,
    0.98, 0.95, 0.95, 0.98, 1.05, 1.15, 1.20, 1.18, 1.10, 0.98, 0.85, 0.72,
])
# household electricity: morning bump, evening maximum at 19:00
ELECTRICITY_HOUR_FACTORS = np.array([
    0.45, 0.38, 0.35, 0.34, 0.35, 0.45, 0.80, 1.05, 0.95, 0.85, 0.82, 0.88,
    0.95, 0.88, 0.82, 0.85, 0.98, 1.25, 1.55, 1.70, 1.55, 1.30, 0.95, 0.65,
])
WEEKDAY_FACTOR = 0.95
WEEKEND_FACTOR = 1.12


@dataclass(frozen=True, eq=False)
class ProfileShape:
    """Normalized hourly shapes; each sums to one over the year."""

    heat: np.ndarray
    electricity: np.ndarray


def heat_shape(weather: WeatherSeries, reference_c: float = HEAT_REFERENCE_TEMP_C,
               base_fraction: float = HEAT_BASE_FRACTION) -> np.ndarray:
    daily_mean_c = (weather.temp_k.reshape(365, 24).mean(axis=1) - 273.15).repeat(24)
    degree = reference_c - daily_mean_c
    floor = base_fraction * max(float(degree.max()), 0.0)
    weight = np.maximum(degree, floor)
    if not np.any(weight > 0):
        # a year that is warm throughout: only the hour-of-day pattern remains
        weight = np.ones(HOURS_PER_YEAR)
    raw = weight * np.tile(HEAT_HOUR_FACTORS, 365)
    return raw / raw.sum()


def electricity_shape(first_weekday: int = 3) -> np.ndarray:
    """``first_weekday`` is Monday=0; the default matches 1 January 2015, a Thursday."""
    weekday = (np.arange(365) + first_weekday) % 7
    day_factor = np.where(weekday >= 5, WEEKEND_FACTOR, WEEKDAY_FACTOR)
    raw = (day_factor[:, None] * ELECTRICITY_HOUR_FACTORS[None, :]).ravel()
    return raw / raw.sum()


_SHAPES: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def profile_shape(weather: WeatherSeries) -> ProfileShape:
    """Shapes for a weather year, cached per weather object."""
    shape = _SHAPES.get(weather)
    if shape is None:
        first_weekday = int(weather.timestamps[0].dayofweek)
        shape = ProfileShape(heat_shape(weather), electricity_shape(first_weekday))
        _SHAPES[weather] = shape
    return shape


def _scaled(shape: np.ndarray, annual_kwh: float) -> np.ndarray:
    if annual_kwh < 0:
        raise ValueError(f"annual energy must be >= 0, got {annual_kwh}")
    # hourly steps: kWh per hour equals mean kW
    return shape * float(annual_kwh)


def heat_profile(weather: WeatherSeries, annual_kwh: float) -> np.ndarray:
    """Hourly heat demand in kW integrating to ``annual_kwh``."""
    return _scaled(profile_shape(weather).heat, annual_kwh)


def electricity_profile(annual_kwh: float = DEFAULT_ELECTRICITY_KWH, first_weekday: int = 3) -> np.ndarray:
    """Hourly household electricity demand in kW integrating to ``annual_kwh``."""
    return _scaled(electricity_shape(first_weekday), annual_kwh)


def diversity(n) -> float | np.ndarray:
    """Coincidence factor of the peak loads of ``n`` buildings."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 1):
        raise ValueError("diversity factor needs at least one building")
    q = np.minimum(1.0, DIVERSITY_A + DIVERSITY_B / (1.0 + (n_arr / DIVERSITY_C) ** DIVERSITY_D))
    return float(q) if q.ndim == 0 else q


def building_peak(profile_peak_kw: float, q_inf: float = Q_INF) -> float:
    """Single-building peak recovered from the peak of a smoothed standard profile."""
    return profile_peak_kw / q_inf


def group_peak(n: int, profile_peak_kw: float, q_inf: float = Q_INF) -> float:
    """Coincident peak of ``n`` buildings sharing one standard profile."""
    if n == 0:
        return 0.0
    return n * building_peak(profile_peak_kw, q_inf) * diversity(n)
