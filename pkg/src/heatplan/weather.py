"""Hourly weather year: container, CSV I/O, solar geometry and a synthetic clear-sky year."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import SchemaError, ValidationError

HOURS_PER_YEAR = 8760
WEATHER_COLUMNS = ("timestamp", "temp_k", "ghi", "dni", "dhi")

# Bremen, roughly
DEFAULT_LATITUDE = 53.1
DEFAULT_LONGITUDE = 8.8


@dataclass(frozen=True, eq=False)
class SolarPosition:
    zenith_deg: np.ndarray
    azimuth_deg: np.ndarray  # clockwise from north

    @property
    def cos_zenith(self) -> np.ndarray:
        return np.cos(np.radians(self.zenith_deg))


def solar_position(times_utc: pd.DatetimeIndex, latitude: float, longitude: float) -> SolarPosition:
    """Approximate solar position (Michalsky 1988 almanac algorithm).

    Accurate to about 0.01 deg in declination and well below 0.5 deg in
    elevation for the sun above the horizon between 1950 and 2050.
    """
    times_utc = pd.DatetimeIndex(times_utc)
    if times_utc.tz is not None:
        times_utc = times_utc.tz_convert("UTC").tz_localize(None)
    n = times_utc.to_julian_date().to_numpy() - 2451545.0
    hour = (times_utc.hour + times_utc.minute / 60.0 + times_utc.second / 3600.0).to_numpy()

    mean_lon = 280.460 + 0.9856474 * n
    mean_anom = np.radians(357.528 + 0.9856003 * n)
    ecl_lon = np.radians(mean_lon + 1.915 * np.sin(mean_anom) + 0.020 * np.sin(2 * mean_anom))
    obliquity = np.radians(23.439 - 4e-7 * n)

    ra = np.arctan2(np.cos(obliquity) * np.sin(ecl_lon), np.cos(ecl_lon))
    dec = np.arcsin(np.sin(obliquity) * np.sin(ecl_lon))
    gmst_h = 6.697375 + 0.0657098242 * n + hour
    lmst = np.radians((gmst_h * 15.0 + longitude) % 360.0)
    ha = (lmst - ra + np.pi) % (2 * np.pi) - np.pi

    lat = np.radians(latitude)
    sin_alt = np.sin(lat) * np.sin(dec) + np.cos(lat) * np.cos(dec) * np.cos(ha)
    alt = np.arcsin(np.clip(sin_alt, -1.0, 1.0))
    cos_az = (np.sin(dec) * np.cos(lat) - np.cos(dec) * np.sin(lat) * np.cos(ha)) / np.maximum(
        np.cos(alt), 1e-12
    )
    az = np.arccos(np.clip(cos_az, -1.0, 1.0))
    az = np.where(ha > 0, 2 * np.pi - az, az)
    return SolarPosition(90.0 - np.degrees(alt), np.degrees(az))


@dataclass(frozen=True, eq=False)
class WeatherSeries:
    """One non-leap year of hourly weather starting at local midnight.

    Timestamps must be free of daylight-saving shifts. ``temp_k`` is the
    ambient (heat pump source) temperature, irradiance is in W/m2.
    """

    timestamps: pd.DatetimeIndex
    temp_k: np.ndarray
    ghi: np.ndarray
    dni: np.ndarray
    dhi: np.ndarray
    latitude: float = DEFAULT_LATITUDE
    longitude: float = DEFAULT_LONGITUDE

    def __post_init__(self):
        ts = pd.DatetimeIndex(self.timestamps)
        object.__setattr__(self, "timestamps", ts)
        for name in ("temp_k", "ghi", "dni", "dhi"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (HOURS_PER_YEAR,):
                raise ValidationError(f"{name} must have {HOURS_PER_YEAR} hourly values, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(ts) != HOURS_PER_YEAR:
            raise ValidationError(f"expected {HOURS_PER_YEAR} timestamps, got {len(ts)}")
        steps = np.diff(ts.asi8)
        if not np.all(steps == steps[0]) or steps[0] != 3600 * 10**9:
            raise ValidationError("timestamps must be strictly hourly without gaps or DST shifts")
        if ts[0].hour != 0:
            raise ValidationError("weather year must start at 00:00 local time")
        for name in ("ghi", "dni", "dhi"):
            if np.any(getattr(self, name) < 0):
                raise ValidationError(f"{name} must be non-negative")

    @cached_property
    def sun(self) -> SolarPosition:
        return solar_position(self.timestamps, self.latitude, self.longitude)

    def closure_residual(self) -> np.ndarray:
        """GHI - (DHI + DNI cos Z) per hour; near zero for consistent data."""
        cosz = np.clip(self.sun.cos_zenith, 0.0, None)
        return self.ghi - (self.dhi + self.dni * cosz)


def synthetic_weather(
    year: int = 2015,
    latitude: float = DEFAULT_LATITUDE,
    longitude: float = DEFAULT_LONGITUDE,
    utc_offset_h: int = 1,
    cloud_seed: int | None = None,
) -> WeatherSeries:
    """Synthetic weather year with clear-sky irradiance and smooth temperatures.

    Direct normal irradiance follows the Meinel transmittance model with
    Kasten-Young air mass; diffuse is 10 % of direct, and GHI is closed
    exactly as DHI + DNI cos Z. With ``cloud_seed`` a daily clearness
    factor attenuates the beam component.
    """
    tz = f"Etc/GMT{-utc_offset_h:+d}" if utc_offset_h else "UTC"
    start = pd.Timestamp(year=year, month=1, day=1, tz=tz)
    timestamps = pd.date_range(start, periods=HOURS_PER_YEAR, freq="h")
    sun = solar_position(timestamps, latitude, longitude)

    zen = sun.zenith_deg
    cosz = sun.cos_zenith
    up = zen < 90.0
    doy = timestamps.dayofyear.to_numpy()
    i0 = 1367.0 * (1.0 + 0.033 * np.cos(2 * np.pi * doy / 365.0))
    air_mass = np.full(zen.shape, np.inf)
    air_mass[up] = 1.0 / (cosz[up] + 0.50572 * (96.07995 - zen[up]) ** -1.6364)
    dni = np.where(up, i0 * 0.7 ** (air_mass ** 0.678), 0.0)
    dhi = 0.1 * dni
    if cloud_seed is not None:
        rng = np.random.default_rng(cloud_seed)
        clearness = rng.uniform(0.2, 1.0, size=365).repeat(24)
        dhi = dhi + 0.3 * (1.0 - clearness) * dni * np.clip(cosz, 0.0, None)
        dni = dni * clearness
    ghi = dhi + dni * np.clip(cosz, 0.0, None)

    hour = timestamps.hour.to_numpy()
    temp_c = 9.5 - 8.5 * np.cos(2 * np.pi * (doy - 20) / 365.0) + 4.0 * np.sin(2 * np.pi * (hour - 9) / 24.0)
    return WeatherSeries(timestamps, temp_c + 273.15, ghi, dni, dhi, latitude, longitude)


def load_weather(path, latitude: float = DEFAULT_LATITUDE, longitude: float = DEFAULT_LONGITUDE) -> WeatherSeries:
    """Read ``timestamp,temp_k,ghi,dni,dhi``; naive timestamps are taken as UTC."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in WEATHER_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise SchemaError(f"{path.name}: missing required column {missing[0]!r}")
        rows = list(reader)
    ts = pd.DatetimeIndex(pd.to_datetime([r["timestamp"] for r in rows]))
    cols = {c: np.array([float(r[c]) for r in rows]) for c in WEATHER_COLUMNS[1:]}
    return WeatherSeries(ts, cols["temp_k"], cols["ghi"], cols["dni"], cols["dhi"], latitude, longitude)


def export_weather(weather: WeatherSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(WEATHER_COLUMNS)
        for k, ts in enumerate(weather.timestamps):
            writer.writerow([ts.isoformat(), repr(float(weather.temp_k[k])), repr(float(weather.ghi[k])),
                             repr(float(weather.dni[k])), repr(float(weather.dhi[k]))])
