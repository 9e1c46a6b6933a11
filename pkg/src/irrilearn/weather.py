"""Daily weather ingestion and the uniform training-year draw.

One CSV file per calendar year, header ``date,rain,tmax,tmin,radn``
with ISO-8601 dates, rain in mm, temperatures in degrees C, and solar
radiation in MJ/m2/day. Files are exactly what a SILO-style patch-point
export reduces to; a year must cover at least 25 April through 31
December so a full sowing window plus season fits inside it.
"""

from __future__ import annotations

import datetime as dt
import io
import math
import os
from dataclasses import dataclass
from typing import IO, Iterable, Union

import numpy as np

from .core import DomainError, ParseError

CSV_HEADER = "date,rain,tmax,tmin,radn"
_COLUMNS = CSV_HEADER.split(",")


@dataclass(frozen=True)
class WeatherDay:
    date: dt.date
    rain: float
    tmax: float
    tmin: float
    radn: float

    def __post_init__(self):
        for name in ("rain", "tmax", "tmin", "radn"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite on {self.date}, got {v}")
        if self.rain < 0:
            raise DomainError(f"rain must be >= 0 on {self.date}, got {self.rain}")
        if self.radn < 0:
            raise DomainError(f"radn must be >= 0 on {self.date}, got {self.radn}")
        if self.tmax < self.tmin:
            raise DomainError(
                f"tmax {self.tmax} < tmin {self.tmin} on {self.date}"
            )

    @property
    def tmean(self) -> float:
        return 0.5 * (self.tmax + self.tmin)

    @property
    def day_of_year(self) -> int:
        return self.date.timetuple().tm_yday


@dataclass(frozen=True)
class WeatherYear:
    """One season's gap-free daily series for a single calendar year."""

    year_id: int
    days: tuple[WeatherDay, ...]

    def __post_init__(self):
        if not self.days:
            raise DomainError("weather year has no days")
        prev = None
        for d in self.days:
            if d.date.year != self.year_id:
                raise DomainError(
                    f"date {d.date} outside calendar year {self.year_id}"
                )
            if prev is not None and (d.date - prev).days != 1:
                raise DomainError(f"date gap between {prev} and {d.date}")
            prev = d.date
        if self.days[0].date > dt.date(self.year_id, 4, 25):
            raise DomainError(
                f"coverage starts {self.days[0].date}, must start by 25 April"
            )
        if self.days[-1].date < dt.date(self.year_id, 12, 31):
            raise DomainError(
                f"coverage ends {self.days[-1].date}, must run through 31 December"
            )

    def index_of(self, date: dt.date) -> int:
        idx = (date - self.days[0].date).days
        if not 0 <= idx < len(self.days):
            raise DomainError(f"{date} outside coverage of year {self.year_id}")
        return idx

    def day(self, date: dt.date) -> WeatherDay:
        return self.days[self.index_of(date)]


@dataclass(frozen=True)
class WeatherPool:
    years: tuple[WeatherYear, ...]

    def __post_init__(self):
        if not self.years:
            raise DomainError("weather pool is empty")
        ids = [y.year_id for y in self.years]
        if len(set(ids)) != len(ids):
            raise DomainError(f"duplicate year ids in pool: {sorted(ids)}")

    def __len__(self) -> int:
        return len(self.years)


def _parse_float(text: str, line: int, field: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"cannot parse {field} value {text!r}", line=line, field=field)


def parse_weather_file(source: Union[str, os.PathLike, IO[str], IO[bytes]]) -> WeatherYear:
    """Read a single-year CSV and return a validated WeatherYear.

    Malformed rows raise ParseError naming the 1-based line and field.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return _parse_weather_stream(fh)
    if isinstance(source, (bytes, bytearray)):
        return _parse_weather_stream(io.StringIO(source.decode("utf-8")))
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return _parse_weather_stream(io.StringIO(data))


def _parse_weather_stream(fh: IO[str]) -> WeatherYear:
    lines = [ln.rstrip("\r\n") for ln in fh]
    if not lines:
        raise ParseError("empty weather file", line=1)
    header = [c.strip() for c in lines[0].split(",")]
    if header != _COLUMNS:
        missing = [c for c in _COLUMNS if c not in header]
        if missing:
            raise ParseError(f"missing column(s) {missing}", line=1)
        raise ParseError(
            f"header must be '{CSV_HEADER}', got {lines[0]!r}", line=1
        )
    days: list[WeatherDay] = []
    prev_date: dt.date | None = None
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != len(_COLUMNS):
            raise ParseError(
                f"expected {len(_COLUMNS)} fields, got {len(parts)}", line=line_no
            )
        try:
            date = dt.date.fromisoformat(parts[0])
        except ValueError:
            raise ParseError(
                f"cannot parse date {parts[0]!r}", line=line_no, field="date"
            )
        rain = _parse_float(parts[1], line_no, "rain")
        tmax = _parse_float(parts[2], line_no, "tmax")
        tmin = _parse_float(parts[3], line_no, "tmin")
        radn = _parse_float(parts[4], line_no, "radn")
        if rain < 0:
            raise ParseError(f"rain must be >= 0, got {rain}", line=line_no, field="rain")
        if radn < 0:
            raise ParseError(f"radn must be >= 0, got {radn}", line=line_no, field="radn")
        if tmax < tmin:
            raise ParseError(
                f"tmax {tmax} < tmin {tmin}", line=line_no, field="tmax"
            )
        if prev_date is not None:
            delta = (date - prev_date).days
            if delta != 1:
                expected = prev_date + dt.timedelta(days=1)
                raise ParseError(
                    f"date gap: expected {expected.isoformat()}, got {date.isoformat()}",
                    line=line_no,
                    field="date",
                )
        prev_date = date
        days.append(WeatherDay(date=date, rain=rain, tmax=tmax, tmin=tmin, radn=radn))
    if not days:
        raise ParseError("weather file has a header but no rows", line=2)
    try:
        return WeatherYear(year_id=days[0].date.year, days=tuple(days))
    except DomainError as exc:
        raise ParseError(str(exc)) from exc


def format_weather_csv(year: WeatherYear) -> str:
    """Canonical CSV text for a WeatherYear; parse -> format round-trips."""
    rows = [CSV_HEADER]
    for d in year.days:
        rows.append(
            f"{d.date.isoformat()},{d.rain!r},{d.tmax!r},{d.tmin!r},{d.radn!r}"
        )
    return "\n".join(rows) + "\n"


def write_weather_file(year: WeatherYear, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_weather_csv(year))


def load_weather_dir(directory: Union[str, os.PathLike]) -> WeatherPool:
    """Load every ``<year>.csv`` in a directory into a pool, sorted by year."""
    paths = sorted(
        p for p in os.listdir(directory) if p.endswith(".csv")
    )
    if not paths:
        raise DomainError(f"no .csv weather files in {directory}")
    years = []
    for name in paths:
        year = parse_weather_file(os.path.join(directory, name))
        stem = os.path.splitext(name)[0]
        if stem.isdigit() and int(stem) != year.year_id:
            raise ParseError(
                f"file {name} contains year {year.year_id}, filename says {stem}"
            )
        years.append(year)
    return WeatherPool(years=tuple(sorted(years, key=lambda y: y.year_id)))


def sample_training_year(pool: WeatherPool, rng: np.random.Generator) -> WeatherYear:
    """Uniform draw from the pool: each year with probability 1/len(pool)."""
    if len(pool.years) == 0:
        raise DomainError("cannot sample from an empty pool")
    return pool.years[int(rng.integers(0, len(pool.years)))]
