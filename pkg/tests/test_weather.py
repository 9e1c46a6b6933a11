"""Weather CSV ingestion, validation, and the uniform year draw."""

import datetime as dt
import io

import numpy as np
import pytest
import scipy.stats

import weathergen
from irrilearn.core import DomainError, ParseError
from irrilearn.rng import STREAM_WEATHER_CHOICE, stream
from irrilearn.weather import (
    WeatherDay,
    WeatherPool,
    WeatherYear,
    format_weather_csv,
    load_weather_dir,
    parse_weather_file,
    sample_training_year,
    write_weather_file,
)


def csv_lines(year: WeatherYear) -> list[str]:
    return format_weather_csv(year).splitlines()


class TestWeatherDay:
    def test_tmax_below_tmin_rejected(self):
        with pytest.raises(DomainError):
            WeatherDay(dt.date(1990, 1, 1), 0.0, 5.0, 10.0, 12.0)

    def test_negative_rain_rejected(self):
        with pytest.raises(DomainError):
            WeatherDay(dt.date(1990, 1, 1), -1.0, 15.0, 5.0, 12.0)


class TestWeatherYear:
    def test_gap_rejected(self):
        year = weathergen.generate_year(1990, 0)
        days = year.days[:100] + year.days[101:]
        with pytest.raises(DomainError, match="gap"):
            WeatherYear(1990, days)

    def test_coverage_must_reach_december(self):
        year = weathergen.generate_year(1990, 0)
        with pytest.raises(DomainError, match="31 December"):
            WeatherYear(1990, year.days[:300])

    def test_day_lookup(self):
        year = weathergen.generate_year(1990, 0)
        d = dt.date(1990, 6, 3)
        assert year.day(d).date == d
        with pytest.raises(DomainError):
            year.day(dt.date(1991, 6, 3))


class TestParsing:
    def test_full_year_parses(self, tmp_path):
        year = weathergen.generate_year(1981, 0)
        path = tmp_path / "1981.csv"
        write_weather_file(year, path)
        parsed = parse_weather_file(path)
        assert parsed.year_id == 1981
        assert len(parsed.days) == 365
        assert parsed == year

    def test_round_trip_bytes_identical(self):
        year = weathergen.generate_year(1984, 0)
        text = format_weather_csv(year)
        again = format_weather_csv(parse_weather_file(io.StringIO(text)))
        assert again == text

    def test_negative_rain_names_row_and_field(self):
        year = weathergen.generate_year(1990, 0)
        lines = csv_lines(year)
        parts = lines[40].split(",")
        parts[1] = "-1"
        lines[40] = ",".join(parts)
        with pytest.raises(ParseError, match=r"line 41.*rain"):
            parse_weather_file(io.StringIO("\n".join(lines)))

    def test_missing_day_names_date(self):
        year = weathergen.generate_year(2008, 0)
        idx = year.index_of(dt.date(2008, 6, 3))
        lines = csv_lines(year)
        del lines[idx + 1]  # header offset
        with pytest.raises(ParseError, match="2008-06-03"):
            parse_weather_file(io.StringIO("\n".join(lines)))

    def test_tmax_below_tmin_names_row(self):
        year = weathergen.generate_year(1990, 0)
        lines = csv_lines(year)
        parts = lines[10].split(",")
        parts[2], parts[3] = "1.0", "9.0"
        lines[10] = ",".join(parts)
        with pytest.raises(ParseError, match="line 11"):
            parse_weather_file(io.StringIO("\n".join(lines)))

    def test_missing_column_rejected(self):
        with pytest.raises(ParseError, match="radn"):
            parse_weather_file(io.StringIO("date,rain,tmax,tmin\n"))

    def test_unparsable_value_names_field(self):
        year = weathergen.generate_year(1990, 0)
        lines = csv_lines(year)
        parts = lines[5].split(",")
        parts[4] = "cloudy"
        lines[5] = ",".join(parts)
        with pytest.raises(ParseError, match="radn"):
            parse_weather_file(io.StringIO("\n".join(lines)))


class TestDirectoryLoading:
    def test_loads_sorted_pool(self, train_weather_dir):
        pool = load_weather_dir(train_weather_dir)
        assert [y.year_id for y in pool.years] == list(range(1981, 1991))

    def test_filename_year_mismatch_rejected(self, tmp_path):
        year = weathergen.generate_year(1990, 0)
        write_weather_file(year, tmp_path / "1991.csv")
        with pytest.raises(ParseError, match="1991"):
            load_weather_dir(tmp_path)

    def test_empty_dir_rejected(self, tmp_path):
        with pytest.raises(DomainError):
            load_weather_dir(tmp_path)

    def test_duplicate_year_ids_rejected(self):
        year = weathergen.generate_year(1990, 0)
        with pytest.raises(DomainError, match="duplicate"):
            WeatherPool((year, year))


class TestSampling:
    def test_singleton_pool(self, one_year):
        pool = WeatherPool((one_year,))
        rng = stream(0, STREAM_WEATHER_CHOICE)
        assert all(sample_training_year(pool, rng) is one_year for _ in range(10))

    def test_deterministic_sequence(self, train_pool):
        a = stream(123, STREAM_WEATHER_CHOICE)
        b = stream(123, STREAM_WEATHER_CHOICE)
        seq_a = [sample_training_year(train_pool, a).year_id for _ in range(500)]
        seq_b = [sample_training_year(train_pool, b).year_id for _ in range(500)]
        assert seq_a == seq_b

    def test_uniformity_over_thirty_years(self):
        years = tuple(weathergen.generate_years(1981, 2010, 0))
        pool = WeatherPool(years)
        rng = stream(42, STREAM_WEATHER_CHOICE)
        counts = {y.year_id: 0 for y in years}
        for _ in range(30_000):
            counts[sample_training_year(pool, rng).year_id] += 1
        # 99.99% binomial interval for n=30000, p=1/30 is well inside [800, 1200]
        assert all(800 <= c <= 1200 for c in counts.values()), counts
        expected = 30_000 / 30
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        assert chi2 < scipy.stats.chi2.ppf(0.999, 29)

    def test_empty_pool_error(self):
        with pytest.raises(DomainError):
            WeatherPool(())
