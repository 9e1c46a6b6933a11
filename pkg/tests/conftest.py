"""Shared fixtures: synthetic weather pools and small network shapes."""

import pathlib
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(pathlib.Path(__file__).parent))

import weathergen  # noqa: E402
from irrilearn.cropsim import EnvConfig  # noqa: E402
from irrilearn.weather import WeatherPool  # noqa: E402

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")

TRAIN_YEARS = (1981, 1990)
TEST_YEARS = (1991, 1993)
WEATHER_SEED = 0


@pytest.fixture(scope="session")
def train_pool() -> WeatherPool:
    return WeatherPool(tuple(weathergen.generate_years(*TRAIN_YEARS, WEATHER_SEED)))


@pytest.fixture(scope="session")
def test_years() -> tuple:
    return tuple(weathergen.generate_years(*TEST_YEARS, WEATHER_SEED))


@pytest.fixture(scope="session")
def one_year():
    return weathergen.generate_year(1990, WEATHER_SEED)


@pytest.fixture(scope="session")
def env_config() -> EnvConfig:
    return EnvConfig()


@pytest.fixture(scope="session")
def train_weather_dir(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("weather_train")
    weathergen.write_pool(path, *TRAIN_YEARS, WEATHER_SEED)
    return str(path)


@pytest.fixture(scope="session")
def test_weather_dir(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("weather_test")
    weathergen.write_pool(path, *TEST_YEARS, WEATHER_SEED)
    return str(path)
