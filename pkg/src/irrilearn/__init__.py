"""Daily irrigation decision rules learned by episodic policy gradients.

Library layout:
  core     shared domain types and return arithmetic
  weather  per-year daily weather CSVs and the uniform training draw
  soil     layered profile and tipping-bucket redistribution
  cropsim  the environment contract plus the built-in surrogate simulator
  policy   the feed-forward stochastic decision rule and its gradients
  learner  training loop, model selection, evaluation, per-year search
  config   TOML run configuration
  reports  every CSV the package emits or reads back
  cli      the irrilearn command
"""

from .core import (
    ActionSet,
    EconomicConfig,
    EpisodeTrace,
    StateVector,
    StepRecord,
    returns_to_go,
    step_reward,
    total_return,
)
from .cropsim import CropParams, CropState, EnvConfig, Session, reset
from .learner import (
    BenchmarkResult,
    EvalResult,
    TrainConfig,
    TrainLog,
    benchmark_search,
    evaluate,
    moving_average,
    reinforce_episode_update,
    run_episode,
    train,
)
from .policy import (
    Architecture,
    PolicyParameters,
    apply_update,
    forward,
    grad_log_prob,
    init_parameters,
    load_checkpoint,
    param_count,
    sample_action,
    save_checkpoint,
)
from .soil import SoilLayer, SoilProfile, infiltrate_and_drain
from .weather import (
    WeatherDay,
    WeatherPool,
    WeatherYear,
    load_weather_dir,
    parse_weather_file,
    sample_training_year,
)

__version__ = "0.1.0"
