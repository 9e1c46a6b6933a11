"""Episodic policy-gradient training, evaluation, and per-year search.

Training follows the classic Monte-Carlo scheme: simulate one episode
under the current rule, then sweep the steps backwards accumulating the
return-to-go G and nudging parameters by alpha * G * grad(log pi) at
each step. The gradient is taken at the parameters as they stand within
the sweep (they mutate step to step); a frozen-gradient variant that
evaluates every step at the episode-start parameters exists for
ablation.

Model selection uses the trailing moving average of episode profit
(prefix mean before the window fills); the trainer keeps the single
best-so-far parameter copy, which is equivalent to retaining all
per-episode checkpoints and picking the maximum, in O(1) memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence

import numpy as np

from . import cropsim
from .core import (
    DomainError,
    EpisodeTrace,
    NumericError,
    StepRecord,
    _sum_sequential,
)
from .cropsim import EnvConfig, Session
from .policy import (
    Architecture,
    PolicyParameters,
    apply_update,
    forward,
    grad_log_prob,
    init_parameters,
    sample_action,
)
from .rng import (
    STREAM_ACTION_SAMPLING,
    STREAM_BENCHMARK,
    STREAM_PARAM_INIT,
    STREAM_WEATHER_CHOICE,
    replicate_stream,
    stream,
)
from .weather import WeatherPool, WeatherYear, sample_training_year

TRAINLOG_HEADER = "episode,year_id,profit,ma,length,cuirrig"


@dataclass
class TrainConfig:
    """Everything one training run needs besides the weather files."""

    pool: WeatherPool
    env: EnvConfig = EnvConfig()
    arch: Architecture = Architecture()
    episodes: int = 20_000
    alpha: float = 1e-7
    ma_order: int = 100
    seed: int = 0
    checkpoint_every: int = 0
    init_scale: float = 1.0
    frozen_theta_gradients: bool = False
    input_offset: Optional[np.ndarray] = None
    input_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.episodes < 1:
            raise DomainError(f"episodes must be >= 1, got {self.episodes}")
        if self.alpha <= 0:
            raise DomainError(f"alpha must be > 0, got {self.alpha}")
        if self.ma_order < 1:
            raise DomainError(f"ma_order must be >= 1, got {self.ma_order}")
        if self.arch.output_dim != len(self.env.actions):
            raise DomainError(
                f"network outputs {self.arch.output_dim} probabilities but the "
                f"action set has {len(self.env.actions)} candidates"
            )


@dataclass(frozen=True)
class TrainLogRow:
    episode: int
    year_id: int
    profit: float
    ma: float
    length: int
    cuirrig: float

    def to_csv(self) -> str:
        return (
            f"{self.episode},{self.year_id},{self.profit!r},{self.ma!r},"
            f"{self.length},{self.cuirrig!r}"
        )


@dataclass
class TrainLog:
    rows: list[TrainLogRow]
    best_episode: int
    best_ma: float


@dataclass
class EvalResult:
    mean_profit: float
    sd_profit: float
    sd_defined: bool
    traces: list[EpisodeTrace]


@dataclass
class BenchmarkResult:
    """Outcome of a fixed-year search: the best single episode ever seen."""

    best_profit: float
    best_actions: tuple[int, ...]
    schedule: tuple[tuple[int, float], ...]  # (day_of_year, mm applied)
    zero_profit: float
    episodes_used: int
    best_so_far: list[float]


def run_episode(
    session: Session, params: PolicyParameters, rng: np.random.Generator
) -> EpisodeTrace:
    """Drive a fresh session to termination under the stochastic rule."""
    if session.done or session.steps_taken > 0:
        raise DomainError("run_episode requires a fresh session")
    records: list[StepRecord] = []
    state = session.state_vector()
    done = False
    while not done:
        day = session.current_day.day_of_year
        probs = forward(params, state)
        action = sample_action(probs, rng)
        next_state, reward, done = session.step(action)
        records.append(
            StepRecord(
                day_of_year=day,
                state=state,
                action_probs=tuple(float(p) for p in probs),
                action_index=action,
                reward=reward,
            )
        )
        state = next_state
    return _finish_trace(session, records)


def _finish_trace(session: Session, records: list[StepRecord]) -> EpisodeTrace:
    profit = _sum_sequential(r.reward for r in records)
    return EpisodeTrace(
        steps=tuple(records),
        yield_kg_ha=float(session.yield_kg_ha),
        profit=profit,
        weather_year_id=session.weather.year_id,
        termination_reason=session.termination_reason,
    )


def _run_uniform_episode(
    session: Session, rng: np.random.Generator
) -> EpisodeTrace:
    """Exploration episode: every candidate equally likely each day."""
    k = len(session.config.actions)
    probs = tuple(1.0 / k for _ in range(k))
    records: list[StepRecord] = []
    state = session.state_vector()
    done = False
    while not done:
        day = session.current_day.day_of_year
        action = int(rng.integers(0, k))
        next_state, reward, done = session.step(action)
        records.append(StepRecord(day, state, probs, action, reward))
        state = next_state
    return _finish_trace(session, records)


def replay_schedule(
    env: EnvConfig, weather: WeatherYear, action_indices: Sequence[int]
) -> EpisodeTrace:
    """Re-run a recorded action sequence; the environment being
    deterministic, states and rewards reproduce exactly."""
    session, state, _ = cropsim.reset(env, weather)
    k = len(env.actions)
    records: list[StepRecord] = []
    done = False
    for action in action_indices:
        if done:
            raise DomainError("schedule continues past episode termination")
        day = session.current_day.day_of_year
        onehot = tuple(1.0 if i == action else 0.0 for i in range(k))
        next_state, reward, done = session.step(int(action))
        records.append(StepRecord(day, state, onehot, int(action), reward))
        state = next_state
    if not done:
        raise DomainError("schedule ended before the episode terminated")
    return _finish_trace(session, records)


def reinforce_episode_update(
    params: PolicyParameters,
    trace: EpisodeTrace,
    alpha: float,
    frozen_theta_gradients: bool = False,
) -> PolicyParameters:
    """Backward sweep over the trace applying alpha * G * grad(log pi).

    By default each step's gradient is evaluated at the already-updated
    parameters, i.e. theta mutates inside the loop; with
    frozen_theta_gradients every gradient is taken at the episode-start
    theta before any update lands.
    """
    steps = trace.steps
    frozen_grads = None
    if frozen_theta_gradients:
        frozen_grads = [
            grad_log_prob(params, s.state, s.action_index) for s in steps
        ]
    g_return = 0.0
    for t in range(len(steps) - 1, -1, -1):
        rec = steps[t]
        g_return += rec.reward
        try:
            if frozen_grads is not None:
                grad = frozen_grads[t]
            else:
                grad = grad_log_prob(params, rec.state, rec.action_index)
            apply_update(params, alpha, g_return, grad)
        except NumericError as exc:
            raise NumericError(f"step t={t} (day {rec.day_of_year}): {exc}") from exc
    return params


def _window_mean(values: Sequence[float], index: int, order: int) -> float:
    # fsum: exactly-rounded window total, so the moving average is
    # reproducible independent of summation order at any profit scale.
    lo = max(0, index - order + 1)
    window = values[lo:index + 1]
    return math.fsum(window) / len(window)


def moving_average(values: Sequence[float], order: int) -> np.ndarray:
    """Trailing mean of the last `order` values; prefix mean before that."""
    if order < 1:
        raise DomainError(f"order must be >= 1, got {order}")
    v = list(float(x) for x in values)
    out = np.empty(len(v), dtype=np.float64)
    for i in range(len(v)):
        out[i] = _window_mean(v, i, order)
    return out


def train(
    config: TrainConfig,
    log_stream: Optional[IO[str]] = None,
    checkpoint_path=None,
) -> tuple[PolicyParameters, TrainLog]:
    """Run the full training loop; deterministic given config.seed.

    When log_stream is given, log rows are written (and flushed) as they
    are produced so an aborted run still leaves a usable partial log.
    checkpoint_path, combined with checkpoint_every > 0, periodically
    rewrites the running-best parameters for crash recovery.
    """
    from .policy import save_checkpoint  # local import avoids cycle at module load

    init_rng = stream(config.seed, STREAM_PARAM_INIT)
    weather_rng = stream(config.seed, STREAM_WEATHER_CHOICE)
    action_rng = stream(config.seed, STREAM_ACTION_SAMPLING)
    params = init_parameters(
        config.arch,
        init_rng,
        config.init_scale,
        input_offset=config.input_offset,
        input_scale=config.input_scale,
    )
    if log_stream is not None:
        log_stream.write(TRAINLOG_HEADER + "\n")
        log_stream.flush()
    profits: list[float] = []
    rows: list[TrainLogRow] = []
    best_ma = -math.inf
    best_episode = 0
    best_params = params.copy()
    for n in range(1, config.episodes + 1):
        year = sample_training_year(config.pool, weather_rng)
        session, _, _ = cropsim.reset(config.env, year)
        try:
            trace = run_episode(session, params, action_rng)
            reinforce_episode_update(
                params, trace, config.alpha, config.frozen_theta_gradients
            )
        except NumericError as exc:
            raise NumericError(f"episode {n}: {exc}") from exc
        profits.append(trace.profit)
        ma = _window_mean(profits, n - 1, config.ma_order)
        row = TrainLogRow(
            episode=n,
            year_id=year.year_id,
            profit=trace.profit,
            ma=ma,
            length=len(trace.steps),
            cuirrig=trace.irrigation_mm(config.env.actions),
        )
        rows.append(row)
        if log_stream is not None:
            log_stream.write(row.to_csv() + "\n")
            log_stream.flush()
        if ma > best_ma:
            best_ma = ma
            best_episode = n
            best_params = params.copy()
        if (
            checkpoint_path is not None
            and config.checkpoint_every > 0
            and n % config.checkpoint_every == 0
        ):
            save_checkpoint(best_params, checkpoint_path)
    return best_params, TrainLog(rows=rows, best_episode=best_episode, best_ma=best_ma)


def evaluate(
    params: PolicyParameters,
    weather: WeatherYear,
    env: EnvConfig,
    replicates: int = 30,
    base_seed: int = 0,
) -> EvalResult:
    """Replicate episodes on fixed weather; report sample mean and sd.

    Replicate r draws actions from the stream seeded base_seed XOR r, so
    replicates are independent and individually reproducible. The sd uses
    the n-1 denominator; with a single replicate it is reported as 0 and
    flagged undefined.
    """
    if replicates < 1:
        raise DomainError(f"replicates must be >= 1, got {replicates}")
    traces = []
    for r in range(replicates):
        rng = replicate_stream(base_seed, r)
        session, _, _ = cropsim.reset(env, weather)
        traces.append(run_episode(session, params, rng))
    profits = np.array([t.profit for t in traces], dtype=np.float64)
    mean = float(_sum_sequential(profits) / len(profits))
    if replicates >= 2:
        sd = float(np.sqrt(_sum_sequential((profits - mean) ** 2) / (replicates - 1)))
        return EvalResult(mean, sd, True, traces)
    return EvalResult(mean, 0.0, False, traces)


def benchmark_search(
    weather: WeatherYear, budget_episodes: int, config: TrainConfig
) -> BenchmarkResult:
    """Search one fixed year for the highest single-episode profit.

    Runs the normal training loop restricted to the given weather, with
    every tenth episode replaced by a uniform-random schedule (pure
    exploration, no parameter update). The all-zero schedule is scored
    up front and seeds the maximum, so the result is never worse than
    not irrigating; the best-so-far series is non-decreasing.
    """
    if budget_episodes < 1:
        raise DomainError(f"budget must be >= 1, got {budget_episodes}")
    init_rng = stream(config.seed, STREAM_PARAM_INIT)
    action_rng = stream(config.seed, STREAM_BENCHMARK)
    params = init_parameters(
        config.arch,
        init_rng,
        config.init_scale,
        input_offset=config.input_offset,
        input_scale=config.input_scale,
    )
    zero_trace = replay_zero_schedule(config.env, weather)
    best_profit = zero_trace.profit
    best_trace = zero_trace
    best_so_far: list[float] = []
    for n in range(1, budget_episodes + 1):
        session, _, _ = cropsim.reset(config.env, weather)
        if n % 10 == 0:
            trace = _run_uniform_episode(session, action_rng)
        else:
            trace = run_episode(session, params, action_rng)
            reinforce_episode_update(
                params, trace, config.alpha, config.frozen_theta_gradients
            )
        if trace.profit > best_profit:
            best_profit = trace.profit
            best_trace = trace
        best_so_far.append(best_profit)
    actions = tuple(best_trace.actions())
    schedule = tuple(
        (s.day_of_year, config.env.actions[s.action_index]) for s in best_trace.steps
    )
    return BenchmarkResult(
        best_profit=best_profit,
        best_actions=actions,
        schedule=schedule,
        zero_profit=zero_trace.profit,
        episodes_used=budget_episodes,
        best_so_far=best_so_far,
    )


def replay_zero_schedule(env: EnvConfig, weather: WeatherYear) -> EpisodeTrace:
    """The never-irrigate episode for a year (rainfed baseline)."""
    session, state, _ = cropsim.reset(env, weather)
    k = len(env.actions)
    onehot = tuple(1.0 if i == 0 else 0.0 for i in range(k))
    records = []
    done = False
    while not done:
        day = session.current_day.day_of_year
        next_state, reward, done = session.step(0)
        records.append(StepRecord(day, state, onehot, 0, reward))
        state = next_state
    return _finish_trace(session, records)
