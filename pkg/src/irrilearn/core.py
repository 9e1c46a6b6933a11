"""Domain types shared by every module, plus the return arithmetic.

An episode is one sowing-to-termination run of the crop environment: a
sequence of daily (state, action probabilities, sampled action, reward)
records with a terminal grain yield. Money is carried as float64 $/ha
throughout; rounding to whole dollars happens only at display time.

The nine-component state order is fixed (stage, LAI, ESW for the five
monitored layers top-down, cumulative irrigation, cumulative rain) and
is relied on by the policy network, checkpoints, and trace CSVs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

STATE_DIM = 9
STATE_FIELDS = (
    "stage", "lai", "esw1", "esw2", "esw3", "esw4", "esw5", "cu_irrig", "cu_rain",
)


class DomainError(ValueError):
    """Input violates a documented precondition or invariant."""


class UsageError(RuntimeError):
    """API called out of sequence (e.g. stepping a finished episode)."""


class NumericError(ArithmeticError):
    """Non-finite value produced where finite arithmetic is required."""


class ParseError(ValueError):
    """Malformed input file; carries the offending line and field."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = ""
        if line is not None:
            where += f" (line {line}"
            where += f", field '{field}')" if field is not None else ")"
        elif field is not None:
            where += f" (field '{field}')"
        super().__init__(message + where)


@dataclass(frozen=True)
class StateVector:
    """The nine monitored quantities fed to the decision rule each day.

    stage: phenological development position, ~5 at sowing to 85+ late
        grain fill.
    lai: leaf area index, m2/m2.
    esw: extractable soil water (mm) of the five monitored layers,
        shallowest first.
    cu_irrig / cu_rain: cumulative irrigation / rainfall (mm) since
        sowing; non-decreasing across consecutive states of an episode.
    """

    stage: float
    lai: float
    esw: tuple[float, float, float, float, float]
    cu_irrig: float
    cu_rain: float

    def __post_init__(self):
        if len(self.esw) != 5:
            raise DomainError(f"expected 5 layer ESW values, got {len(self.esw)}")
        vals = (self.stage, self.lai, *self.esw, self.cu_irrig, self.cu_rain)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"non-finite state component in {vals}")
        if self.lai < 0:
            raise DomainError(f"lai must be >= 0, got {self.lai}")
        if any(v < 0 for v in self.esw):
            raise DomainError(f"ESW must be >= 0, got {self.esw}")
        if self.cu_irrig < 0 or self.cu_rain < 0:
            raise DomainError("cumulative water totals must be >= 0")

    def to_array(self) -> np.ndarray:
        return np.array(
            (self.stage, self.lai, *self.esw, self.cu_irrig, self.cu_rain),
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "StateVector":
        a = np.asarray(arr, dtype=np.float64)
        if a.shape != (STATE_DIM,):
            raise DomainError(f"state array must have shape ({STATE_DIM},), got {a.shape}")
        return cls(
            stage=float(a[0]),
            lai=float(a[1]),
            esw=tuple(float(v) for v in a[2:7]),
            cu_irrig=float(a[7]),
            cu_rain=float(a[8]),
        )


@dataclass(frozen=True)
class ActionSet:
    """Ordered candidate irrigation depths in mm; index 0 is always 'no water'."""

    amounts: tuple[float, ...] = (0.0, 10.0, 20.0, 30.0, 40.0)

    def __post_init__(self):
        if not self.amounts:
            raise DomainError("action set must be non-empty")
        if self.amounts[0] != 0.0:
            raise DomainError("first candidate amount must be 0 mm")
        if any(b <= a for a, b in zip(self.amounts, self.amounts[1:])):
            raise DomainError(f"amounts must be strictly increasing, got {self.amounts}")
        if any(a < 0 for a in self.amounts):
            raise DomainError("amounts must be non-negative")

    def __len__(self) -> int:
        return len(self.amounts)

    def __getitem__(self, index: int) -> float:
        return self.amounts[index]


@dataclass(frozen=True)
class EconomicConfig:
    """Unit water cost ($/mm applied) and grain price ($/kg)."""

    water_cost_per_mm: float = 0.6
    grain_price_per_kg: float = 0.25

    def __post_init__(self):
        if self.water_cost_per_mm < 0 or self.grain_price_per_kg < 0:
            raise DomainError("prices must be >= 0")


@dataclass(frozen=True)
class StepRecord:
    """One day of an episode: observed state, prescription, choice, reward."""

    day_of_year: int
    state: StateVector
    action_probs: tuple[float, ...]
    action_index: int
    reward: float

    def __post_init__(self):
        total = math.fsum(self.action_probs)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"action_probs sum to {total!r}, expected 1 within 1e-9")
        if not 0 <= self.action_index < len(self.action_probs):
            raise DomainError(f"action_index {self.action_index} out of range")
        if self.action_probs[self.action_index] <= 0.0:
            raise DomainError("sampled action has zero probability")


@dataclass(frozen=True)
class EpisodeTrace:
    """Ordered step records plus the terminal yield and season profit."""

    steps: tuple[StepRecord, ...]
    yield_kg_ha: float
    profit: float
    weather_year_id: int
    termination_reason: str = "stage"

    def __post_init__(self):
        if len(self.steps) < 1:
            raise DomainError("trace must contain at least one step")
        if self.yield_kg_ha < 0:
            raise DomainError(f"yield must be >= 0, got {self.yield_kg_ha}")
        reward_sum = _sum_sequential(r.reward for r in self.steps)
        if abs(reward_sum - self.profit) > 1e-6:
            raise DomainError(
                f"profit {self.profit} != sum of step rewards {reward_sum}"
            )

    def rewards(self) -> np.ndarray:
        return np.array([s.reward for s in self.steps], dtype=np.float64)

    def actions(self) -> list[int]:
        return [s.action_index for s in self.steps]

    def irrigation_mm(self, actions: ActionSet) -> float:
        """Total mm applied over the episode, including the final day."""
        return float(sum(actions[s.action_index] for s in self.steps))


def _sum_sequential(values) -> float:
    # Plain left-to-right accumulation: summation order is part of the
    # determinism contract, so no pairwise/compensated tricks here.
    total = 0.0
    for v in values:
        total += v
    return total


def total_return(trace: EpisodeTrace) -> float:
    """Sum of step rewards in index order; equals trace.profit within 1e-6."""
    if len(trace.steps) == 0:
        raise DomainError("empty trace has no return")
    return _sum_sequential(r.reward for r in trace.steps)


def returns_to_go(rewards: Sequence[float]) -> np.ndarray:
    """Suffix sums of rewards by backward accumulation.

    out[t] = rewards[t] + out[t+1], with out[T-1] = rewards[T-1], so
    out[0] is the episode's total return.
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise DomainError("rewards must be a non-empty 1-D sequence")
    out = np.empty_like(r)
    acc = 0.0
    for t in range(r.size - 1, -1, -1):
        acc += r[t]
        out[t] = acc
    return out


def step_reward(
    action_mm: float,
    is_terminal: bool,
    yield_kg_ha: Optional[float] = None,
    econ: EconomicConfig = EconomicConfig(),
) -> float:
    """Daily reward: water cost every day, grain revenue on the last day."""
    if action_mm < 0:
        raise DomainError(f"action must be >= 0 mm, got {action_mm}")
    cost = -econ.water_cost_per_mm * action_mm
    if not is_terminal:
        if yield_kg_ha is not None:
            raise DomainError("yield is only defined on the terminal step")
        return cost
    if yield_kg_ha is None:
        raise DomainError("terminal step requires a yield")
    if yield_kg_ha < 0:
        raise DomainError(f"yield must be >= 0, got {yield_kg_ha}")
    return cost + econ.grain_price_per_kg * yield_kg_ha
