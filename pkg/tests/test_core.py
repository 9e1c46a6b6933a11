"""Core domain types and return arithmetic."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irrilearn.core import (
    ActionSet,
    DomainError,
    EconomicConfig,
    EpisodeTrace,
    StateVector,
    StepRecord,
    returns_to_go,
    step_reward,
    total_return,
)

UNIFORM5 = (0.2, 0.2, 0.2, 0.2, 0.2)


def make_state(**kw) -> StateVector:
    base = dict(stage=5.0, lai=0.0, esw=(9.0, 18.0, 44.0, 37.0, 3.0), cu_irrig=0.0, cu_rain=0.0)
    base.update(kw)
    return StateVector(**base)


def make_trace(rewards, yield_kg_ha=0.0, year=1990) -> EpisodeTrace:
    steps = tuple(
        StepRecord(
            day_of_year=122 + t,
            state=make_state(),
            action_probs=UNIFORM5,
            action_index=0,
            reward=r,
        )
        for t, r in enumerate(rewards)
    )
    profit = 0.0
    for r in rewards:
        profit += r
    return EpisodeTrace(steps=steps, yield_kg_ha=yield_kg_ha, profit=profit, weather_year_id=year)


class TestStateVector:
    def test_round_trip(self):
        s = make_state(stage=30.2, lai=3.57, cu_irrig=60.0, cu_rain=74.0)
        assert StateVector.from_array(s.to_array()) == s
        assert s.to_array().shape == (9,)

    def test_fixed_order(self):
        s = make_state(stage=1.0, lai=2.0, esw=(3.0, 4.0, 5.0, 6.0, 7.0), cu_irrig=8.0, cu_rain=9.0)
        assert list(s.to_array()) == [1, 2, 3, 4, 5, 6, 7, 8, 9]

    @pytest.mark.parametrize(
        "kw",
        [
            dict(lai=-0.1),
            dict(esw=(-1.0, 0, 0, 0, 0)),
            dict(cu_irrig=-2.0),
            dict(cu_rain=-2.0),
            dict(stage=float("nan")),
            dict(esw=(1.0, 2.0, 3.0)),
        ],
    )
    def test_rejects_invalid(self, kw):
        with pytest.raises(DomainError):
            make_state(**kw)


class TestActionSet:
    def test_default(self):
        a = ActionSet()
        assert a.amounts == (0.0, 10.0, 20.0, 30.0, 40.0)
        assert len(a) == 5 and a[2] == 20.0

    @pytest.mark.parametrize(
        "amounts", [(10.0, 20.0), (0.0, 20.0, 10.0), (0.0, 0.0, 10.0), ()]
    )
    def test_rejects_invalid(self, amounts):
        with pytest.raises(DomainError):
            ActionSet(amounts=amounts)


class TestStepRecord:
    def test_probs_must_sum_to_one(self):
        with pytest.raises(DomainError):
            StepRecord(1, make_state(), (0.5, 0.4), 0, 0.0)

    def test_zero_probability_action_rejected(self):
        with pytest.raises(DomainError):
            StepRecord(1, make_state(), (1.0, 0.0), 1, 0.0)

    def test_action_index_range(self):
        with pytest.raises(DomainError):
            StepRecord(1, make_state(), UNIFORM5, 5, 0.0)


class TestTotalReturn:
    def test_simple_sum(self):
        assert total_return(make_trace([-12.0, 0.0, 1879.0])) == 1867.0

    def test_single_zero_step(self):
        assert total_return(make_trace([0.0])) == 0.0

    def test_empty_trace_rejected(self):
        with pytest.raises(DomainError):
            make_trace([])

    def test_profit_must_match_rewards(self):
        steps = make_trace([1.0, 2.0]).steps
        with pytest.raises(DomainError):
            EpisodeTrace(steps=steps, yield_kg_ha=0.0, profit=5.0, weather_year_id=1990)

    def test_published_season_example(self):
        # 161-day season, day 122 through 282, 18 irrigation events
        # totalling 350 mm and a 7,516 kg/ha harvest: profit lands on
        # exactly 1669 = 0.25*7516 - 0.6*350.
        events = {
            175: 10, 176: 20, 189: 10, 190: 20, 195: 40, 207: 20, 212: 20,
            235: 30, 248: 10, 251: 10, 254: 20, 258: 10, 259: 20, 262: 10,
            264: 10, 266: 40, 275: 30, 278: 20,
        }
        assert sum(events.values()) == 350
        econ = EconomicConfig()
        rewards = []
        for day in range(122, 283):
            terminal = day == 282
            rewards.append(
                step_reward(
                    float(events.get(day, 0)),
                    terminal,
                    7516.0 if terminal else None,
                    econ,
                )
            )
        assert total_return(make_trace(rewards, yield_kg_ha=7516.0)) == 1669.0


class TestReturnsToGo:
    def test_backward_partial_sums(self):
        # suffix sums: 1669, then -6+1669, then -12+1663
        assert list(returns_to_go([-12.0, -6.0, 1669.0])) == [1651.0, 1663.0, 1669.0]

    def test_zeros(self):
        assert list(returns_to_go([0.0, 0.0, 0.0])) == [0.0, 0.0, 0.0]

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            returns_to_go([])

    def test_matches_forward_suffix_oracle(self):
        rng = np.random.default_rng(7)
        rewards = rng.uniform(-50, 50, size=200)
        out = returns_to_go(rewards)
        for t in range(200):
            direct = 0.0
            for k in range(t, 200):
                direct += rewards[k]
            assert out[t] == pytest.approx(direct, abs=1e-9)

    @given(
        st.lists(
            st.integers(min_value=-(2**20), max_value=2**20).map(lambda n: n / 256.0),
            min_size=1,
            max_size=60,
        )
    )
    def test_suffix_difference_identity(self, rewards):
        # With dyadic rewards every accumulation is exact, so the
        # difference identity holds with zero tolerance.
        out = returns_to_go(rewards)
        assert out[-1] == rewards[-1]
        for t in range(len(rewards) - 1):
            assert out[t] - out[t + 1] == rewards[t]


class TestStepReward:
    def test_water_cost(self):
        assert step_reward(20.0, False) == -12.0
        assert step_reward(40.0, False) == -24.0

    def test_zero_action_free(self):
        assert step_reward(0.0, False, econ=EconomicConfig(water_cost_per_mm=123.0)) == 0.0

    def test_terminal_revenue(self):
        assert step_reward(0.0, True, 7516.0) == 1879.0

    def test_negative_yield_rejected(self):
        with pytest.raises(DomainError):
            step_reward(0.0, True, -1.0)

    def test_yield_requires_terminal(self):
        with pytest.raises(DomainError):
            step_reward(0.0, False, 100.0)
        with pytest.raises(DomainError):
            step_reward(0.0, True, None)

    @given(
        st.floats(min_value=0, max_value=100),
        st.floats(min_value=0, max_value=100),
    )
    def test_linear_in_amount(self, a1, a2):
        lhs = step_reward(a1, False) + step_reward(a2, False)
        rhs = step_reward(a1 + a2, False) + step_reward(0.0, False)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_trace_profit_invariant_holds_for_generated_traces():
    rng = np.random.default_rng(3)
    for _ in range(20):
        rewards = list(rng.uniform(-30, 30, size=rng.integers(1, 50)))
        trace = make_trace(rewards)
        assert abs(total_return(trace) - trace.profit) <= 1e-6
