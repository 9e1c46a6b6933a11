"""Episodic crop environment: a desk-scale surrogate wheat simulator.

The environment contract is reset/step/done over daily time steps; this
module provides a built-in water-balance surrogate that fills the role
of a full crop model. The surrogate is deterministic given weather and
actions, conserves water exactly, and is calibrated only qualitatively
(season shape, yield range); every coefficient lives in CropParams and
can be overridden from the run configuration. A different simulator can
be substituted by implementing the same session protocol:

    session, state, sowing_doy = reset(config, weather)
    state, reward, done = session.step(action_index)

Within one simulated day the order of operations is fixed: infiltrate
rain+irrigation and drain, compute reference ET, evaporate from the
surface layer, transpire against root supply (yielding the day's stress
factor), advance thermal time and stage, grow or senesce the canopy,
accrue biomass, deepen roots, then update cumulative totals and check
termination.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    ActionSet,
    DomainError,
    EconomicConfig,
    StateVector,
    UsageError,
    step_reward,
)
from .soil import MONITORED_LAYERS, SoilLayer, SoilProfile, DEFAULT_SOIL_LAYERS, infiltrate_and_drain
from .weather import WeatherDay, WeatherYear


@dataclass(frozen=True)
class CropParams:
    """Surrogate crop and evapotranspiration coefficients.

    All values are surrogate-only calibration, chosen to reproduce a
    plausible subtropical wheat season (sowing around day 120, late
    grain fill around day 280, unstressed yields of 5-10 t/ha).
    """

    t_base: float = 0.0
    # thermal time (C d) -> development stage anchors, piecewise linear;
    # beyond the last anchor the final segment's slope is extrapolated.
    stage_tt_anchors: tuple[float, ...] = (0, 120, 450, 700, 1000, 1200, 1350, 1650)
    stage_anchors: tuple[float, ...] = (5, 10, 15, 30, 39, 65, 71, 85)
    lai_init: float = 0.02
    lai_max: float = 6.5
    lai_growth_rate: float = 0.12          # /day, logistic, stress-scaled
    senescence_rate: float = 0.03          # /day at 20 stage-units past onset
    senescence_start_stage: float = 65.0
    senescence_span: float = 20.0
    lai_full_cover: float = 3.0            # LAI at which transpiration demand saturates
    rue: float = 11.0                      # kg/ha biomass per MJ/m2 intercepted
    canopy_extinction: float = 0.45
    harvest_index_max: float = 0.42
    grain_fill_start_stage: float = 71.0
    root_depth_init_mm: float = 100.0
    root_growth_mm_per_day: float = 12.0
    root_depth_max_mm: float = 1200.0
    kl_surface: float = 0.08               # daily extractable fraction at 0 depth
    kl_depth_scale_mm: float = 600.0
    evap_coefficient: float = 0.4          # soil evaporation fraction of ET0, bare soil
    evap_canopy_extinction: float = 0.5
    et0_coefficient: float = 0.0135        # radiation-form reference ET
    et0_temp_offset: float = 17.78
    et0_radn_to_mm: float = 0.408


@dataclass(frozen=True)
class CropState:
    """Crop status carried between days; stage and biomass never decrease."""

    thermal_time: float = 0.0
    stage: float = 5.0
    lai: float = 0.0
    biomass: float = 0.0
    root_depth_mm: float = 0.0
    stress_history: float = 1.0


@dataclass(frozen=True)
class EnvConfig:
    """Everything that defines one production environment."""

    soil_layers: tuple[SoilLayer, ...] = DEFAULT_SOIL_LAYERS
    initial_pawc_fraction: float = 0.20
    sowing_window_start: tuple[int, int] = (4, 25)   # (month, day)
    sowing_window_end: tuple[int, int] = (6, 1)
    sowing_rain_trigger_mm: float = 15.0
    sowing_rain_window_days: int = 3
    forced_sowing_irrigation_mm: float = 20.0
    stage_end: float = 85.0
    max_days: int = 220
    crop: CropParams = CropParams()
    econ: EconomicConfig = EconomicConfig()
    actions: ActionSet = ActionSet()

    def __post_init__(self):
        if not 0.0 <= self.initial_pawc_fraction <= 1.0:
            raise DomainError(
                f"initial_pawc_fraction must be in [0, 1], got {self.initial_pawc_fraction}"
            )
        if self.stage_end <= 5.0:
            raise DomainError(f"stage_end must exceed 5, got {self.stage_end}")
        if self.max_days < 1:
            raise DomainError("max_days must be >= 1")


@dataclass(frozen=True)
class DayFlux:
    """Water movements (mm) of one simulated day, for balance auditing."""

    rain: float
    irrigation: float
    et0: float
    evaporation: float
    transpiration: float
    drainage: float
    stress: float
    balance_residual: float


def reference_et0(tmean: float, radn: float, params: CropParams) -> float:
    """Radiation-form reference evapotranspiration, mm/day, clamped >= 0."""
    et0 = params.et0_coefficient * (tmean + params.et0_temp_offset) * radn * params.et0_radn_to_mm
    return max(et0, 0.0)


def _stage_from_tt(tt: float, params: CropParams) -> float:
    anchors_tt = params.stage_tt_anchors
    anchors_stage = params.stage_anchors
    if tt <= anchors_tt[0]:
        return float(anchors_stage[0])
    if tt >= anchors_tt[-1]:
        slope = (anchors_stage[-1] - anchors_stage[-2]) / (
            anchors_tt[-1] - anchors_tt[-2]
        )
        return anchors_stage[-1] + slope * (tt - anchors_tt[-1])
    for i in range(1, len(anchors_tt)):
        if tt <= anchors_tt[i]:
            frac = (tt - anchors_tt[i - 1]) / (anchors_tt[i] - anchors_tt[i - 1])
            return anchors_stage[i - 1] + frac * (
                anchors_stage[i] - anchors_stage[i - 1]
            )
    return float(anchors_stage[-1])


def advance_phenology(crop: CropState, tmean: float, params: CropParams = CropParams()) -> CropState:
    """Accumulate thermal time and map it to a development stage."""
    if not math.isfinite(tmean):
        raise DomainError(f"tmean must be finite, got {tmean}")
    tt = crop.thermal_time + max(0.0, tmean - params.t_base)
    stage = max(crop.stage, _stage_from_tt(tt, params))
    return replace(crop, thermal_time=tt, stage=stage)


def layer_kl(profile: SoilProfile, params: CropParams) -> np.ndarray:
    """Daily extractable fraction per layer, decaying with mid-layer depth."""
    mid_mm = 0.5 * (profile.depth_top_mm + profile.depth_bottom_mm)
    return params.kl_surface * np.exp(-mid_mm / params.kl_depth_scale_mm)


def root_supply_weights(profile: SoilProfile, root_depth_mm: float, params: CropParams) -> np.ndarray:
    """Per-layer kl times rooted fraction; zero below the root front."""
    rooted = np.clip(
        (root_depth_mm - profile.depth_top_mm) / profile.thickness_mm, 0.0, 1.0
    )
    return layer_kl(profile, params) * rooted


def _stress_and_extract(
    profile: SoilProfile,
    kl: np.ndarray,
    lai: float,
    root_depth_mm: float,
    et0: float,
    params: CropParams,
) -> tuple[float, float]:
    """Returns (stress factor, transpiration mm actually removed)."""
    demand = et0 * min(1.0, lai / params.lai_full_cover)
    if demand <= 0.0:
        return 1.0, 0.0
    rooted = np.clip(
        (root_depth_mm - profile.depth_top_mm) / profile.thickness_mm, 0.0, 1.0
    )
    esw = np.maximum(profile.water - profile.cll, 0.0) * profile.thickness_mm
    supply_per_layer = kl * rooted * esw
    supply = float(supply_per_layer.sum())
    if supply <= 0.0:
        return 0.0, 0.0
    factor = min(1.0, supply / demand)
    transpiration = min(demand, supply)
    before = float(np.dot(profile.water, profile.thickness_mm))
    profile.water -= (transpiration / supply) * (supply_per_layer / profile.thickness_mm)
    np.maximum(profile.water, profile.cll, out=profile.water)
    removed = before - float(np.dot(profile.water, profile.thickness_mm))
    return factor, removed


def daily_water_stress(
    profile: SoilProfile,
    crop: CropState,
    et0: float,
    params: CropParams = CropParams(),
) -> float:
    """Supply/demand stress factor in [0, 1]; extracts the day's transpiration.

    Demand is ET0 scaled by canopy cover; supply is the kl-weighted
    extractable water over rooted layers. Extraction is proportional to
    each layer's share of supply and never drives water below cll.
    Zero demand means no stress (factor 1) and no extraction.
    """
    if et0 < 0:
        raise DomainError(f"et0 must be >= 0, got {et0}")
    factor, _ = _stress_and_extract(
        profile, layer_kl(profile, params), crop.lai, crop.root_depth_mm, et0, params
    )
    return factor


def compute_yield(crop: CropState, params: CropParams = CropParams()) -> float:
    """Grain yield (kg/ha) from final biomass and grain-fill water stress."""
    y = params.harvest_index_max * crop.biomass * (0.5 + 0.5 * crop.stress_history)
    return max(y, 0.0)


def _window_dates(config: EnvConfig, year: int) -> tuple[dt.date, dt.date]:
    start = dt.date(year, *config.sowing_window_start)
    end = dt.date(year, *config.sowing_window_end)
    if end < start:
        raise DomainError("sowing window end precedes its start")
    return start, end


def _find_sowing(config: EnvConfig, weather: WeatherYear) -> tuple[dt.date, bool]:
    """First window day whose trailing rain meets the trigger, else forced end."""
    start, end = _window_dates(config, weather.year_id)
    first_covered = weather.days[0].date
    if start < first_covered or end > weather.days[-1].date:
        raise DomainError(
            f"weather {weather.year_id} does not cover sowing window {start}..{end}"
        )
    d = start
    while d <= end:
        trailing = 0.0
        for back in range(config.sowing_rain_window_days):
            day = d - dt.timedelta(days=back)
            if day >= first_covered:
                trailing += weather.day(day).rain
        if trailing >= config.sowing_rain_trigger_mm:
            return d, False
        d += dt.timedelta(days=1)
    return end, True


class Session:
    """Single-owner mutable state of one running episode.

    Construct through reset(); create an independent session per episode
    (cheap) rather than sharing one across threads.
    """

    def __init__(self, config: EnvConfig, weather: WeatherYear, sowing_date: dt.date, forced: bool):
        self.config = config
        self.weather = weather
        self.sowing_date = sowing_date
        self.sowing_forced = forced
        self.profile = SoilProfile(config.soil_layers)
        self.profile.set_water_fraction(config.initial_pawc_fraction)
        if forced and config.forced_sowing_irrigation_mm > 0:
            # Pre-episode establishment water: enters the soil but not CuIrrig,
            # which only counts irrigation since sowing.
            infiltrate_and_drain(self.profile, config.forced_sowing_irrigation_mm)
        p = config.crop
        self._kl = layer_kl(self.profile, p)
        self._tt = 0.0
        self._stage = float(p.stage_anchors[0])
        self._lai = p.lai_init
        self._biomass = 0.0
        self._root_mm = p.root_depth_init_mm
        self._gf_days = 0
        self._gf_stress_sum = 0.0
        self._cu_irrig = 0.0
        self._cu_rain = 0.0
        self._steps = 0
        self._day_index = weather.index_of(sowing_date)
        self.done = False
        self.termination_reason: Optional[str] = None
        self.yield_kg_ha: Optional[float] = None
        self.max_balance_error = 0.0
        self.last_flux: Optional[DayFlux] = None

    @property
    def steps_taken(self) -> int:
        return self._steps

    @property
    def cu_irrig(self) -> float:
        return self._cu_irrig

    @property
    def cu_rain(self) -> float:
        return self._cu_rain

    @property
    def current_day(self) -> WeatherDay:
        return self.weather.days[self._day_index]

    def crop_state(self) -> CropState:
        stress_hist = (
            self._gf_stress_sum / self._gf_days if self._gf_days > 0 else 1.0
        )
        return CropState(
            thermal_time=self._tt,
            stage=self._stage,
            lai=self._lai,
            biomass=self._biomass,
            root_depth_mm=self._root_mm,
            stress_history=stress_hist,
        )

    def state_vector(self) -> StateVector:
        esw = self.profile.monitored_esw_mm()
        return StateVector(
            stage=self._stage,
            lai=self._lai,
            esw=tuple(float(v) for v in esw),
            cu_irrig=self._cu_irrig,
            cu_rain=self._cu_rain,
        )

    def step(self, action_index: int) -> tuple[StateVector, float, bool]:
        """Apply one day's irrigation decision and advance the simulator."""
        if self.done:
            raise UsageError("step() called on a finished episode")
        if not isinstance(action_index, (int, np.integer)):
            raise DomainError(f"action index must be an integer, got {action_index!r}")
        if not 0 <= action_index < len(self.config.actions):
            raise DomainError(
                f"action index {action_index} out of range 0..{len(self.config.actions) - 1}"
            )
        amount = self.config.actions[int(action_index)]
        p = self.config.crop
        wd = self.current_day

        storage_before = self.profile.total_water_mm()

        drainage = infiltrate_and_drain(self.profile, wd.rain + amount)
        et0 = reference_et0(wd.tmean, wd.radn, p)

        # Soil evaporation: surface layer only, shaded by the canopy.
        esw1 = max(
            (self.profile.water[0] - self.profile.cll[0]) * self.profile.thickness_mm[0],
            0.0,
        )
        evaporation = min(
            esw1, p.evap_coefficient * et0 * math.exp(-p.evap_canopy_extinction * self._lai)
        )
        self.profile.water[0] -= evaporation / self.profile.thickness_mm[0]

        stress, transpiration = _stress_and_extract(
            self.profile, self._kl, self._lai, self._root_mm, et0, p
        )

        self._tt += max(0.0, wd.tmean - p.t_base)
        self._stage = max(self._stage, _stage_from_tt(self._tt, p))

        if self._stage < p.senescence_start_stage:
            growth = p.lai_growth_rate * self._lai * (1.0 - self._lai / p.lai_max) * stress
            self._lai = min(p.lai_max, self._lai + max(growth, 0.0))
        else:
            rate = p.senescence_rate * (self._stage - p.senescence_start_stage) / p.senescence_span
            self._lai = max(0.0, self._lai * (1.0 - min(rate, 1.0)))

        light_fraction = 1.0 - math.exp(-p.canopy_extinction * self._lai)
        self._biomass += p.rue * wd.radn * light_fraction * stress

        self._root_mm = min(p.root_depth_max_mm, self._root_mm + p.root_growth_mm_per_day)

        if self._stage >= p.grain_fill_start_stage:
            self._gf_days += 1
            self._gf_stress_sum += stress

        self._cu_irrig += amount
        self._cu_rain += wd.rain
        self._steps += 1
        self._day_index += 1

        storage_after = self.profile.total_water_mm()
        residual = (storage_after - storage_before) - (
            wd.rain + amount - evaporation - transpiration - drainage
        )
        self.max_balance_error = max(self.max_balance_error, abs(residual))
        self.last_flux = DayFlux(
            rain=wd.rain,
            irrigation=amount,
            et0=et0,
            evaporation=evaporation,
            transpiration=transpiration,
            drainage=drainage,
            stress=stress,
            balance_residual=residual,
        )

        # Termination: stage wins ties with the day cap; running out of
        # weather coverage ends the season early as a bounded-data case.
        if self._stage >= self.config.stage_end:
            self._finish("stage")
        elif self._steps >= self.config.max_days:
            self._finish("max_days")
        elif self._day_index >= len(self.weather.days):
            self._finish("weather_end")

        state = self.state_vector()
        if self.done:
            reward = step_reward(amount, True, self.yield_kg_ha, self.config.econ)
        else:
            reward = step_reward(amount, False, None, self.config.econ)
        return state, reward, self.done

    def _finish(self, reason: str) -> None:
        self.done = True
        self.termination_reason = reason
        self.yield_kg_ha = compute_yield(self.crop_state(), self.config.crop)


def reset(
    config: EnvConfig,
    weather: WeatherYear,
    rng: Optional[np.random.Generator] = None,
) -> tuple[Session, StateVector, int]:
    """Start an episode: initialize soil, pick the sowing day, return S0.

    The rng argument is part of the environment contract for simulator
    backends with stochastic initial conditions; the built-in surrogate
    is deterministic and does not draw from it.
    """
    del rng
    sowing_date, forced = _find_sowing(config, weather)
    session = Session(config, weather, sowing_date, forced)
    return session, session.state_vector(), sowing_date.timetuple().tm_yday
