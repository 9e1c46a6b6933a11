"""Layered soil description and tipping-bucket water redistribution.

Water content is volumetric (mm/mm); a layer's extractable water in mm
is (water - cll) * thickness_cm * 10. The default profile is a deep
clay with seven layers to 180 cm and a plant-available capacity of
198 mm. Only the top five layers (0-120 cm) are exposed to the policy;
all seven are simulated.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from typing import IO, Optional, Union

import numpy as np

from .core import DomainError, ParseError

SOIL_CSV_HEADER = "depth_top_cm,depth_bottom_cm,dul,cll,bd"
MONITORED_LAYERS = 5


@dataclass(frozen=True)
class SoilLayer:
    """One layer's bounds and water-holding characteristics.

    dul: drained upper limit, the content held after free drainage.
    cll: crop lower limit, below which roots cannot extract.
    bd: bulk density (g/cc), carried for completeness.
    """

    depth_top_cm: float
    depth_bottom_cm: float
    dul: float
    cll: float
    bd: float

    def __post_init__(self):
        if self.depth_bottom_cm <= self.depth_top_cm:
            raise DomainError(
                f"layer bottom {self.depth_bottom_cm} must exceed top {self.depth_top_cm}"
            )
        if not (self.dul > self.cll >= 0):
            raise DomainError(
                f"need dul > cll >= 0, got dul={self.dul}, cll={self.cll}"
            )

    @property
    def thickness_cm(self) -> float:
        return self.depth_bottom_cm - self.depth_top_cm

    @property
    def pawc_mm(self) -> float:
        return (self.dul - self.cll) * self.thickness_cm * 10.0


# APSoil #906 (Thallon) clay profile.
DEFAULT_SOIL_LAYERS: tuple[SoilLayer, ...] = (
    SoilLayer(0, 15, 0.405, 0.234, 1.299),
    SoilLayer(15, 30, 0.407, 0.258, 1.359),
    SoilLayer(30, 60, 0.410, 0.257, 1.351),
    SoilLayer(60, 90, 0.405, 0.259, 1.365),
    SoilLayer(90, 120, 0.391, 0.254, 1.403),
    SoilLayer(120, 150, 0.319, 0.271, 1.594),
    SoilLayer(150, 180, 0.287, 0.271, 1.677),
)

_WATER_TOL = 1e-9


class SoilProfile:
    """Layer stack plus current volumetric water per layer.

    The layer definitions are immutable; ``water`` is the mutable state
    the simulator advances. Construction validates contiguity and that
    every layer's water sits in [cll, dul].
    """

    def __init__(
        self,
        layers: tuple[SoilLayer, ...] = DEFAULT_SOIL_LAYERS,
        water: Optional[np.ndarray] = None,
    ):
        if not layers:
            raise DomainError("soil profile needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if not math.isclose(a.depth_bottom_cm, b.depth_top_cm):
                raise DomainError(
                    f"layers not contiguous: {a.depth_bottom_cm} then {b.depth_top_cm}"
                )
        self.layers = tuple(layers)
        self.dul = np.array([l.dul for l in layers], dtype=np.float64)
        self.cll = np.array([l.cll for l in layers], dtype=np.float64)
        self.thickness_mm = np.array(
            [l.thickness_cm * 10.0 for l in layers], dtype=np.float64
        )
        self.depth_top_mm = np.array(
            [l.depth_top_cm * 10.0 for l in layers], dtype=np.float64
        )
        self.depth_bottom_mm = np.array(
            [l.depth_bottom_cm * 10.0 for l in layers], dtype=np.float64
        )
        if water is None:
            water = self.cll.copy()
        water = np.asarray(water, dtype=np.float64).copy()
        if water.shape != (len(layers),):
            raise DomainError(
                f"water must have one value per layer, got shape {water.shape}"
            )
        if np.any(water < self.cll - _WATER_TOL) or np.any(water > self.dul + _WATER_TOL):
            raise DomainError("layer water outside [cll, dul]")
        self.water = water

    def copy(self) -> "SoilProfile":
        return SoilProfile(self.layers, self.water)

    def set_water_fraction(self, fraction: float) -> None:
        """Fill every layer to cll + fraction * (dul - cll)."""
        if not 0.0 <= fraction <= 1.0:
            raise DomainError(f"fraction must be in [0, 1], got {fraction}")
        self.water = self.cll + fraction * (self.dul - self.cll)

    def esw_mm(self) -> np.ndarray:
        """Extractable water above cll, per layer, in mm (clipped at 0)."""
        return np.maximum(self.water - self.cll, 0.0) * self.thickness_mm

    def pawc_mm(self) -> np.ndarray:
        return (self.dul - self.cll) * self.thickness_mm

    def total_water_mm(self) -> float:
        """Total stored water (absolute, not just extractable)."""
        return float(np.dot(self.water, self.thickness_mm))

    def monitored_esw_mm(self) -> np.ndarray:
        """ESW of the shallowest five layers, the ones the policy sees."""
        return self.esw_mm()[:MONITORED_LAYERS]


def infiltrate_and_drain(profile: SoilProfile, input_mm: float) -> float:
    """Cascade input water down the profile; return drainage past the bottom.

    Each layer fills to its drained upper limit; the excess passes to
    the next layer. Mass balance is exact: input = storage gain + drainage.
    """
    if input_mm < 0:
        raise DomainError(f"input must be >= 0 mm, got {input_mm}")
    remaining = float(input_mm)
    water = profile.water
    for i in range(water.shape[0]):
        if remaining <= 0.0:
            break
        capacity_mm = (profile.dul[i] - water[i]) * profile.thickness_mm[i]
        take = min(remaining, max(capacity_mm, 0.0))
        water[i] += take / profile.thickness_mm[i]
        remaining -= take
    return remaining


def parse_soil_csv(source: Union[str, os.PathLike, IO[str]]) -> tuple[SoilLayer, ...]:
    """Read layer definitions from CSV with header depth_top_cm,...,bd."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    lines = [ln for ln in text.splitlines()]
    if not lines:
        raise ParseError("empty soil table", line=1)
    header = [c.strip() for c in lines[0].split(",")]
    if header != SOIL_CSV_HEADER.split(","):
        raise ParseError(f"header must be '{SOIL_CSV_HEADER}', got {lines[0]!r}", line=1)
    layers = []
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields, got {len(parts)}", line=line_no)
        vals = []
        for name, text_val in zip(SOIL_CSV_HEADER.split(","), parts):
            try:
                vals.append(float(text_val))
            except ValueError:
                raise ParseError(
                    f"cannot parse {name} value {text_val!r}", line=line_no, field=name
                )
        try:
            layers.append(SoilLayer(*vals))
        except DomainError as exc:
            raise ParseError(str(exc), line=line_no) from exc
    if not layers:
        raise ParseError("soil table has a header but no rows", line=2)
    return tuple(layers)
