# type: ignore
"""Exact single-species dynamics.

Every phase flow of the scalar subsystems is a normalized Mobius map
x -> p*x/(q*x + 1), so the period map and all its partial maps are
closed form and compose exactly.
"""
import math
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
import toolz
from loguru import logger
from plum import Dispatcher
from pydantic import BaseModel, Extra, Field

from .errors import MalformedMapError
from .params import ModelParameters, Phase, Schedule
from .types import Species

dispatch = Dispatcher()

# exponents closer than this (times max(1, T)) to zero are boundary cases
BOUNDARY_TOLERANCE = 1e-12

# relative distance between r and c below which harvest balances growth
HARVEST_BALANCE_TOLERANCE = 1e-12


class MobiusGrowthMap(BaseModel):
    """The map x -> p*x/(q*x + 1) on [0, inf)"""

    class Config:
        frozen = True
        extra = Extra.forbid

    p: float = Field(gt=0)
    q: float = Field(ge=0)

    @classmethod
    def identity(cls):
        return cls(p=1.0, q=0.0)

    def __call__(self, x):
        return self.p * x / (self.q * x + 1)

    def derivative(self, x):
        return self.p / (self.q * x + 1) ** 2

    def then(self, other: "MobiusGrowthMap") -> "MobiusGrowthMap":
        """Apply self first, then other"""
        return MobiusGrowthMap(p=other.p * self.p, q=other.q * self.p + self.q)

    @classmethod
    def compose(cls, *maps: "MobiusGrowthMap") -> "MobiusGrowthMap":
        """Composition of maps in order of application"""
        return toolz.reduce(cls.then, maps, cls.identity())


class ScalarPhase(BaseModel):
    class Config:
        frozen = True
        extra = Extra.forbid

    duration: float = Field(ge=0)


class Decay(ScalarPhase):
    d: float = Field(gt=0)


class Logistic(ScalarPhase):
    r: float = Field(gt=0)


class LogisticHarvest(ScalarPhase):
    r: float = Field(gt=0)
    c: float = Field(gt=0)


@dispatch
def phase_map(phase: Decay):
    return MobiusGrowthMap(p=math.exp(-phase.d * phase.duration), q=0.0)


@dispatch
def phase_map(phase: Logistic):
    rate = phase.r * phase.duration
    return MobiusGrowthMap(p=math.exp(rate), q=math.expm1(rate))


@dispatch
def phase_map(phase: LogisticHarvest):
    net = phase.r - phase.c
    if abs(net) < HARVEST_BALANCE_TOLERANCE * max(phase.r, phase.c):
        return MobiusGrowthMap(p=1.0, q=phase.r * phase.duration)
    return MobiusGrowthMap(
        p=math.exp(net * phase.duration),
        q=phase.r * math.expm1(net * phase.duration) / net,
    )


@dispatch
def phase_exponent(phase: Decay):
    return -phase.d * phase.duration


@dispatch
def phase_exponent(phase: Logistic):
    return phase.r * phase.duration


@dispatch
def phase_exponent(phase: LogisticHarvest):
    return (phase.r - phase.c) * phase.duration


def species_rates(p: ModelParameters, species: Union[Species, str]):
    """(decay, growth, harvest) rates of one species"""
    species = Species(species)
    if species == Species.U:
        return p.d1, 1.0, p.c1
    return p.d2, p.r, p.c2


def species_phases(
    p: ModelParameters, s: Schedule, species: Union[Species, str]
) -> List[ScalarPhase]:
    d, r, c = species_rates(p, species)
    durations = s.durations()
    return [
        Decay(d=d, duration=durations[Phase.DRY]),
        Logistic(r=r, duration=durations[Phase.GROWTH]),
        LogisticHarvest(r=r, c=c, duration=durations[Phase.GRAZING]),
    ]


def period_map(
    p: ModelParameters, s: Schedule, species: Union[Species, str]
) -> MobiusGrowthMap:
    """Map from the density at t=0 to the density at t=T"""
    maps = [phase_map(phase) for phase in species_phases(p, s, species)]
    return MobiusGrowthMap.compose(*maps)


def partial_maps(
    p: ModelParameters, s: Schedule, species: Union[Species, str]
) -> Tuple[MobiusGrowthMap, MobiusGrowthMap, MobiusGrowthMap]:
    """Maps from t=0 to t=tau1, t=tau2 and t=T"""
    maps = [phase_map(phase) for phase in species_phases(p, s, species)]
    return tuple(toolz.accumulate(MobiusGrowthMap.then, maps))


def log_gain(p: ModelParameters, s: Schedule, species: Union[Species, str]) -> float:
    """Logarithm of the period-map derivative at zero, summed exactly
    from the phase exponents.
    """
    return math.fsum(phase_exponent(phase) for phase in species_phases(p, s, species))


def map_limit_ratio(m: MobiusGrowthMap) -> float:
    """lim H(x)/x as x -> 0"""
    return m.p


def fixed_point(m: MobiusGrowthMap) -> Optional[float]:
    if m.p <= 1:
        return None
    if m.q == 0:
        raise MalformedMapError(
            f"Map with gain {m.p} > 1 and no saturation has no positive fixed point"
        )
    return (m.p - 1) / m.q


def iterate_sequence(m: MobiusGrowthMap, x: float, n: int) -> np.ndarray:
    """The iterates x, H(x), ..., H^n(x)"""
    if not x > 0:
        raise ValueError(f"Initial density must be positive, got {x}")
    if n < 1:
        raise ValueError(f"Number of iterations must be at least 1, got {n}")
    return np.array(list(toolz.take(n + 1, toolz.iterate(m, float(x)))))


class ScalarLabel(str, Enum):
    EXTINCT = "Extinct"
    PERSISTENT_PERIODIC = "PersistentPeriodic"


class ScalarRegime(BaseModel):
    class Config:
        frozen = True

    species: Species
    label: ScalarLabel
    fixed_point: Optional[float] = None
    multiplier_at_zero: float
    log_gain: float
    degenerate: bool = False

    @property
    def persistent(self) -> bool:
        return self.label == ScalarLabel.PERSISTENT_PERIODIC


def scalar_classify(
    p: ModelParameters, s: Schedule, species: Union[Species, str]
) -> ScalarRegime:
    species = Species(species)
    gain = log_gain(p, s, species)
    degenerate = abs(gain) <= BOUNDARY_TOLERANCE * max(1.0, s.T)

    if degenerate or gain < 0:
        if degenerate:
            logger.debug(f"Species {species.value} at its persistence threshold")
        return ScalarRegime(
            species=species,
            label=ScalarLabel.EXTINCT,
            multiplier_at_zero=math.exp(gain),
            log_gain=gain,
            degenerate=degenerate,
        )

    m = period_map(p, s, species)
    return ScalarRegime(
        species=species,
        label=ScalarLabel.PERSISTENT_PERIODIC,
        fixed_point=fixed_point(m),
        multiplier_at_zero=math.exp(gain),
        log_gain=gain,
    )


def periodic_profile(
    p: ModelParameters, s: Schedule, species: Union[Species, str], times
) -> Optional[np.ndarray]:
    """Values of the positive periodic solution at the given times,
    None if the species goes extinct.
    """
    regime = scalar_classify(p, s, species)
    if not regime.persistent:
        return None

    phases = species_phases(p, s, species)
    entry = MobiusGrowthMap.identity()
    pieces = []
    for (phase, start, duration), scalar in zip(s.phases(), phases):
        pieces.append((start, start + duration, entry, scalar))
        entry = entry.then(phase_map(scalar))

    def value_at(t):
        t = t % s.T
        for start, stop, before, scalar in pieces:
            if t <= stop:
                elapsed = phase_map(scalar.copy(update={"duration": t - start}))
                return before.then(elapsed)(regime.fixed_point)
        return regime.fixed_point

    times = np.atleast_1d(np.asarray(times, dtype=float))
    return np.array([value_at(t) for t in times])
