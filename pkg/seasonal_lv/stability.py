"""Thresholds, Floquet multipliers and regime classification.

All decisions are taken on the signs of four exponents, the logarithms
of the multipliers at the trivial state and at the two semi-trivial
periodic solutions:

    log lambda5 = gU                   (u invades E0)
    log lambda6 = gV                   (v invades E0)
    log lambda2 = gV - r b2 gU         (v invades (u*, 0))
    log lambda4 = gU - (b1 / r) gV     (u invades (0, v*))

with gU = c1 (tau2 - tau2_star) and gV = c2 (tau2 - tau2_star2).
"""
import math
from enum import Enum
from typing import List, NamedTuple, Optional

from loguru import logger
from pydantic import BaseModel

from .errors import UndefinedRatioError
from .params import ModelParameters, Schedule
from .scalar import BOUNDARY_TOLERANCE, ScalarRegime, log_gain, scalar_classify
from .types import Species


class Thresholds(BaseModel):
    class Config:
        frozen = True

    tau1_star: float
    tau1_star2: float
    tau2_star: float
    tau2_star2: float


class Exponents(BaseModel):
    class Config:
        frozen = True

    log_lambda5: float
    log_lambda6: float
    log_lambda2: float
    log_lambda4: float


class Multipliers(BaseModel):
    class Config:
        frozen = True

    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float
    lambda5: float
    lambda6: float


class Region(str, Enum):
    INVALID_SCHEDULE = "InvalidSchedule"
    I_COLLAPSE = "I_Collapse"
    II_U_WINS = "II_UWins"
    III_V_WINS = "III_VWins"
    IV_COEXIST = "IV_Coexist"
    V_U_LAS_UNRESOLVED = "V_ULAS_Unresolved"
    VI_V_LAS_UNRESOLVED = "VI_VLAS_Unresolved"
    VII_BISTABLE = "VII_Bistable"
    BOUNDARY = "Boundary"
    FAILED = "Failed"

    @property
    def code(self) -> int:
        return list(Region).index(self)

    @classmethod
    def from_code(cls, code: int) -> "Region":
        return list(cls)[code]


class ConditionRatios(NamedTuple):
    lower: float
    ratio: float
    upper: float

    @property
    def coexistence_window(self) -> bool:
        return self.lower < self.ratio < self.upper


class RegimeClassification(BaseModel):
    class Config:
        frozen = True

    region: Region
    thresholds: Thresholds
    multipliers: Multipliers
    exponents: Exponents
    u_regime: ScalarRegime
    v_regime: ScalarRegime
    ratios: Optional[ConditionRatios] = None
    notes: List[str] = []

    @property
    def code(self) -> int:
        return self.region.code


def thresholds(p: ModelParameters, s: Schedule) -> Thresholds:
    T, tau1 = s.T, s.tau1
    return Thresholds(
        tau1_star=T / (p.d1 + 1),
        tau1_star2=p.r * T / (p.d2 + p.r),
        tau2_star=((p.d1 + 1) * tau1 + (p.c1 - 1) * T) / p.c1,
        tau2_star2=((p.d2 + p.r) * tau1 + (p.c2 - p.r) * T) / p.c2,
    )


def exponents(p: ModelParameters, s: Schedule) -> Exponents:
    gU = log_gain(p, s, Species.U)
    gV = log_gain(p, s, Species.V)
    return Exponents(
        log_lambda5=gU,
        log_lambda6=gV,
        log_lambda2=gV - p.r * p.b2 * gU,
        log_lambda4=gU - (p.b1 / p.r) * gV,
    )


def multipliers(p: ModelParameters, s: Schedule) -> Multipliers:
    e = exponents(p, s)
    lambda5 = math.exp(e.log_lambda5)
    lambda6 = math.exp(e.log_lambda6)
    return Multipliers(
        lambda1=1 / lambda5,
        lambda2=math.exp(e.log_lambda2),
        lambda3=1 / lambda6,
        lambda4=math.exp(e.log_lambda4),
        lambda5=lambda5,
        lambda6=lambda6,
    )


def condition_ratios(p: ModelParameters, s: Schedule) -> ConditionRatios:
    """(r b2 c1 / c2, (tau2 - tau2_star2) / (tau2 - tau2_star), r c1 / (b1 c2))"""
    th = thresholds(p, s)
    if abs(log_gain(p, s, Species.U)) <= BOUNDARY_TOLERANCE * max(1.0, s.T):
        raise UndefinedRatioError(
            f"tau2={s.tau2} equals tau2_star={th.tau2_star}, the ratio is undefined"
        )
    upper = p.r * p.c1 / (p.b1 * p.c2) if p.b1 > 0 else math.inf
    return ConditionRatios(
        lower=p.r * p.b2 * p.c1 / p.c2,
        ratio=(s.tau2 - th.tau2_star2) / (s.tau2 - th.tau2_star),
        upper=upper,
    )


def _ratio_notes(s: Schedule, th: Thresholds) -> List[str]:
    notes = []
    if s.tau2 < th.tau2_star:
        notes.append(
            "tau2 < tau2_star: the ratio form of the invasion conditions is "
            "inverted, the exponent signs decide"
        )
    if s.tau2 < th.tau2_star2:
        notes.append(
            "tau2 < tau2_star2: the ratio window presupposes "
            "tau2 > max(tau2_star, tau2_star2)"
        )
    return notes


def _decide(p: ModelParameters, e: Exponents, tol: float):
    def near_zero(x):
        return abs(x) <= tol

    if near_zero(e.log_lambda5) or near_zero(e.log_lambda6):
        return Region.BOUNDARY, ["a species sits on its persistence threshold"]

    u_persists = e.log_lambda5 > 0
    v_persists = e.log_lambda6 > 0

    if not (u_persists or v_persists):
        return Region.I_COLLAPSE, ["both species go extinct, E0 is globally stable"]
    if u_persists and not v_persists:
        return Region.II_U_WINS, ["v cannot persist alone, (u*, 0) is globally stable"]
    if v_persists and not u_persists:
        return Region.III_V_WINS, ["u cannot persist alone, (0, v*) is globally stable"]

    if near_zero(e.log_lambda2) or near_zero(e.log_lambda4):
        return Region.BOUNDARY, ["a semi-trivial solution is neutrally stable"]

    u_boundary_stable = e.log_lambda2 < 0
    v_boundary_stable = e.log_lambda4 < 0

    if not (u_boundary_stable or v_boundary_stable):
        if p.b1 * p.b2 < 1:
            return Region.IV_COEXIST, [
                "both semi-trivial solutions unstable, the positive periodic "
                "solution is globally stable"
            ]
        return Region.BOUNDARY, [
            "both semi-trivial solutions unstable but b1 b2 >= 1, no coexistence claim"
        ]
    if u_boundary_stable and v_boundary_stable:
        return Region.VII_BISTABLE, [
            "both semi-trivial solutions locally stable, the outcome depends "
            "on the initial state"
        ]
    if u_boundary_stable:
        return Region.V_U_LAS_UNRESOLVED, [
            "(u*, 0) locally stable and (0, v*) unstable, global dynamics unresolved"
        ]
    return Region.VI_V_LAS_UNRESOLVED, [
        "(0, v*) locally stable and (u*, 0) unstable, global dynamics unresolved"
    ]


def classify(p: ModelParameters, s: Schedule) -> RegimeClassification:
    th = thresholds(p, s)
    e = exponents(p, s)
    tol = BOUNDARY_TOLERANCE * max(1.0, s.T)

    region, notes = _decide(p, e, tol)
    try:
        ratios = condition_ratios(p, s)
    except UndefinedRatioError:
        ratios = None
    else:
        notes = notes + _ratio_notes(s, th)

    logger.debug(f"Classified tau1={s.tau1}, tau2={s.tau2} as {region.value}")
    return RegimeClassification(
        region=region,
        thresholds=th,
        multipliers=multipliers(p, s),
        exponents=e,
        u_regime=scalar_classify(p, s, Species.U),
        v_regime=scalar_classify(p, s, Species.V),
        ratios=ratios,
        notes=notes,
    )
