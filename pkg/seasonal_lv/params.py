"""Parameter sets of the seasonal competition model.

RawParameters hold the dimensional rates, capacities and phase times.
ModelParameters and Schedule hold the rescaled quantities obtained with
u -> u/K1, v -> v/K2 and t -> r1 t.
"""
import math
from enum import IntEnum
from typing import Any, Dict, List, Mapping, Tuple, Union

from loguru import logger
from pydantic import BaseModel, Extra, Field, ValidationError, root_validator

from .errors import InvalidParametersError
from .utils import read_json


class Phase(IntEnum):
    DRY = 1
    GROWTH = 2
    GRAZING = 3


class FrozenModel(BaseModel):
    class Config:
        frozen = True
        extra = Extra.forbid
        validate_assignment = True

    @root_validator(pre=True)
    def check_finite(cls, values):
        for name, value in values.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        return values


class RawParameters(FrozenModel):
    r1: float = Field(gt=0, description="intrinsic growth rate of u (1/time)")
    r2: float = Field(gt=0, description="intrinsic growth rate of v (1/time)")
    K1: float = Field(gt=0, description="carrying capacity of u")
    K2: float = Field(gt=0, description="carrying capacity of v")
    b1_raw: float = Field(ge=0, description="effect of v on u (1/density)")
    b2_raw: float = Field(ge=0, description="effect of u on v (1/density)")
    d1_raw: float = Field(gt=0, description="dry-season mortality of u (1/time)")
    d2_raw: float = Field(gt=0, description="dry-season mortality of v (1/time)")
    q1E1: float = Field(gt=0, description="grazing intensity on u (1/time)")
    q2E2: float = Field(gt=0, description="grazing intensity on v (1/time)")
    tau1_raw: float = Field(ge=0, description="end of the dry season (time)")
    tau2_raw: float = Field(ge=0, description="start of grazing (time)")
    T_raw: float = Field(gt=0, description="period (time)")

    @root_validator(skip_on_failure=True)
    def check_times(cls, values):
        if not values["tau1_raw"] <= values["tau2_raw"] <= values["T_raw"]:
            raise ValueError("0 <= tau1_raw <= tau2_raw <= T_raw required")
        return values


class ModelParameters(FrozenModel):
    d1: float = Field(gt=0, description="dry-season decay rate of u")
    d2: float = Field(gt=0, description="dry-season decay rate of v")
    r: float = Field(gt=0, description="growth-rate ratio r2/r1")
    b1: float = Field(ge=0, description="competition coefficient of v on u")
    b2: float = Field(ge=0, description="competition coefficient of u on v")
    c1: float = Field(gt=0, description="grazing intensity on u")
    c2: float = Field(gt=0, description="grazing intensity on v")

    @property
    def weak_competition(self) -> bool:
        return self.b1 * self.b2 < 1


class Schedule(FrozenModel):
    tau1: float = Field(ge=0, description="length of the dry season")
    tau2: float = Field(ge=0, description="start of the grazing phase")
    T: float = Field(gt=0, description="period")

    @root_validator(skip_on_failure=True)
    def check_order(cls, values):
        tau1, tau2, T = values["tau1"], values["tau2"], values["T"]
        if tau2 < tau1:
            raise ValueError("tau2 >= tau1 required")
        if T < tau2:
            raise ValueError("T >= tau2 required")
        return values

    def durations(self) -> Dict[Phase, float]:
        return {
            Phase.DRY: self.tau1,
            Phase.GROWTH: self.tau2 - self.tau1,
            Phase.GRAZING: self.T - self.tau2,
        }

    def phases(self) -> List[Tuple[Phase, float, float]]:
        """(phase, start, duration) for one period"""
        starts = (0.0, self.tau1, self.tau2)
        durations = self.durations()
        return [
            (phase, start, durations[phase]) for phase, start in zip(Phase, starts)
        ]

    def boundaries(self) -> Tuple[float, float, float]:
        return self.tau1, self.tau2, self.T


class ValidationReport(BaseModel):
    violations: List[str] = []
    warnings: List[str] = []

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid


def rescale(raw: RawParameters) -> Tuple[ModelParameters, Schedule]:
    """Nondimensionalize a raw parameter set"""
    if not isinstance(raw, RawParameters):
        raw = RawParameters(**raw)

    r1 = raw.r1
    params = ModelParameters(
        d1=raw.d1_raw / r1,
        d2=raw.d2_raw / r1,
        r=raw.r2 / r1,
        b1=raw.b1_raw * raw.K2,
        b2=raw.b2_raw * raw.K1,
        c1=raw.q1E1 / r1,
        c2=raw.q2E2 / r1,
    )
    schedule = Schedule(
        tau1=r1 * raw.tau1_raw,
        tau2=r1 * raw.tau2_raw,
        T=r1 * raw.T_raw,
    )
    return params, schedule


def unrescale(
    params: ModelParameters, schedule: Schedule, r1: float, K1: float, K2: float
) -> RawParameters:
    """Inverse of rescale for the given scale factors"""
    return RawParameters(
        r1=r1,
        r2=params.r * r1,
        K1=K1,
        K2=K2,
        b1_raw=params.b1 / K2,
        b2_raw=params.b2 / K1,
        d1_raw=params.d1 * r1,
        d2_raw=params.d2 * r1,
        q1E1=params.c1 * r1,
        q2E2=params.c2 * r1,
        tau1_raw=schedule.tau1 / r1,
        tau2_raw=schedule.tau2 / r1,
        T_raw=schedule.T / r1,
    )


def _as_values(obj: Union[BaseModel, Mapping, None]) -> Dict[str, Any]:
    if obj is None:
        return {}
    if isinstance(obj, BaseModel):
        return obj.dict()
    return dict(obj)


def _number(value):
    if isinstance(value, bool):
        return None
    try:
        value = float(value)
    except (TypeError, ValueError):
        return None
    return value if math.isfinite(value) else None


def validate(
    params: Union[ModelParameters, Mapping], schedule: Union[Schedule, Mapping]
) -> ValidationReport:
    """Collect every violated invariant of a parameter set and schedule.
    Accepts model instances or plain mappings, so sets that pydantic
    would reject can still be reported on. Never raises.
    """
    report = ValidationReport()
    pvalues = _as_values(params)
    svalues = _as_values(schedule)

    for name, field in ModelParameters.__fields__.items():
        if name not in pvalues:
            report.violations.append(f"{name} missing")
            continue
        value = _number(pvalues[name])
        if value is None:
            report.violations.append(f"{name} must be a finite number")
        elif name in ("b1", "b2"):
            if value < 0:
                report.violations.append(f"{name} >= 0 required")
        elif value <= 0:
            report.violations.append(f"{name} > 0 required")

    for name in sorted(set(pvalues) - set(ModelParameters.__fields__)):
        report.violations.append(f"unknown parameter {name}")

    times = {}
    for name in Schedule.__fields__:
        if name not in svalues:
            report.violations.append(f"{name} missing")
            continue
        value = _number(svalues[name])
        if value is None:
            report.violations.append(f"{name} must be a finite number")
        else:
            times[name] = value

    for name in sorted(set(svalues) - set(Schedule.__fields__)):
        report.violations.append(f"unknown schedule field {name}")

    tau1, tau2, T = times.get("tau1"), times.get("tau2"), times.get("T")
    if tau1 is not None and tau1 < 0:
        report.violations.append("tau1 >= 0 required")
    if T is not None and T <= 0:
        report.violations.append("T > 0 required")
    if tau1 is not None and tau2 is not None and tau2 < tau1:
        report.violations.append("tau2 >= tau1 required")
    if tau2 is not None and T is not None and T < tau2:
        report.violations.append("T >= tau2 required")

    if tau1 is not None and tau2 is not None and tau1 == tau2:
        report.warnings.append("growth phase empty")
    if tau2 is not None and T is not None and tau2 == T:
        report.warnings.append("grazing phase empty")

    if report.violations:
        logger.debug(f"Parameter set invalid: {report.violations}")
    return report


class ParameterFile(FrozenModel):
    parameters: ModelParameters = None
    raw_parameters: RawParameters = None
    schedule: Schedule = None

    @root_validator(skip_on_failure=True)
    def check_blocks(cls, values):
        has_raw = values.get("raw_parameters") is not None
        has_params = values.get("parameters") is not None
        if has_raw == has_params:
            raise ValueError(
                "exactly one of 'parameters' and 'raw_parameters' is required"
            )
        if has_params and values.get("schedule") is None:
            raise ValueError("'schedule' is required with 'parameters'")
        if has_raw and values.get("schedule") is not None:
            raise ValueError(
                "'schedule' must be omitted with 'raw_parameters', "
                "the phase times are part of the raw block"
            )
        return values

    def resolve(self) -> Tuple[ModelParameters, Schedule]:
        if self.raw_parameters is not None:
            return rescale(self.raw_parameters)
        return self.parameters, self.schedule


def load_parameters(url: str) -> Tuple[ModelParameters, Schedule]:
    """Read a JSON parameter file holding either a 'parameters' and
    'schedule' block or a single 'raw_parameters' block.
    Other top-level keys (run options) are ignored here.
    """
    data = read_json(url)
    if not isinstance(data, Mapping):
        raise InvalidParametersError(f"{url} must contain a JSON object")
    blocks = {k: v for k, v in data.items() if k in ParameterFile.__fields__}
    try:
        return ParameterFile(**blocks).resolve()
    except ValidationError:
        logger.error(f"Invalid parameter file {url}")
        raise
