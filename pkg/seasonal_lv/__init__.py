"""Top-level package for seasonal_lv."""

__author__ = """Yossi Mosbacher"""
__email__ = "joe.mosbacher@gmail.com"
__version__ = "0.1.0"

from loguru import logger

from . import integrator, params, scalar, stability, sweep, utils

from .errors import (
    ConvergenceError,
    IntegrationError,
    InvalidParametersError,
    MalformedMapError,
    PeriodicOrbitNotFound,
    SeasonalModelError,
    UndefinedRatioError,
)
from .integrator import (
    IntegratorSettings,
    Monodromy,
    State,
    Trajectory,
    find_periodic_orbit,
    monodromy_at,
    period_map_2d,
    simulate,
    step_phase,
)
from .params import (
    ModelParameters,
    Phase,
    RawParameters,
    Schedule,
    ValidationReport,
    load_parameters,
    rescale,
    unrescale,
    validate,
)
from .scalar import (
    Decay,
    Logistic,
    LogisticHarvest,
    MobiusGrowthMap,
    ScalarRegime,
    fixed_point,
    iterate_sequence,
    map_limit_ratio,
    period_map,
    phase_map,
    scalar_classify,
)
from .stability import (
    Multipliers,
    Region,
    RegimeClassification,
    Thresholds,
    classify,
    condition_ratios,
    multipliers,
    thresholds,
)
from .sweep import GridSpec, RegionGrid, boundary_lines, sweep_regions
from .types import Interval, Species
from .utils import jsonable

logger.disable("seasonal_lv")
