"""Numerical integration of the two-species seasonal system.

Each period runs through three smooth vector fields:

    dry      u' = -d1 u                          v' = -d2 v
    growth   u' = u (1 - u - b1 v)               v' = r v (1 - v - b2 u)
    grazing  u' = u (1 - u - b1 v) - c1 u        v' = r v (1 - v - b2 u) - c2 v

Switching times are known, so every phase is integrated with a fixed
step that divides its duration exactly and phase boundaries are always
sample points.
"""
import math
from enum import Enum
from functools import partial
from typing import Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, Extra, Field
from scipy.integrate import simpson

from .errors import IntegrationError, PeriodicOrbitNotFound
from .params import ModelParameters, Phase, Schedule
from .scalar import scalar_classify
from .types import Species
from .utils import write_frame


class IntegratorSettings(BaseModel):
    class Config:
        frozen = True
        extra = Extra.forbid

    steps_per_period: int = Field(
        4096, gt=0, description="reference step is T / steps_per_period"
    )
    min_phase_steps: int = Field(
        64, ge=1, description="lower bound on the steps of a nonempty phase"
    )
    sample_stride: int = Field(1, ge=1, description="keep every n-th step")
    orbit_tolerance: float = Field(
        1e-10, gt=0, description="sup-norm distance of successive returns"
    )
    max_iterations: int = Field(100000, ge=1)
    zero_tolerance: float = Field(
        1e-6, gt=0, description="densities below this count as extinct"
    )


DEFAULT_SETTINGS = IntegratorSettings()


class State(BaseModel):
    class Config:
        frozen = True
        extra = Extra.forbid

    u: float = Field(ge=0)
    v: float = Field(ge=0)

    @classmethod
    def from_array(cls, y) -> "State":
        return cls(u=float(y[0]), v=float(y[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=float)

    def distance(self, other: "State") -> float:
        return max(abs(self.u - other.u), abs(self.v - other.v))


def _dry(y, p: ModelParameters):
    return np.array([-p.d1 * y[0], -p.d2 * y[1]])


def _growth(y, p: ModelParameters):
    u, v = y[0], y[1]
    return np.array([u * (1 - u - p.b1 * v), p.r * v * (1 - v - p.b2 * u)])


def _grazing(y, p: ModelParameters):
    u, v = y[0], y[1]
    return np.array(
        [
            u * (1 - u - p.b1 * v) - p.c1 * u,
            p.r * v * (1 - v - p.b2 * u) - p.c2 * v,
        ]
    )


def _dry_jacobian(y, p: ModelParameters):
    return np.array([[-p.d1, 0.0], [0.0, -p.d2]])


def _growth_jacobian(y, p: ModelParameters):
    u, v = y[0], y[1]
    return np.array(
        [
            [1 - 2 * u - p.b1 * v, -p.b1 * u],
            [-p.r * p.b2 * v, p.r * (1 - 2 * v - p.b2 * u)],
        ]
    )


def _grazing_jacobian(y, p: ModelParameters):
    return _growth_jacobian(y, p) - np.diag([p.c1, p.c2])


VECTOR_FIELDS = {
    Phase.DRY: _dry,
    Phase.GROWTH: _growth,
    Phase.GRAZING: _grazing,
}

JACOBIANS = {
    Phase.DRY: _dry_jacobian,
    Phase.GROWTH: _growth_jacobian,
    Phase.GRAZING: _grazing_jacobian,
}


def vector_field(phase: Phase, p: ModelParameters, y):
    """Right hand side of the given phase, y of shape (2,) or (2, m)"""
    return VECTOR_FIELDS[Phase(phase)](y, p)


def jacobian(phase: Phase, p: ModelParameters, y) -> np.ndarray:
    return JACOBIANS[Phase(phase)](y, p)


def _variational(y, p: ModelParameters, phase: Phase):
    state = y[:2]
    V = y[2:].reshape(2, 2)
    dV = JACOBIANS[phase](state, p) @ V
    return np.concatenate([VECTOR_FIELDS[phase](state, p), dV.ravel()])


def _rk4(field, y, h: float, n: int, out=None):
    """n classical fourth order steps of size h.
    If out is given, state i is stored in out[i].
    """
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            k1 = field(y)
            k2 = field(y + 0.5 * h * k1)
            k3 = field(y + 0.5 * h * k2)
            k4 = field(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if out is not None:
                out[i + 1] = y
    return y


def _check(y, previous, phase: Phase, time: float):
    state = y[:2]
    if not np.all(np.isfinite(y)):
        raise IntegrationError(
            f"Non-finite state in phase {Phase(phase).name.lower()} before t={time}",
            phase=phase,
            time=time,
            last_state=previous,
        )
    if np.any(state < 0):
        raise IntegrationError(
            f"Negative density in phase {Phase(phase).name.lower()} before t={time}",
            phase=phase,
            time=time,
            last_state=previous,
        )


def phase_steps(
    duration: float, T: float, settings: IntegratorSettings = DEFAULT_SETTINGS
) -> int:
    if duration <= 0:
        return 0
    h0 = T / settings.steps_per_period
    return max(settings.min_phase_steps, math.ceil(duration / h0))


def _advance(y, p: ModelParameters, phase: Phase, duration: float, n: int, t0=0.0):
    if n == 0:
        return y
    field = partial(VECTOR_FIELDS[phase], p=p)
    result = _rk4(field, y, duration / n, n)
    _check(result, y, phase, t0 + duration)
    return result


def step_phase(
    state: State, p: ModelParameters, phase_index: Phase, duration: float, step: float
) -> State:
    """Integrate one phase for the given duration.
    The step is shrunk so that it divides the duration exactly.
    """
    if duration < 0:
        raise ValueError(f"Phase duration must be nonnegative, got {duration}")
    if not step > 0:
        raise ValueError(f"Step must be positive, got {step}")
    phase = Phase(phase_index)
    n = math.ceil(duration / step) if duration > 0 else 0
    y = _advance(state.as_array(), p, phase, duration, n)
    return State.from_array(y)


def _period(y, p: ModelParameters, s: Schedule, settings: IntegratorSettings, t0=0.0):
    for phase, start, duration in s.phases():
        n = phase_steps(duration, s.T, settings)
        y = _advance(y, p, phase, duration, n, t0 + start)
    return y


def _collapsing(p: ModelParameters, s: Schedule, y) -> np.ndarray:
    """True where every species present in y dies out on its own.
    Competition only lowers growth, so exactly those orbits tend to (0, 0).
    """
    persistent = np.array(
        [scalar_classify(p, s, species).persistent for species in (Species.U, Species.V)]
    )
    persistent = persistent.reshape((2,) + (1,) * (np.ndim(y) - 1))
    return ~np.any((np.asarray(y) > 0) & persistent, axis=0)


def _settled(y, previous, settings: IntegratorSettings):
    # relative to the state size below 1, so orbits near (0, 0) keep going
    scale = np.minimum(1.0, np.max(y, axis=0))
    return np.max(np.abs(y - previous), axis=0) < settings.orbit_tolerance * scale


def period_map_2d(
    state: State,
    p: ModelParameters,
    s: Schedule,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
) -> State:
    """The state at t=T of the orbit starting from state at t=0"""
    return State.from_array(_period(state.as_array(), p, s, settings))


class Trajectory(BaseModel):
    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    schedule: Schedule
    periods: int
    period_index: List[int]

    def __len__(self):
        return len(self.t)

    @property
    def initial_state(self) -> State:
        return State(u=self.u[0], v=self.v[0])

    @property
    def final_state(self) -> State:
        return State(u=self.u[-1], v=self.v[-1])

    def period_ends(self) -> np.ndarray:
        """States at t = nT for n = 0..periods, shape (periods + 1, 2)"""
        idx = np.asarray(self.period_index)
        return np.stack([self.u[idx], self.v[idx]], axis=1)

    def last_period(self) -> "Trajectory":
        if self.periods < 1:
            raise ValueError("Trajectory has no complete period")
        start = self.period_index[-2]
        return Trajectory(
            t=self.t[start:] - self.t[start],
            u=self.u[start:],
            v=self.v[start:],
            schedule=self.schedule,
            periods=1,
            period_index=[0, len(self.t) - 1 - start],
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, "u": self.u, "v": self.v})

    def to_csv(self, url: str, **kwargs):
        write_frame(url, self.to_frame(), **kwargs)


def simulate(
    state: State,
    p: ModelParameters,
    s: Schedule,
    periods: int,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
) -> Trajectory:
    """Densely sampled solution over whole periods"""
    if periods < 0:
        raise ValueError(f"Number of periods must be nonnegative, got {periods}")

    stride = settings.sample_stride
    times = [np.array([0.0])]
    states = [state.as_array()[None, :]]
    period_index = [0]
    count = 1
    y = state.as_array()
    edges = (0.0,) + s.boundaries()

    for n in range(periods):
        offset = n * s.T
        for (phase, start, duration), stop in zip(s.phases(), edges[1:]):
            steps = phase_steps(duration, s.T, settings)
            if steps == 0:
                continue
            out = np.empty((steps + 1, 2))
            out[0] = y
            field = partial(VECTOR_FIELDS[phase], p=p)
            result = _rk4(field, y, duration / steps, steps, out=out)
            _check(result, y, phase, offset + stop)
            y = result

            # keep every stride-th step plus the phase boundary
            keep = np.arange(stride, steps + 1, stride)
            if keep.size == 0 or keep[-1] != steps:
                keep = np.append(keep, steps)
            t = offset + np.linspace(start, stop, steps + 1)
            times.append(t[keep])
            states.append(out[keep])
            count += keep.size
        period_index.append(count - 1)
        logger.debug(f"Period {n + 1}/{periods} ends at u={y[0]}, v={y[1]}")

    t = np.concatenate(times)
    y = np.concatenate(states)
    return Trajectory(
        t=t,
        u=y[:, 0],
        v=y[:, 1],
        schedule=s,
        periods=periods,
        period_index=period_index,
    )


class PeriodicOrbit(BaseModel):
    class Config:
        frozen = True

    state: State
    trajectory: Trajectory
    iterations: int


def find_periodic_orbit(
    p: ModelParameters,
    s: Schedule,
    start: State,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
) -> Optional[PeriodicOrbit]:
    """Iterate the period map from start until successive returns agree.
    Returns None when the orbit tends to the trivial state, which is
    decided from the single-species regimes of the species present.
    """
    if _collapsing(p, s, start.as_array()):
        logger.info(f"Orbit from {start} collapses onto the trivial state")
        return None

    y = start.as_array()
    for iteration in range(1, settings.max_iterations + 1):
        previous = y
        y = _period(y, p, s, settings)

        if _settled(y, previous, settings):
            state = State.from_array(y)
            logger.info(f"Periodic orbit {state} found after {iteration} periods")
            trajectory = simulate(state, p, s, 1, settings)
            return PeriodicOrbit(state=state, trajectory=trajectory, iterations=iteration)

    raise PeriodicOrbitNotFound(
        f"No periodic orbit from {start} within {settings.max_iterations} periods",
        previous=State.from_array(previous),
        last=State.from_array(y),
        iterations=settings.max_iterations,
    )


class Monodromy(BaseModel):
    class Config:
        frozen = True

    m11: float
    m12: float
    m21: float
    m22: float

    @classmethod
    def from_matrix(cls, M) -> "Monodromy":
        return cls(m11=M[0, 0], m12=M[0, 1], m21=M[1, 0], m22=M[1, 1])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def eigenvalues(self) -> np.ndarray:
        """Floquet multipliers sorted by modulus"""
        values = np.linalg.eigvals(self.matrix)
        if np.all(np.abs(values.imag) == 0):
            values = values.real
        return values[np.argsort(np.abs(values))]


def monodromy_at(
    omega: State,
    p: ModelParameters,
    s: Schedule,
    settings: IntegratorSettings = DEFAULT_SETTINGS,
) -> Monodromy:
    """Jacobian of the period map at omega, the product V3 V2 V1 of the
    phase-wise fundamental matrices of the variational equations.
    """
    state = omega.as_array()
    M = np.eye(2)
    for phase, start, duration in s.phases():
        n = phase_steps(duration, s.T, settings)
        if n == 0:
            continue
        y = np.concatenate([state, np.eye(2).ravel()])
        field = partial(_variational, p=p, phase=phase)
        result = _rk4(field, y, duration / n, n)
        _check(result, y, phase, start + duration)
        state = result[:2]
        M = result[2:].reshape(2, 2) @ M
    return Monodromy.from_matrix(M)


def growth_integrals(trajectory: Trajectory, p: ModelParameters) -> Tuple[float, float]:
    """Integrals of u + b1 v and r (v + b2 u) over the growth and grazing
    phases of the last period, by Simpson's rule on each phase.
    """
    if trajectory.periods < 1:
        raise ValueError("Trajectory has no complete period")

    s = trajectory.schedule
    offset = (trajectory.periods - 1) * s.T
    t, u, v = trajectory.t, trajectory.u, trajectory.v
    first, second = 0.0, 0.0
    for left, right in ((s.tau1, s.tau2), (s.tau2, s.T)):
        mask = (t >= offset + left) & (t <= offset + right)
        if right <= left or mask.sum() < 2:
            continue
        first += simpson(u[mask] + p.b1 * v[mask], x=t[mask])
        second += simpson(p.r * (v[mask] + p.b2 * u[mask]), x=t[mask])
    return float(first), float(second)


class BasinOutcome(str, Enum):
    COLLAPSE = "Collapse"
    U_BOUNDARY = "UBoundary"
    V_BOUNDARY = "VBoundary"
    INTERIOR = "Interior"
    UNRESOLVED = "Unresolved"


class BasinSample(BaseModel):
    class Config:
        frozen = True

    start: State
    outcome: BasinOutcome
    final: State
    periods: int


def sample_basins(
    p: ModelParameters,
    s: Schedule,
    starts: Iterable[State],
    settings: IntegratorSettings = DEFAULT_SETTINGS,
    max_periods: Optional[int] = None,
) -> List[BasinSample]:
    """Long-run outcome of each start, found by iterating the period map
    on all starts at once. This is numerical evidence, not a proof.
    Collapsing starts are recognized in closed form and report
    final (0, 0) after zero periods.
    """
    starts = list(starts)
    if not starts:
        return []
    if max_periods is None:
        max_periods = settings.max_iterations
    if max_periods < 0:
        raise ValueError(f"Number of periods must be nonnegative, got {max_periods}")

    Y = np.stack([start.as_array() for start in starts], axis=1)
    collapsing = _collapsing(p, s, Y)
    settled = collapsing.copy()
    periods = np.zeros(Y.shape[1], dtype=int)
    for iteration in range(1, max_periods + 1):
        if settled.all():
            break
        previous = Y
        Y = _period(Y, p, s, settings)
        done = _settled(Y, previous, settings)
        periods[~settled & done] = iteration
        settled |= done

    tol = settings.zero_tolerance
    samples = []
    for i, start in enumerate(starts):
        u, v = Y[:, i]
        if collapsing[i]:
            outcome = BasinOutcome.COLLAPSE
            u, v = 0.0, 0.0
        elif not settled[i]:
            outcome = BasinOutcome.UNRESOLVED
            periods[i] = max_periods
        elif u < tol and v < tol:
            # some species persists, the larger one is its small periodic state
            outcome = BasinOutcome.U_BOUNDARY if u >= v else BasinOutcome.V_BOUNDARY
        elif v < tol:
            outcome = BasinOutcome.U_BOUNDARY
        elif u < tol:
            outcome = BasinOutcome.V_BOUNDARY
        else:
            outcome = BasinOutcome.INTERIOR
        samples.append(
            BasinSample(
                start=start,
                outcome=outcome,
                final=State(u=u, v=v),
                periods=int(periods[i]),
            )
        )
    logger.info(f"Sampled {len(samples)} starts, {int(settled.sum())} settled")
    return samples
