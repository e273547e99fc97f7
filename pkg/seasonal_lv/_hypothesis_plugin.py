"""
Register strategies for the parameter types with hypothesis.
Draws are kept inside ranges where the closed-form exponents and the
fixed-step integrator are both well conditioned:
 - Rates: d1, d2, c1, c2 in [0.05, 2], r in [0.25, 4].
 - Competition: b1, b2 in [0, 2].
 - Schedules: T in [1, 12] with 0 <= tau1 <= tau2 <= T.

This file is not imported by default, so it does not make hypothesis a hard dependency.
It is registered as a hypothesis plugin and thus is imported by the hypothesis package.
"""
from hypothesis import assume, strategies as st

from .params import ModelParameters, Schedule
from .scalar import Decay, Logistic, LogisticHarvest, MobiusGrowthMap, log_gain
from .stability import thresholds
from .types import Interval


def bounded(low, high):
    return st.floats(min_value=low, max_value=high, allow_nan=False, allow_infinity=False)


rates = bounded(0.05, 2.0)
ratios = bounded(0.25, 4.0)
couplings = bounded(0.0, 2.0)
durations = bounded(0.0, 5.0)


parameters_strategy = st.builds(
    ModelParameters,
    d1=rates,
    d2=rates,
    r=ratios,
    b1=couplings,
    b2=couplings,
    c1=rates,
    c2=rates,
)


@st.composite
def make_schedule(draw, min_period=1.0, max_period=12.0):
    T = draw(bounded(min_period, max_period))
    a, b = sorted([draw(bounded(0.0, 1.0)), draw(bounded(0.0, 1.0))])
    return Schedule(tau1=a * T, tau2=b * T, T=T)


@st.composite
def make_persistent_case(draw, weak=None):
    """Parameters and schedule with both species persisting alone.
    weak=True draws b1 b2 < 1, weak=False draws b1 b2 > 1.
    """
    if weak is None:
        b1, b2 = draw(couplings), draw(couplings)
    elif weak:
        b1, b2 = draw(bounded(0.0, 0.95)), draw(bounded(0.0, 0.95))
    else:
        b1, b2 = draw(bounded(1.05, 2.0)), draw(bounded(1.05, 2.0))
    p = draw(parameters_strategy).copy(update={"b1": b1, "b2": b2})
    T = draw(bounded(1.0, 12.0))

    # dry season short enough for both species, grazing late enough
    probe = Schedule(tau1=0.0, tau2=0.0, T=T)
    th = thresholds(p, probe)
    tau1 = draw(bounded(0.0, 0.8)) * min(th.tau1_star, th.tau1_star2)
    th = thresholds(p, Schedule(tau1=tau1, tau2=tau1, T=T))
    low = max(th.tau2_star, th.tau2_star2, tau1)
    tau2 = low + draw(bounded(0.2, 1.0)) * (T - low)
    s = Schedule(tau1=tau1, tau2=min(tau2, T), T=T)

    assume(log_gain(p, s, "U") > 0.05)
    assume(log_gain(p, s, "V") > 0.05)
    return p, s


@st.composite
def make_interval(draw, low=0.0, high=10.0):
    left = draw(bounded(low, high))
    right = draw(bounded(left, high))
    return Interval(left=left, right=right)


st.register_type_strategy(ModelParameters, parameters_strategy)
st.register_type_strategy(Schedule, make_schedule())
st.register_type_strategy(Interval, make_interval())

st.register_type_strategy(Decay, st.builds(Decay, d=rates, duration=durations))
st.register_type_strategy(Logistic, st.builds(Logistic, r=ratios, duration=durations))
st.register_type_strategy(
    LogisticHarvest,
    st.builds(LogisticHarvest, r=ratios, c=rates, duration=durations),
)
st.register_type_strategy(
    MobiusGrowthMap,
    st.builds(MobiusGrowthMap, p=bounded(0.01, 50.0), q=bounded(0.0, 50.0)),
)
