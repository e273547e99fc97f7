import math
import unittest

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from seasonal_lv import (
    Decay,
    Logistic,
    LogisticHarvest,
    MobiusGrowthMap,
    Species,
    fixed_point,
    iterate_sequence,
    map_limit_ratio,
    period_map,
    phase_map,
    scalar_classify,
    thresholds,
)
from seasonal_lv.errors import MalformedMapError
from seasonal_lv.integrator import IntegratorSettings, State, period_map_2d
from seasonal_lv.scalar import (
    ScalarLabel,
    log_gain,
    partial_maps,
    periodic_profile,
    species_phases,
)
from seasonal_lv._hypothesis_plugin import make_schedule, parameters_strategy

from .test_params import example

FINE = IntegratorSettings(steps_per_period=16384)

phases = st.one_of(
    st.from_type(Decay), st.from_type(Logistic), st.from_type(LogisticHarvest)
)


def sequential_image(p, s, species, x):
    """Period map by the separate closed-form relation of each phase"""
    d, r, c = (p.d1, 1.0, p.c1) if species == "U" else (p.d2, p.r, p.c2)
    # dry season: exponential decay
    x = x * math.exp(-d * s.tau1)
    # growth: x / (1 - x) grows like exp(r t)
    ratio = x / (1 - x) * math.exp(r * (s.tau2 - s.tau1))
    x = ratio / (1 + ratio)
    # grazing: 1 / x relaxes towards r / (r - c)
    net = r - c
    L = s.T - s.tau2
    if net == 0:
        return 1 / (1 / x + r * L)
    return 1 / (math.exp(-net * L) / x - r * math.expm1(-net * L) / net)


class TestPhaseMaps(unittest.TestCase):
    def test_decay(self):
        m = phase_map(Decay(d=0.5, duration=2.0))
        self.assertAlmostEqual(m(1.0), math.exp(-1), places=15)
        self.assertEqual(m.q, 0.0)

    def test_logistic(self):
        m = phase_map(Logistic(r=1.0, duration=math.log(2)))
        self.assertAlmostEqual(m(0.5), 2 / 3, places=14)

    def test_balanced_harvest(self):
        m = phase_map(LogisticHarvest(r=1.0, c=1.0, duration=1.0))
        self.assertEqual((m.p, m.q), (1.0, 1.0))
        self.assertEqual(m(1.0), 0.5)

    def test_nearly_balanced_harvest_is_continuous(self):
        exact = phase_map(LogisticHarvest(r=1.0, c=1.0, duration=2.0))
        near = phase_map(LogisticHarvest(r=1.0, c=1.0 + 1e-9, duration=2.0))
        self.assertAlmostEqual(exact(0.7), near(0.7), places=8)

    def test_empty_phase_is_identity(self):
        for phase in (
            Decay(d=0.3, duration=0.0),
            Logistic(r=2.0, duration=0.0),
            LogisticHarvest(r=2.0, c=0.5, duration=0.0),
        ):
            self.assertEqual(phase_map(phase), MobiusGrowthMap.identity())

    @given(st.lists(phases, min_size=1, max_size=5), st.lists(st.floats(1e-3, 5.0), min_size=10, max_size=10))
    @settings(deadline=None, max_examples=100)
    def test_composition_law(self, scalar_phases, xs):
        maps = [phase_map(phase) for phase in scalar_phases]
        composed = MobiusGrowthMap.compose(*maps)
        for x in xs:
            y = x
            for m in maps:
                y = m(y)
            self.assertTrue(math.isclose(composed(x), y, rel_tol=1e-12))

    @given(st.from_type(MobiusGrowthMap), st.from_type(MobiusGrowthMap), st.floats(0.0, 10.0))
    def test_then_is_composition(self, first, second, x):
        self.assertTrue(
            math.isclose(first.then(second)(x), second(first(x)), rel_tol=1e-12, abs_tol=1e-300)
        )

    @given(st.from_type(MobiusGrowthMap), st.floats(0.0, 10.0))
    def test_derivative(self, m, x):
        h = 1e-6 * max(1.0, x)
        numeric = (m(x + h) - m(x - h)) / (2 * h) if x > h else (m(x + h) - m(x)) / h
        self.assertTrue(math.isclose(m.derivative(x), numeric, rel_tol=1e-3, abs_tol=1e-9))


class TestPeriodMap(unittest.TestCase):
    def test_gain_at_threshold(self):
        p, s = example("coexist")
        # c1 solving tau2_star = tau2
        c1 = ((p.d1 + 1) * s.tau1 - s.T) / (s.tau2 - s.T)
        p = p.copy(update={"c1": c1})
        self.assertAlmostEqual(thresholds(p, s).tau2_star, s.tau2, places=12)
        self.assertAlmostEqual(period_map(p, s, Species.U).p, 1.0, places=12)

    def test_example_gain(self):
        p, s = example("u_wins")
        self.assertAlmostEqual(thresholds(p, s).tau2_star, 1.5, places=12)
        m = period_map(p, s, Species.U)
        self.assertTrue(math.isclose(m.p, math.exp(2.6), rel_tol=1e-12))
        self.assertAlmostEqual(log_gain(p, s, "U"), 2.6, places=12)

    @given(parameters_strategy, make_schedule(), st.sampled_from(["U", "V"]))
    @settings(deadline=None, max_examples=100)
    def test_matches_sequential_relations(self, p, s, species):
        m = period_map(p, s, species)
        for x in np.linspace(0.01, 0.99, 20):
            expected = sequential_image(p, s, species, x)
            self.assertTrue(math.isclose(m(x), expected, rel_tol=1e-10, abs_tol=1e-14))

    @given(parameters_strategy, make_schedule(), st.sampled_from(["U", "V"]))
    @settings(deadline=None, max_examples=100)
    def test_limit_ratio_identity(self, p, s, species):
        th = thresholds(p, s)
        if species == "U":
            expected = math.exp(p.c1 * (s.tau2 - th.tau2_star))
        else:
            expected = math.exp(p.c2 * (s.tau2 - th.tau2_star2))
        ratio = map_limit_ratio(period_map(p, s, species))
        self.assertTrue(math.isclose(ratio, expected, rel_tol=1e-10))

    def test_limit_ratio(self):
        self.assertEqual(map_limit_ratio(MobiusGrowthMap.identity()), 1.0)

        p, s = example("collapse_c")
        self.assertAlmostEqual(thresholds(p, s).tau2_star, 7.5, places=12)
        m = period_map(p, s, Species.U)
        self.assertTrue(math.isclose(map_limit_ratio(m), math.exp(-0.2), rel_tol=1e-12))
        self.assertLess(map_limit_ratio(m), 1)
        self.assertTrue(math.isclose(m(1e-8) / 1e-8, m.p, rel_tol=1e-6))

    def test_partial_maps(self):
        p, s = example("coexist")
        dry, growth, full = partial_maps(p, s, Species.V)
        self.assertEqual(full, period_map(p, s, Species.V))
        self.assertTrue(math.isclose(dry.p, math.exp(-p.d2 * s.tau1)))
        self.assertTrue(math.isclose(growth.p, dry.p * math.exp(p.r * (s.tau2 - s.tau1))))

    @pytest.mark.slow
    @given(parameters_strategy, make_schedule(), st.floats(0.01, 2.0))
    @settings(deadline=None, max_examples=50)
    def test_matches_integration(self, p, s, x):
        closed = period_map(p, s, Species.U)(x)
        numeric = period_map_2d(State(u=x, v=0.0), p, s, FINE).u
        self.assertLess(abs(closed - numeric), 1e-8)


class TestFixedPoint(unittest.TestCase):
    def test_simple(self):
        self.assertEqual(fixed_point(MobiusGrowthMap(p=2.0, q=1.0)), 1.0)
        self.assertIsNone(fixed_point(MobiusGrowthMap(p=math.exp(-0.2), q=0.5)))
        self.assertIsNone(fixed_point(MobiusGrowthMap.identity()))

    def test_malformed(self):
        with self.assertRaises(MalformedMapError):
            fixed_point(MobiusGrowthMap(p=2.0, q=0.0))

    def test_example_by_iteration(self):
        p, s = example("u_wins")
        m = period_map(p, s, Species.U)
        x0 = fixed_point(m)
        self.assertTrue(math.isclose(x0, (math.exp(2.6) - 1) / m.q, rel_tol=1e-12))

        x = 0.5
        for _ in range(100000):
            y = m(x)
            if abs(y - x) < 1e-12:
                break
            x = y
        self.assertAlmostEqual(x, x0, places=11)

    @given(parameters_strategy, make_schedule(), st.sampled_from(["U", "V"]))
    @settings(deadline=None, max_examples=100)
    def test_residual(self, p, s, species):
        m = period_map(p, s, species)
        assume(m.p > 1)
        x0 = fixed_point(m)
        self.assertGreater(x0, 0)
        self.assertLess(x0, 1)
        self.assertLessEqual(abs(m(x0) - x0), 1e-12 * max(1, x0))


class TestIterateSequence(unittest.TestCase):
    def test_constant_at_fixed_point(self):
        m = MobiusGrowthMap(p=2.0, q=1.0)
        np.testing.assert_array_equal(iterate_sequence(m, 1.0, 5), np.ones(6))

    def test_example_increasing(self):
        p, s = example("u_wins")
        m = period_map(p, s, Species.U)
        seq = iterate_sequence(m, 0.01, 60)
        steps = np.diff(seq)
        self.assertTrue(np.all(steps >= 0))
        self.assertTrue(np.all(steps[:8] > 0))
        self.assertAlmostEqual(seq[-1], fixed_point(m), places=10)

    def test_invalid_arguments(self):
        m = MobiusGrowthMap(p=2.0, q=1.0)
        with self.assertRaises(ValueError):
            iterate_sequence(m, 0.0, 5)
        with self.assertRaises(ValueError):
            iterate_sequence(m, 0.5, 0)

    @given(parameters_strategy, make_schedule(), st.floats(1.0, 10.0), st.sampled_from(["U", "V"]))
    @settings(deadline=None, max_examples=100)
    def test_above_capacity_decreases(self, p, s, x, species):
        assume(s.tau1 > 0 or s.tau2 < s.T)
        for start in (x, 1.0, 2.0, 10.0):
            self.assertLess(period_map(p, s, species)(start), start)

    @given(
        parameters_strategy,
        make_schedule(),
        st.floats(1e-3, 3.0),
        st.sampled_from(["U", "V"]),
    )
    @settings(deadline=None, max_examples=100)
    def test_monotonicity_trichotomy(self, p, s, x, species):
        for m in partial_maps(p, s, species):
            seq = iterate_sequence(m, x, 8)
            steps = np.diff(seq)
            # iterates that have reached their limit to machine precision
            moving = np.abs(steps) > 8 * np.finfo(float).eps * np.abs(seq[1:])
            direction = np.sign(m(x) - x)
            self.assertTrue(np.all(np.sign(steps[moving]) == direction))


class TestScalarClassify(unittest.TestCase):
    def test_dry_season_too_long(self):
        p, s = example("collapse_a")
        self.assertAlmostEqual(thresholds(p, s).tau1_star, 10 / 1.5)
        regime = scalar_classify(p, s, Species.U)
        self.assertEqual(regime.label, ScalarLabel.EXTINCT)
        self.assertIsNone(regime.fixed_point)

    def test_grazing_too_early(self):
        p, s = example("collapse_b")
        self.assertAlmostEqual(thresholds(p, s).tau2_star2, 8.875, places=12)
        self.assertEqual(scalar_classify(p, s, "V").label, ScalarLabel.EXTINCT)

    def test_persistent(self):
        p, s = example("coexist")
        th = thresholds(p, s)
        self.assertAlmostEqual(th.tau2_star, 10 / 3, places=12)
        self.assertAlmostEqual(th.tau1_star, 20 / 3, places=12)
        regime = scalar_classify(p, s, Species.U)
        self.assertEqual(regime.label, ScalarLabel.PERSISTENT_PERIODIC)
        self.assertTrue(0 < regime.fixed_point < 1)
        self.assertGreater(regime.multiplier_at_zero, 1)

    def test_boundary_is_degenerate_extinct(self):
        p, s = example("coexist")
        s = s.copy(update={"tau2": thresholds(p, s).tau2_star})
        regime = scalar_classify(p, s, Species.U)
        self.assertEqual(regime.label, ScalarLabel.EXTINCT)
        self.assertTrue(regime.degenerate)

    @given(parameters_strategy, make_schedule(), st.sampled_from(["U", "V"]))
    @settings(deadline=None, max_examples=100)
    def test_thresholds_decide(self, p, s, species):
        regime = scalar_classify(p, s, species)
        assume(not regime.degenerate)
        th = thresholds(p, s)
        tau1_star, tau2_star = (
            (th.tau1_star, th.tau2_star) if species == "U" else (th.tau1_star2, th.tau2_star2)
        )
        extinct = s.tau1 >= tau1_star or s.tau2 <= tau2_star
        self.assertEqual(regime.label == ScalarLabel.EXTINCT, extinct)
        self.assertEqual(regime.persistent, regime.multiplier_at_zero > 1)


class TestPeriodicProfile(unittest.TestCase):
    def test_profile_is_periodic(self):
        p, s = example("u_wins")
        x0 = scalar_classify(p, s, Species.U).fixed_point
        values = periodic_profile(p, s, Species.U, [0.0, s.tau1, s.tau2, s.T, 2 * s.T])
        self.assertAlmostEqual(values[0], x0, places=14)
        self.assertAlmostEqual(values[3], x0, places=12)
        dry, growth, _ = partial_maps(p, s, Species.U)
        self.assertAlmostEqual(values[1], dry(x0), places=14)
        self.assertAlmostEqual(values[2], growth(x0), places=14)

    def test_extinct_has_no_profile(self):
        p, s = example("u_wins")
        self.assertIsNone(periodic_profile(p, s, Species.V, [0.0, 1.0]))

    def test_phases_of_species(self):
        p, s = example("coexist")
        dry, growth, grazing = species_phases(p, s, Species.V)
        self.assertEqual(dry, Decay(d=p.d2, duration=s.tau1))
        self.assertEqual(grazing.c, p.c2)
