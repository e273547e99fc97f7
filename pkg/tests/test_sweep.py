import json
import os
import tempfile
import unittest

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from pydantic import ValidationError
from scipy.optimize import brentq

from seasonal_lv import (
    GridSpec,
    Interval,
    ModelParameters,
    Region,
    Schedule,
    boundary_lines,
    sweep_regions,
)
from seasonal_lv.integrator import IntegratorSettings
from seasonal_lv.stability import exponents
from seasonal_lv.sweep import audit, c_plane_lines, export
from seasonal_lv._hypothesis_plugin import make_schedule, parameters_strategy

from .test_params import example

LINE_EXPONENTS = {
    "tau2_star": "log_lambda5",
    "tau2_star2": "log_lambda6",
    "lambda2_unit": "log_lambda2",
    "lambda4_unit": "log_lambda4",
}


def tau_grid(n=60, species=None):
    return GridSpec(range1=(0.0, 10.0), range2=(0.0, 10.0), n1=n, n2=n, species=species)


class TestGridSpec(unittest.TestCase):
    def test_defaults(self):
        spec = GridSpec(range1=(0.0, 10.0), range2=[0.0, 10.0])
        self.assertEqual(spec.shape, (200, 200))
        self.assertTrue(spec.tau_plane)
        self.assertAlmostEqual(spec.centers1()[0], 0.025)
        self.assertAlmostEqual(spec.centers2()[-1], 9.975)

    def test_mixed_plane_rejected(self):
        with self.assertRaises(ValidationError):
            GridSpec(axis1="tau1", axis2="c2", range1=(0.0, 10.0), range2=(0.1, 2.0))

    def test_ranges_checked(self):
        with self.assertRaises(ValidationError):
            GridSpec(axis1="c1", axis2="c2", range1=(0.0, 2.0), range2=(0.1, 2.0))
        with self.assertRaises(ValidationError):
            GridSpec(range1=(-1.0, 10.0), range2=(0.0, 10.0))
        with self.assertRaises(ValidationError):
            GridSpec(range1=(0.0, 10.0), range2=(0.0, 10.0), n1=1)

    def test_species_parsing(self):
        self.assertEqual(tau_grid(species="u").species.value, "U")


class TestBoundaryLines(unittest.TestCase):
    def test_threshold_value(self):
        p, s = example("collapse_c")
        lines = {line.name: line for line in boundary_lines(p, s, (0.0, 10.0), n=11)}
        self.assertEqual(lines["tau2_star"].x[6], 6.0)
        self.assertAlmostEqual(lines["tau2_star"].y[6], 7.5)

    def test_names(self):
        p, s = example("bistable")
        names = [line.name for line in boundary_lines(p, s, Interval(left=0.0, right=10.0))]
        self.assertEqual(names, ["tau2_star", "tau2_star2", "lambda2_unit", "lambda4_unit"])

    def test_degenerate_locus_skipped(self):
        p, s = example("coexist")
        # c2 = r b2 c1
        p = p.copy(update={"b2": 1.0})
        names = [line.name for line in boundary_lines(p, s, (0.0, 10.0))]
        self.assertNotIn("lambda2_unit", names)

    def test_lambda2_locus_by_root_finding(self):
        p, s = example("bistable")
        line = {line.name: line for line in boundary_lines(p, s, (4.0, 5.0), n=3)}[
            "lambda2_unit"
        ]
        for tau1, tau2 in zip(line.x, line.y):
            root = brentq(
                lambda t: exponents(p, Schedule(tau1=tau1, tau2=t, T=s.T)).log_lambda2,
                tau1,
                s.T,
                xtol=1e-13,
            )
            self.assertAlmostEqual(root, tau2, delta=1e-9)

    @given(parameters_strategy, make_schedule())
    @settings(deadline=None)
    def test_lines_are_neutral(self, p, s):
        for line in boundary_lines(p, s, (0.0, s.T), n=21):
            exponent = LINE_EXPONENTS[line.name]
            for tau1, tau2 in zip(line.x, line.y):
                if not 0 <= tau1 <= tau2 <= s.T:
                    continue
                e = exponents(p, Schedule(tau1=tau1, tau2=tau2, T=s.T))
                self.assertAlmostEqual(getattr(e, exponent), 0.0, delta=1e-8)

    def test_symmetric_species(self):
        p = ModelParameters(d1=0.5, d2=0.5, r=1.0, b1=0.2, b2=0.2, c1=0.6, c2=0.6)
        _, s = example("coexist")
        lines = {line.name: line for line in boundary_lines(p, s, (0.0, 10.0))}
        np.testing.assert_allclose(lines["tau2_star"].y, lines["tau2_star2"].y)

    def test_distance(self):
        p, s = example("collapse_c")
        line = boundary_lines(p, s, (0.0, 10.0))[0]
        self.assertAlmostEqual(line.distance(6.0, 7.5), 0.0)
        self.assertGreater(line.distance(0.0, 10.0), 1.0)

    def test_c_plane(self):
        p, s = example("coexist")
        lines = {line.name: line for line in c_plane_lines(p, s, (0.1, 3.0), (0.1, 3.0))}
        self.assertAlmostEqual(lines["u_threshold"].x[0], 4 / 3)
        self.assertAlmostEqual(lines["v_threshold"].y[0], (10 - 1.1 * 4) / 3)

    def test_c_plane_without_grazing(self):
        p, _ = example("coexist")
        s = Schedule(tau1=4.0, tau2=10.0, T=10.0)
        self.assertEqual(c_plane_lines(p, s, (0.1, 3.0), (0.1, 3.0)), [])


class TestSweepRegions(unittest.TestCase):
    def test_weak_competition(self):
        grid = sweep_regions(*example("coexist"), tau_grid())
        self.assertEqual(grid.cells.shape, (60, 60))
        self.assertTrue(grid.contains(Region.IV_COEXIST.value))
        self.assertFalse(grid.contains(Region.VII_BISTABLE.value))
        self.assertEqual(grid.unexplained_changes(), [])

    def test_strong_competition(self):
        grid = sweep_regions(*example("bistable"), tau_grid())
        self.assertTrue(grid.contains(Region.VII_BISTABLE.value))
        self.assertFalse(grid.contains(Region.IV_COEXIST.value))
        self.assertEqual(grid.unexplained_changes(), [])

    def test_inadmissible_cells(self):
        grid = sweep_regions(*example("coexist"), tau_grid(n=10))
        # below the diagonal tau2 < tau1
        self.assertEqual(grid.cells[9, 0], Region.INVALID_SCHEDULE.code)
        self.assertEqual(grid.label(9, 0), "InvalidSchedule")
        self.assertNotEqual(grid.cells[0, 9], Region.INVALID_SCHEDULE.code)

    def test_single_species(self):
        p, s = example("collapse_c")
        p = p.copy(update={"b1": 0.0, "b2": 0.0})
        grid = sweep_regions(p, s, tau_grid(n=50, species="U"))
        self.assertEqual([line.name for line in grid.boundary_curves], ["tau2_star"])
        self.assertLessEqual(
            set(grid.counts()), {"InvalidSchedule", "Extinct", "PersistentPeriodic", "Boundary"}
        )
        self.assertTrue(grid.contains("Extinct"))
        self.assertTrue(grid.contains("PersistentPeriodic"))
        self.assertEqual(grid.unexplained_changes(), [])

    def test_c_plane(self):
        spec = GridSpec(axis1="c1", axis2="c2", range1=(0.05, 3.0), range2=(0.05, 3.0), n1=40, n2=40)
        grid = sweep_regions(*example("coexist"), spec)
        self.assertNotIn(Region.INVALID_SCHEDULE.code, grid.cells)
        self.assertTrue(grid.contains(Region.I_COLLAPSE.value))
        self.assertTrue(grid.contains(Region.IV_COEXIST.value))
        self.assertEqual(grid.unexplained_changes(), [])

    def test_parallel_rows_are_identical(self):
        p, s = example("bistable")
        serial = sweep_regions(p, s, tau_grid(n=20), n_jobs=1)
        parallel = sweep_regions(p, s, tau_grid(n=20), n_jobs=2)
        np.testing.assert_array_equal(serial.cells, parallel.cells)

    def test_export(self):
        grid = sweep_regions(*example("coexist"), tau_grid(n=10))
        with tempfile.TemporaryDirectory() as tmp:
            csv_path = os.path.join(tmp, "grid.csv")
            json_path = os.path.join(tmp, "grid.json")
            export(grid, csv_path, json_path)

            frame = pd.read_csv(csv_path, index_col=0)
            with open(json_path) as f:
                sidecar = json.load(f)

        self.assertEqual(frame.shape, (10, 10))
        self.assertEqual(frame.index.name, "tau1")
        np.testing.assert_array_equal(frame.values, grid.cells)
        self.assertEqual(sidecar["shape"], [10, 10])
        self.assertEqual(sidecar["codes"]["4"], "IV_Coexist")
        self.assertEqual(sidecar["axes"]["tau1"]["range"], [0.0, 10.0])
        self.assertIsNone(sidecar["species"])
        self.assertEqual(sum(sidecar["counts"].values()), 100)
        self.assertEqual(
            [curve["name"] for curve in sidecar["boundary_curves"]],
            [line.name for line in grid.boundary_curves],
        )


class TestAudit(unittest.TestCase):
    def test_species_grid_rejected(self):
        p, s = example("collapse_c")
        grid = sweep_regions(p, s, tau_grid(n=4, species="U"))
        with self.assertRaises(ValueError):
            audit(grid, p, s, 2)

    def test_no_cells(self):
        p, s = example("coexist")
        grid = sweep_regions(p, s, tau_grid(n=4))
        self.assertEqual(audit(grid, p, s, 0).cells, [])

    @pytest.mark.slow
    def test_simulation_agrees(self):
        p, s = example("bistable")
        grid = sweep_regions(p, s, tau_grid(n=12))
        coarse = IntegratorSettings(steps_per_period=1024, min_phase_steps=32)
        report = audit(grid, p, s, 4, coarse, max_periods=1000)
        self.assertEqual(len(report.cells), 4)
        self.assertEqual(report.mismatches, [])
