# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

import math
import pathlib
import shutil
import unittest

import numpy as np

from mixdim_solve.exception import ConfigException
from mixdim_solve.harness import (
    Experiment,
    ExperimentConfig,
    gen_finite_segments,
    gen_infinite_chords,
    load_config,
    parse_coefficient_spec,
    parse_geometry_spec,
    run_convergence,
    run_iteration_study,
)
from mixdim_solve.tools import _read_content, _write_content

from .common import _template_path


def _on_square_boundary(point):
    return min(abs(point[0]), abs(point[0] - 1), abs(point[1]), abs(point[1] - 1)) < 1e-12


class TestGenerators(unittest.TestCase):
    def test_infinite_chords(self):
        segments = gen_infinite_chords(20, seed=3)
        self.assertEqual(len(segments), 20)
        for segment in segments:
            self.assertTrue(_on_square_boundary(segment.a))
            self.assertTrue(_on_square_boundary(segment.b))
        self.assertEqual(segments, gen_infinite_chords(20, seed=3))
        self.assertNotEqual(segments, gen_infinite_chords(20, seed=4))

    def test_finite_segments(self):
        segments = gen_finite_segments(30, 0.2, seed=1)
        self.assertEqual(len(segments), 30)
        for segment in segments:
            self.assertLessEqual(segment.length, 0.2 + 1e-12)
            for point in (segment.a, segment.b):
                self.assertTrue(-1e-12 <= point[0] <= 1 + 1e-12)
                self.assertTrue(-1e-12 <= point[1] <= 1 + 1e-12)
        self.assertEqual(segments, gen_finite_segments(30, 0.2, seed=1))

    def test_invalid_counts(self):
        with self.assertRaises(ConfigException):
            gen_infinite_chords(0, seed=0)
        with self.assertRaises(ConfigException):
            gen_finite_segments(3, -0.1)


class TestConfig(unittest.TestCase):

    _working_path = pathlib.Path("./tests/data_tmp").resolve()

    def test_parse_specs(self):
        self.assertEqual(parse_coefficient_spec("const:2"), ("const", 2.0))
        self.assertEqual(parse_coefficient_spec("uniform:0.01,1"), ("uniform", 0.01, 1.0))
        self.assertEqual(parse_geometry_spec("chords:50"), ("chords", 50))
        self.assertEqual(parse_geometry_spec("segments:27"), ("segments", 27, 0.2))
        self.assertEqual(parse_geometry_spec("segments:5:0.1"), ("segments", 5, 0.1))
        self.assertEqual(parse_geometry_spec("none"), ("none",))
        self.assertEqual(parse_geometry_spec("net.txt"), ("file", "net.txt"))
        for spec in ("const:0", "uniform:1,0.5", "gauss:1"):
            with self.assertRaises(ConfigException):
                parse_coefficient_spec(spec)
        for spec in ("chords:0", "chords:x", "segments:3:-1"):
            with self.assertRaises(ConfigException):
                parse_geometry_spec(spec)

    def test_defaults_and_overrides(self):
        config = load_config(overrides={"h": 0.25, "H": "0.5,0.25", "seed": None})
        self.assertEqual(config.h, 0.25)
        self.assertEqual(config.H, [0.5, 0.25])
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.geometry, "chords:50")

    def test_preset(self):
        config = load_config(preset="iterations_infinite")
        self.assertEqual(config.B, [0.01, 1.0, 100.0])
        self.assertEqual(config.A_iface, ["const:1", "uniform:0.01,1"])
        self.assertTrue(config.unpreconditioned)
        with self.assertRaises(ConfigException):
            load_config(preset="missing")

    def test_file_and_errors(self):
        shutil.rmtree(self._working_path, ignore_errors=True)
        self._working_path.mkdir(parents=True)
        path = self._working_path / "experiment.yaml"
        _write_content(path, "geometry: none\nlevels: 3\nA_iface: const:2|uniform:1,2\n")
        config = load_config(str(path), overrides={"levels": 2})
        self.assertEqual(config.geometry, "none")
        self.assertEqual(config.levels, 2)
        self.assertEqual(config.A_iface, ["const:2", "uniform:1,2"])
        with self.assertRaises(ConfigException):
            load_config(overrides={"color": "blue"})
        with self.assertRaises(ConfigException):
            ExperimentConfig(h=-1.0)
        with self.assertRaises(ConfigException):
            ExperimentConfig(B=[-1.0])
        with self.assertRaises(ConfigException):
            ExperimentConfig(solver="gmres")


class TestExperiment(unittest.TestCase):

    _working_path = pathlib.Path("./tests/data_tmp").resolve()

    def setUp(self):
        shutil.rmtree(self._working_path, ignore_errors=True)
        self._working_path.mkdir(parents=True)

    def _config(self, **kwargs):
        values = dict(
            geometry=str(_template_path / "crossing.txt"),
            h=0.25,
            levels=2,
            extra=1,
            H=[0.5],
            out=str(self._working_path),
        )
        values.update(kwargs)
        return ExperimentConfig(**values)

    def test_zero_source_has_zero_error(self):
        result = run_convergence(self._config(f_bulk="zero", f_iface="zero"))
        for row in result.rows:
            self.assertEqual(row["energy_error"], 0.0)
        self.assertTrue(math.isnan(result.slope))

    def test_errors_decrease(self):
        result = run_convergence(self._config())
        errors = [row["energy_error"] for row in result.rows]
        self.assertGreater(errors[0], errors[1])
        self.assertGreater(result.slope, 0)
        content = _read_content(self._working_path / "convergence.csv")
        self.assertIn("level,h,dofs,energy_error,bulk_error,iface_error,coupling_error", content)
        self.assertTrue((self._working_path / "convergence.gp").exists())

    def test_pcg_matches_direct(self):
        direct = Experiment(self._config(out=str(self._working_path / "direct"))).run("solve")
        iterative = Experiment(
            self._config(solver="pcg", rtol=1e-12, out=str(self._working_path / "pcg"))
        ).run("solve")
        np.testing.assert_allclose(iterative.values, direct.values, atol=1e-8)
        self.assertGreater(iterative.iterations, 0)
        self.assertTrue((self._working_path / "pcg" / "residuals.csv").exists())
        content = _read_content(self._working_path / "direct" / "solution.csv")
        self.assertIn("kind,region,x,y,value", content)

    def test_iteration_study(self):
        rows = run_iteration_study(
            self._config(levels=1, H=[2.0, 0.5], B=[0.0, 1.0], unpreconditioned=True)
        )
        self.assertEqual(len(rows), 4)
        for row in rows:
            self.assertTrue(row["converged"])
            self.assertTrue(row["error_bound_holds"])
            if row["H"] == 2.0:
                self.assertEqual(row["iterations"], 1)
            self.assertGreater(row["schur_cg_iterations"], 0)
            self.assertGreater(row["full_cg_iterations"], 0)
        self.assertTrue((self._working_path / "iterations.csv").exists())

    def test_plain_cg_needs_many_more_iterations(self):
        rows = run_iteration_study(
            self._config(
                geometry="chords:8",
                seed=1,
                h=0.03125,
                levels=1,
                H=[0.125],
                B=[0.01],
                unpreconditioned=True,
            )
        )
        self.assertEqual(len(rows), 1)
        self.assertTrue(rows[0]["converged"])
        self.assertTrue(rows[0]["error_bound_holds"])
        self.assertGreaterEqual(rows[0]["full_cg_iterations"], 20 * rows[0]["iterations"])

    def test_mesh_and_diagnose(self):
        experiment = Experiment(self._config())
        stats = experiment.run("mesh")
        self.assertEqual(stats["regions"], 4)
        self.assertTrue((self._working_path / "mesh.txt").exists())
        run_log = _read_content(self._working_path / "run.log")
        self.assertIn("Running 'mesh'", run_log)
        self.assertIn("Mesh:", run_log)
        items = experiment.run("diagnose")
        self.assertTrue(items["walk_success"])
        self.assertEqual(items["corners"], 16)
        self.assertEqual(items["predicted_rate"], 1.0)
        self.assertGreater(items["c1"], 0)
        with self.assertRaises(ConfigException):
            experiment.run("plot")
