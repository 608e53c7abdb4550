# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

import pathlib
import shutil
import unittest

from mixdim_solve.__main__ import main
from mixdim_solve.tools import _read_content

from .common import _template_path


class TestMain(unittest.TestCase):

    _working_path = pathlib.Path("./tests/data_tmp").resolve()

    def setUp(self):
        shutil.rmtree(self._working_path, ignore_errors=True)
        self._working_path.mkdir(parents=True)

    def _main(self, verb, *extra):
        log_path = self._working_path / "test_log.log"
        main(
            [
                verb,
                "--geometry",
                str(_template_path / "crossing.txt"),
                "--h",
                "0.25",
                "--H",
                "0.5",
                "--out",
                str(self._working_path / "out"),
                "--log-path",
                str(log_path),
            ]
            + list(extra)
        )
        return _read_content(log_path)

    def test_mesh(self):
        log_content = self._main("mesh")
        self.assertIn("Mesh:", log_content)
        self.assertTrue((self._working_path / "out" / "mesh.txt").exists())

    def test_run_log_keeps_info(self):
        log_content = self._main("mesh", "--log-level", "WARNING")
        self.assertNotIn("Mesh:", log_content)
        run_log = _read_content(self._working_path / "out" / "run.log")
        self.assertIn("Mesh:", run_log)

    def test_solve_with_pcg(self):
        log_content = self._main("solve", "--solver", "pcg")
        self.assertIn("Solved with PCG in", log_content)
        self.assertTrue((self._working_path / "out" / "solution.csv").exists())

    def test_iterations(self):
        log_content = self._main("iterations", "--B", "0.01,100", "-l", "1", "-u")
        self.assertIn("Table written", log_content)
        content = _read_content(self._working_path / "out" / "iterations.csv")
        self.assertIn("# geometry: %s" % (_template_path / "crossing.txt"), content)
        self.assertEqual(len([x for x in content.splitlines() if not x.startswith("#")]), 3)

    def test_diagnose(self):
        log_content = self._main("diagnose")
        self.assertIn("Report written", log_content)
        self.assertIn("Spectral bounds", log_content)

    def test_invalid_configuration(self):
        with self.assertRaises(SystemExit) as context:
            self._main("mesh", "--h", "-1")
        self.assertEqual(context.exception.code, 1)
        log_content = _read_content(self._working_path / "test_log.log")
        self.assertIn("ConfigException", log_content)
