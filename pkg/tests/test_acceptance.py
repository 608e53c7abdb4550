# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Full-size studies, slow; enabled with MIXDIM_ACCEPTANCE=1."""

import os
import pathlib
import shutil
import unittest

from mixdim_solve.analysis import (
    graph_laplacian,
    interface_graph,
    mass_matrix,
    spectral_equivalence,
)
from mixdim_solve.assembly import energy_norm
from mixdim_solve.harness import Experiment, ExperimentConfig, load_config
from mixdim_solve.solver import factor_bulk, monolithic_solve

_ENABLED = os.environ.get("MIXDIM_ACCEPTANCE") == "1"


@unittest.skipUnless(_ENABLED, "set MIXDIM_ACCEPTANCE=1 to run the full studies")
class TestAcceptance(unittest.TestCase):

    _working_path = pathlib.Path("./tests/data_tmp").resolve()

    def setUp(self):
        shutil.rmtree(self._working_path, ignore_errors=True)
        self._working_path.mkdir(parents=True)

    def test_iterative_matches_direct(self):
        cases = [
            dict(geometry="chords:8", seed=1, h=0.125),
            dict(geometry="chords:4", seed=2, h=0.1, B=[100.0]),
            dict(geometry="segments:10:0.3", seed=3, h=0.1),
            dict(geometry="segments:20", seed=4, h=0.125, B=[0.01]),
            dict(geometry="chords:6", seed=5, h=0.125, A_iface=["uniform:0.01,1"]),
        ]
        for values in cases:
            config = ExperimentConfig(
                H=[0.25], rtol=1e-12, out=str(self._working_path), **values
            )
            experiment = Experiment(config)
            m = experiment.base_mesh
            c = experiment.coefficients([m])[0]
            iterative = experiment.solve(m, c, H=0.25)
            system = iterative.system
            self.assertLessEqual(system.n0 + system.n1, 2000, values)
            direct = system.expand(*monolithic_solve(system))
            error = energy_norm(system, iterative.values - direct)
            self.assertLessEqual(error, 1e-8 * energy_norm(system, direct), values)

    def test_convergence_infinite(self):
        config = load_config(preset="convergence_infinite", overrides={"out": str(self._working_path)})
        result = Experiment(config).run_convergence()
        self.assertGreaterEqual(result.slope, 0.9)

    def test_convergence_finite(self):
        config = load_config(preset="convergence_finite", overrides={"out": str(self._working_path)})
        result = Experiment(config).run_convergence()
        self.assertGreaterEqual(result.slope, 0.55)

    def test_iteration_robustness(self):
        config = load_config(
            preset="iterations_infinite",
            overrides={"out": str(self._working_path), "A_iface": "const:1"},
        )
        rows = Experiment(config).run_iterations()
        count = {(r["level"], r["B"], r["H"]): r["iterations"] for r in rows}
        for row in rows:
            self.assertTrue(row["converged"])
        for level in (0, 1):
            for b in (0.01, 1.0, 100.0):
                coarse, fine = count[(level, b, 0.125)], count[(level, b, 0.0625)]
                self.assertLessEqual(abs(fine - coarse), 0.35 * coarse)
        for b in (0.01, 1.0, 100.0):
            for H in (0.125, 0.0625):
                before, after = count[(0, b, H)], count[(1, b, H)]
                self.assertLessEqual(abs(after - before), 0.35 * before)
        for level in (0, 1):
            for H in (0.125, 0.0625):
                self.assertGreater(count[(level, 100.0, H)], count[(level, 1.0, H)])
                self.assertGreaterEqual(
                    count[(level, 1.0, H)], 0.8 * count[(level, 0.01, H)]
                )
        for row in rows:
            self.assertGreaterEqual(row["full_cg_iterations"], 10 * row["iterations"])

    def test_spectral_bound(self):
        config = ExperimentConfig(geometry="chords:8", seed=1, h=0.125, out=str(self._working_path))
        experiment = Experiment(config)
        m = experiment.base_mesh
        c = experiment.coefficients([m])[0]
        result = experiment.solve(m, c)
        graph = interface_graph(m, result.dofmap)
        bounds = spectral_equivalence(
            factor_bulk(result.system), graph_laplacian(graph), mass_matrix(graph)
        )
        self.assertTrue(bounds.holds)
