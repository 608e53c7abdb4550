# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

import math
import pathlib
import shutil
import unittest

import numpy as np

from mixdim_solve.analysis import (
    InterfaceGraph,
    coercivity_walk,
    condition_number,
    corner_classification,
    graph_laplacian,
    interface_graph,
    mass_matrix,
    network_statistics,
    poincare_constant,
    predicted_rate,
    singular_exponents,
    spectral_equivalence,
    write_report,
)
from mixdim_solve.exception import AnalysisException
from mixdim_solve.geometry import build_arrangement
from mixdim_solve.mesh import refine
from mixdim_solve.solver import factor_bulk
from mixdim_solve.space import build_dofmap
from mixdim_solve.tools import _read_content

from .common import CROSSING, SLIT, build_problem

# (kind, angle as a multiple of pi, exponents in (0, 1))
_EXPONENT_CASES = [
    ("S", 1 / 3, []),
    ("S", 1 / 2, []),
    ("S", 1, []),
    ("S", 5 / 4, [4 / 5]),
    ("S", 4 / 3, [3 / 4]),
    ("S", 3 / 2, [2 / 3]),
    ("S", 5 / 3, [3 / 5]),
    ("S", 7 / 4, [4 / 7]),
    ("S", 9 / 5, [5 / 9]),
    ("S", 2, [1 / 2]),
    ("M", 1 / 4, []),
    ("M", 1 / 2, []),
    ("M", 2 / 3, [3 / 4]),
    ("M", 3 / 4, [2 / 3]),
    ("M", 5 / 4, [2 / 5]),
    ("M", 4 / 3, [3 / 8]),
    ("M", 3 / 2, [1 / 3]),
    ("M", 5 / 3, [3 / 10, 9 / 10]),
    ("M", 7 / 4, [2 / 7, 6 / 7]),
    ("M", 2, [1 / 4, 3 / 4]),
]


class TestInterfaceGraph(unittest.TestCase):
    def test_laplacian_and_mass(self):
        graph = InterfaceGraph.from_edges([(0, 0), (1, 0), (1.5, 0)], [(0, 1), (1, 2)])
        np.testing.assert_allclose(
            graph_laplacian(graph).toarray(),
            [[1.0, -1.0, 0.0], [-1.0, 3.0, -2.0], [0.0, -2.0, 2.0]],
        )
        np.testing.assert_allclose(mass_matrix(graph).diagonal(), [0.5, 0.75, 0.25])

    def test_unit_edge(self):
        graph = InterfaceGraph.from_edges([(0, 0), (1, 0)], [(0, 1)], dirichlet=[True, False])
        result = poincare_constant(graph_laplacian(graph), mass_matrix(graph))
        self.assertTrue(result.finite)
        self.assertAlmostEqual(result.D, 0.5, places=12)

    def test_floating_interface(self):
        _d, mesh, dofmap, _c, _s = build_problem(SLIT, h=0.2)
        graph = interface_graph(mesh, dofmap)
        result = poincare_constant(graph_laplacian(graph), mass_matrix(graph))
        self.assertFalse(result.finite)
        self.assertEqual(len(result.floating_components), 1)

    def test_poincare_constant_stable_under_refinement(self):
        _d, mesh, _dm, _c, _s = build_problem(CROSSING, h=0.125)
        values = []
        for m in (mesh, refine(mesh)):
            graph = interface_graph(m, build_dofmap(m))
            values.append(poincare_constant(graph_laplacian(graph), mass_matrix(graph)).D)
        self.assertLessEqual(abs(values[1] - values[0]), 0.1 * values[0])
        # four arms of length 1/2 clamped at the boundary: D tends to 1 / pi^2
        self.assertAlmostEqual(values[1], 1.0 / math.pi ** 2, delta=0.01)

    def test_interface_block_is_laplacian(self):
        _d, mesh, dofmap, _c, system = build_problem(b_iface=0.0)
        L = graph_laplacian(interface_graph(mesh, dofmap))
        np.testing.assert_allclose(
            system.A11.toarray(), L.toarray(), atol=1e-14 * abs(L).max()
        )


class TestSpectralEquivalence(unittest.TestCase):
    def _bounds(self, a_iface, b_iface):
        _d, mesh, dofmap, _c, system = build_problem(a_iface=a_iface, b_iface=b_iface)
        graph = interface_graph(mesh, dofmap)
        op = factor_bulk(system)
        return spectral_equivalence(op, graph_laplacian(graph), mass_matrix(graph))

    def test_uncoupled_unit_conductivity(self):
        bounds = self._bounds(1.0, 0.0)
        self.assertAlmostEqual(bounds.c1, 1.0, delta=1e-12)
        self.assertAlmostEqual(bounds.c2, 1.0, delta=1e-12)
        self.assertTrue(bounds.holds)

    def test_uncoupled_scaling(self):
        bounds = self._bounds(2.0, 0.0)
        self.assertAlmostEqual(bounds.c1, 2.0, delta=1e-11)
        self.assertAlmostEqual(bounds.c2, 2.0, delta=1e-11)

    def test_moderate_coupling(self):
        bounds = self._bounds(1.0, 1.0)
        self.assertGreater(bounds.c1, 0)
        self.assertLessEqual(bounds.c1, bounds.c2)
        self.assertGreater(bounds.c2, 1.0)
        # the coupling acts on both sides of every interface edge
        self.assertLessEqual(bounds.c2, 1.0 + 2.0 * bounds.D + 1e-8)
        self.assertAlmostEqual(bounds.bound, 1.0 + bounds.D)

    def test_size_mismatch(self):
        _d, mesh, dofmap, _c, system = build_problem()
        graph = InterfaceGraph.from_edges([(0, 0), (1, 0)], [(0, 1)])
        with self.assertRaises(AnalysisException):
            spectral_equivalence(factor_bulk(system), graph_laplacian(graph), D=1.0)

    def test_laplacian_not_positive_definite(self):
        _d, mesh, dofmap, _c, system = build_problem()
        L = graph_laplacian(interface_graph(mesh, dofmap))
        with self.assertRaises(AnalysisException):
            spectral_equivalence(factor_bulk(system), -L, D=1.0)


class TestCoercivityWalk(unittest.TestCase):
    def test_empty(self):
        result = coercivity_walk(build_arrangement())
        self.assertEqual(result.walk, (("I", 0),))
        self.assertEqual(result.N, 0)
        self.assertTrue(result.success)

    def test_crossing(self):
        domain = build_arrangement(segments=CROSSING)
        result = coercivity_walk(domain)
        self.assertTrue(result.success)
        self.assertEqual(len(set(result.walk)), 8)
        self.assertEqual(result.walk[-1], ("I", 0))
        self.assertEqual(result.N, sum(1 for kind, _i in result.walk if kind == "J"))
        for first, second in zip(result.walk, result.walk[1:]):
            if first[0] == second[0]:
                continue
            pair = (first[1], second[1]) if first[0] == "I" else (second[1], first[1])
            self.assertIn(pair, domain.E0)

    def test_missing_adjacency(self):
        domain = build_arrangement(segments=CROSSING)
        e0 = {(i, j) for i, j in domain.E0 if j != 0}
        result = coercivity_walk(domain, e0=e0)
        self.assertFalse(result.success)
        self.assertEqual(result.unreachable_segments, (0,))
        self.assertEqual(result.unreachable_regions, ())


class TestExponents(unittest.TestCase):
    def test_exponent_table(self):
        for kind, factor, expected in _EXPONENT_CASES:
            result = singular_exponents(factor * math.pi, kind)
            self.assertEqual(len(result.lambdas), len(expected), (kind, factor))
            np.testing.assert_allclose(result.lambdas, expected, rtol=0, atol=1e-14)

    def test_from_boundary_pattern(self):
        result = singular_exponents(1.5 * math.pi, bc="DR")
        np.testing.assert_allclose(result.lambdas, [1 / 3], atol=1e-14)
        self.assertAlmostEqual(result.sobolev_index, 4 / 3)
        self.assertEqual(singular_exponents(math.pi / 2, bc="DD").sobolev_index, 2.0)

    def test_convex_dirichlet_corner(self):
        for factor in (1 / 6, 1 / 4, 1 / 2, 3 / 4, 0.99):
            self.assertEqual(singular_exponents(factor * math.pi, "S").lambdas, [])

    def test_slit_tip_warns(self):
        result = singular_exponents(2 * math.pi, "S")
        self.assertEqual(len(result.warnings), 2)

    def test_invalid(self):
        with self.assertRaises(AnalysisException):
            singular_exponents(math.pi, "M")
        with self.assertRaises(AnalysisException):
            singular_exponents(0.0, "S")
        with self.assertRaises(AnalysisException):
            singular_exponents(1.0, bc="DX")
        with self.assertRaises(AnalysisException):
            singular_exponents(1.0)


class TestCorners(unittest.TestCase):
    def test_square(self):
        corners = corner_classification(build_arrangement())
        self.assertEqual(len(corners), 4)
        for corner in corners:
            self.assertEqual(corner.pieces, "DD")
            self.assertAlmostEqual(corner.omega, math.pi / 2)
        self.assertEqual(predicted_rate(corners), 1.0)

    def test_slit_tips(self):
        corners = corner_classification(build_arrangement(segments=SLIT))
        tips = [c for c in corners if c.tip]
        self.assertEqual(len(tips), 2)
        for corner in tips:
            self.assertEqual(corner.pieces, "RR")
            self.assertAlmostEqual(corner.exponents.lambdas[0], 0.5, places=14)
        self.assertAlmostEqual(predicted_rate(corners), 0.5, places=14)

    def test_crossing(self):
        corners = corner_classification(build_arrangement(segments=CROSSING))
        self.assertEqual(predicted_rate(corners), 1.0)
        self.assertIn("DR", {c.pieces for c in corners} | {c.pieces[::-1] for c in corners})


class TestStatistics(unittest.TestCase):

    _working_path = pathlib.Path("./tests/data_tmp").resolve()

    def test_network_statistics(self):
        _d, mesh, _dm, _c, _s = build_problem(h=0.25)
        stats = network_statistics(mesh, 0.5)
        self.assertEqual(stats["interface_edges"], len(mesh.interface_edges))
        self.assertLessEqual(stats["max_edge_length"], 0.25 + 1e-12)
        self.assertAlmostEqual(stats["cell_length_mean"], 0.5, places=12)
        self.assertEqual(stats["max_cell_components"], 1)
        empty = network_statistics(build_problem([], h=0.5)[1], 0.5)
        self.assertEqual(empty["interface_edges"], 0)

    def test_condition_number(self):
        _d, _m, _dm, _c, system = build_problem(h=0.5)
        self.assertGreater(condition_number(system), 1.0)

    def test_write_report(self):
        shutil.rmtree(self._working_path, ignore_errors=True)
        self._working_path.mkdir(parents=True)
        write_report(
            self._working_path / "diagnostics.txt",
            [("D", 0.5), ("N", 3)],
            header_lines=["geometry=chords:8"],
        )
        content = _read_content(self._working_path / "diagnostics.txt")
        self.assertIn("# geometry=chords:8", content)
        self.assertIn("D = 0.5", content)
        self.assertIn("N = 3", content)
