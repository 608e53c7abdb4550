# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

import unittest

import numpy as np

from mixdim_solve.exception import GeometryException
from mixdim_solve.geometry import (
    Segment2D,
    boundary_touching_regions,
    build_arrangement,
    load_segments,
)
from mixdim_solve.harness import gen_finite_segments, gen_infinite_chords
from mixdim_solve.mesh import triangulate

from .common import CROSSING, ENCLOSED_TRIANGLE, SLIT, T_JUNCTION, _template_path


class TestArrangement(unittest.TestCase):
    def test_empty_arrangement(self):
        domain = build_arrangement()
        self.assertEqual(len(domain.bulk_regions), 1)
        self.assertEqual(len(domain.interface_segments), 0)
        self.assertEqual(len(domain.E0), 0)
        self.assertAlmostEqual(domain.bulk_regions[0].area, 1.0, places=12)

    def test_crossing_chords(self):
        domain = build_arrangement(segments=CROSSING)
        self.assertEqual(len(domain.bulk_regions), 4)
        self.assertEqual(len(domain.interface_segments), 4)
        self.assertEqual(len(domain.junction_points), 1)
        self.assertEqual(domain.junction_points[0].point, (0.5, 0.5))
        self.assertEqual(len(domain.E0), 8)
        self.assertEqual(len(domain.E1), 4)
        for region in domain.bulk_regions:
            self.assertAlmostEqual(region.area, 0.25, places=12)
        self.assertEqual(boundary_touching_regions(domain), {0, 1, 2, 3})

    def test_area_and_length_conservation(self):
        segments = CROSSING + [((0.0, 0.0), (1.0, 0.8)), ((0.2, 0.1), (0.35, 0.9))]
        domain = build_arrangement(segments=segments)
        total_area = sum(r.area for r in domain.bulk_regions)
        self.assertLess(abs(total_area - domain.polygon_area), 1e-12)
        expected = sum(Segment2D(*s).length for s in segments)
        self.assertLess(abs(domain.interface_length - expected), 1e-12 * expected)

    def test_t_junction(self):
        domain = build_arrangement(segments=T_JUNCTION)
        self.assertEqual(len(domain.bulk_regions), 3)
        self.assertEqual(len(domain.interface_segments), 3)
        self.assertEqual(len(domain.junction_points), 1)
        self.assertEqual(len(domain.free_tips), 0)

    def test_slit_is_a_hole(self):
        domain = build_arrangement(segments=SLIT)
        self.assertEqual(len(domain.bulk_regions), 1)
        self.assertEqual(len(domain.bulk_regions[0].holes), 1)
        self.assertAlmostEqual(domain.bulk_regions[0].area, 1.0, places=12)
        self.assertEqual(len(domain.free_tips), 2)
        self.assertEqual(domain.interface_segments[0].regions, (0, 0))

    def test_slit_example(self):
        domain = build_arrangement(segments=[((0.4, 0.5), (0.6, 0.5))])
        counts = (
            len(domain.bulk_regions),
            len(domain.interface_segments),
            len(domain.free_tips),
            len(domain.E0),
        )
        self.assertEqual(counts, (1, 1, 2, 1))

    def test_enclosed_triangle(self):
        domain = build_arrangement(segments=ENCLOSED_TRIANGLE)
        self.assertEqual(len(domain.bulk_regions), 2)
        self.assertEqual(boundary_touching_regions(domain), {0})
        self.assertAlmostEqual(domain.bulk_regions[1].area, 0.18, places=12)
        self.assertAlmostEqual(domain.bulk_regions[0].area, 0.82, places=12)
        self.assertEqual(len(domain.bulk_regions[0].holes), 1)
        for segment in domain.interface_segments:
            self.assertEqual(sorted(segment.regions), [0, 1])

    def test_reordering_is_deterministic(self):
        segments = gen_finite_segments(15, 0.5, seed=3)
        shuffled = [Segment2D(s.b, s.a) for s in reversed(segments)]
        first = build_arrangement(segments=segments)
        second = build_arrangement(segments=shuffled)
        np.testing.assert_array_equal(first.vertices, second.vertices)
        self.assertEqual(
            [s.vertices for s in first.interface_segments],
            [s.vertices for s in second.interface_segments],
        )
        self.assertEqual(
            [r.outer for r in first.bulk_regions], [r.outer for r in second.bulk_regions]
        )
        self.assertEqual(first.E0, second.E0)

    def test_collinear_segments_merged(self):
        domain = build_arrangement(
            segments=[((0.0, 0.5), (0.6, 0.5)), ((0.4, 0.5), (1.0, 0.5))]
        )
        self.assertEqual(len(domain.interface_segments), 1)
        self.assertEqual(len(domain.bulk_regions), 2)

    def test_nearly_vertical_collinear_segments_merged(self):
        # x differs by less than snap_tol, so the endpoints of the second
        # segment are swapped by the lexicographic order
        domain = build_arrangement(
            segments=[((0.5, 0.0), (0.5 + 1e-12, 0.6)), ((0.5, 1.0), (0.5 + 1e-12, 0.4))]
        )
        self.assertEqual(len(domain.interface_segments), 1)
        self.assertEqual(len(domain.bulk_regions), 2)
        self.assertAlmostEqual(domain.interface_length, 1.0, places=9)

    def test_endpoint_snapped_to_boundary(self):
        domain = build_arrangement(segments=[((1e-12, 0.5), (1.0, 0.5))])
        self.assertEqual(len(domain.bulk_regions), 2)
        self.assertEqual(domain.interface_segments[0].a, (0.0, 0.5))

    def test_boundary_segment_ignored(self):
        domain = build_arrangement(segments=[((0.0, 0.0), (1.0, 0.0))])
        self.assertEqual(len(domain.interface_segments), 0)
        self.assertEqual(len(domain.bulk_regions), 1)

    def test_clockwise_polygon_reoriented(self):
        domain = build_arrangement(polygon=[(0, 0), (0, 2), (2, 2), (2, 0)])
        self.assertAlmostEqual(domain.polygon_area, 4.0)

    def test_invalid_input(self):
        with self.assertRaises(GeometryException) as context:
            build_arrangement(segments=[((0.2, 0.2), (0.4, 0.4)), ((0.5, 0.5), (1.5, 0.5))])
        self.assertEqual(context.exception.index, 1)
        with self.assertRaises(GeometryException):
            build_arrangement(polygon=[(0, 0), (1, 0), (0.5, 0.2), (1, 1), (0, 1)])
        with self.assertRaises(GeometryException):
            Segment2D((0.1, 0.1), (0.1, 0.1))


class TestSegmentFile(unittest.TestCase):
    def test_load_segments(self):
        segments = load_segments(_template_path / "crossing.txt")
        self.assertEqual(len(segments), 2)
        self.assertEqual(segments[1], Segment2D((0.5, 0.0), (0.5, 1.0)))

    def test_load_invalid_segments(self):
        with self.assertRaises(GeometryException) as context:
            load_segments(_template_path / "invalid.txt")
        self.assertEqual(context.exception.index, 1)


class TestRandomNetworks(unittest.TestCase):
    def test_infinite_chords(self):
        for seed in range(10):
            domain = build_arrangement(segments=gen_infinite_chords(50, seed))
            total_area = sum(r.area for r in domain.bulk_regions)
            self.assertLess(abs(total_area - 1.0), 1e-12, seed)
            regions = {i for s in domain.interface_segments for i in s.regions}
            self.assertEqual(regions, set(range(len(domain.bulk_regions))), seed)

    def test_sliver_region_kept(self):
        segments = gen_infinite_chords(50, 7)
        with self.assertLogs("mixdim_solve", level="WARNING") as logs:
            domain = build_arrangement(segments=segments)
        self.assertIn("nearly concurrent interfaces", "\n".join(logs.output))
        areas = np.array([r.area for r in domain.bulk_regions])
        self.assertGreater(areas.min(), 0)
        self.assertLessEqual(areas.min(), domain.snap_tol * domain.diameter)
        mesh = triangulate(domain, 0.25)
        np.testing.assert_allclose(mesh.region_areas(), areas, rtol=1e-9, atol=1e-12)
