# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Planar arrangement of straight interface segments in a convex polygon.

The arrangement graph holds the boundary pieces of the polygon and the
fully split interface pieces. Bulk regions are the bounded faces of that
graph, found by a half-edge traversal; components that do not touch the
rest of the graph become holes of the face that contains them.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .config import _DEFAULT_SNAP_FACTOR, _UNIT_SQUARE
from .exception import GeometryException
from .log import logger
from .tools import (
    _read_content,
    cross2,
    orient,
    point_segment_distance,
    points_in_polygon,
    polygon_signed_area,
)


@dataclass(frozen=True)
class Segment2D:
    a: tuple
    b: tuple

    def __post_init__(self):
        a = (float(self.a[0]), float(self.a[1]))
        b = (float(self.b[0]), float(self.b[1]))
        if a == b:
            raise GeometryException("Segment %s - %s has zero length" % (a, b))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self):
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


@dataclass(frozen=True)
class InterfaceSegment:
    index: int
    vertices: tuple
    a: tuple
    b: tuple
    # (region left of a->b, region right of a->b); equal on a slit
    regions: tuple

    @property
    def length(self):
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


@dataclass(frozen=True)
class BulkRegion:
    index: int
    outer: tuple
    holes: tuple
    area: float


@dataclass(frozen=True)
class Junction:
    index: int
    vertex: int
    point: tuple


@dataclass(frozen=True, eq=False)
class MixedDomain:
    polygon: np.ndarray
    vertices: np.ndarray
    snap_tol: float
    diameter: float
    boundary_edges: tuple
    interface_segments: tuple
    bulk_regions: tuple
    junction_points: tuple
    E0: frozenset
    E1: frozenset
    free_tips: tuple
    side_region: dict

    @property
    def polygon_area(self):
        return polygon_signed_area(self.polygon)

    @property
    def interface_length(self):
        return sum(x.length for x in self.interface_segments)

    @property
    def boundary_vertices(self):
        return frozenset(v for edge in self.boundary_edges for v in edge)


def load_segments(file_path):
    """Read ``x1 y1 x2 y2`` lines; ``#`` starts a comment."""
    segments = []
    for line_number, line in enumerate(_read_content(file_path).splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4:
            raise GeometryException(
                "%s:%d: expected 'x1 y1 x2 y2', got '%s'"
                % (file_path, line_number, line),
                index=len(segments),
            )
        try:
            x1, y1, x2, y2 = (float(x) for x in fields)
        except ValueError:
            raise GeometryException(
                "%s:%d: non numeric value in '%s'" % (file_path, line_number, line),
                index=len(segments),
            )
        try:
            segments.append(Segment2D((x1, y1), (x2, y2)))
        except GeometryException as e:
            raise GeometryException(
                "%s:%d: %s" % (file_path, line_number, e), index=len(segments)
            )
    logger.debug("Read %d segments from %s" % (len(segments), file_path))
    return segments


def _validate_polygon(polygon):
    poly = np.asarray(polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise GeometryException("The domain polygon needs at least 3 vertices")
    if polygon_signed_area(poly) < 0:
        poly = poly[::-1].copy()
    diameter = float(
        np.max(np.linalg.norm(poly[:, None, :] - poly[None, :, :], axis=2))
    )
    if diameter == 0.0:
        raise GeometryException("The domain polygon is degenerate")
    turns = orient(np.roll(poly, 1, axis=0), poly, np.roll(poly, -1, axis=0))
    tol = 1e-12 * diameter ** 2
    if np.any(turns < -tol):
        raise GeometryException("The domain polygon is not convex")
    poly = poly[turns > tol]
    if len(poly) < 3 or polygon_signed_area(poly) <= tol:
        raise GeometryException("The domain polygon is degenerate")
    return poly, diameter


def _polygon_edges_of_point(point, polygon, snap_tol):
    """Polygon edges passing within ``snap_tol`` of ``point``."""
    distances = point_segment_distance(
        point, polygon, np.roll(polygon, -1, axis=0)
    )[0]
    return set(np.flatnonzero(distances <= snap_tol).tolist()), distances


def _snap_endpoint(point, polygon, snap_tol, index):
    point = np.asarray(point, dtype=float)
    starts = polygon
    ends = np.roll(polygon, -1, axis=0)
    outside = orient(starts, ends, point[None, :])
    edge_lengths = np.linalg.norm(ends - starts, axis=1)
    # orient() is twice the area, distance to the edge line is area/length
    if np.any(outside / edge_lengths < -snap_tol):
        raise GeometryException(
            "Segment %d has an endpoint outside the domain: %s"
            % (index, tuple(point)),
            index=index,
        )
    edges, distances = _polygon_edges_of_point(point, polygon, snap_tol)
    if not edges:
        return point, set()
    corner_distances = np.linalg.norm(polygon - point, axis=1)
    corner = int(np.argmin(corner_distances))
    if corner_distances[corner] <= snap_tol:
        n = len(polygon)
        return polygon[corner].copy(), {(corner - 1) % n, corner}
    edge = int(np.argmin(distances))
    a, b = starts[edge], ends[edge]
    d = b - a
    t = np.clip(np.dot(point - a, d) / np.dot(d, d), 0.0, 1.0)
    return a + t * d, {edge}


def _canonical(a, b):
    if (a[0], a[1]) > (b[0], b[1]):
        return b, a
    return a, b


def _components(size, pairs):
    """Connected component label of each of ``size`` nodes joined by ``pairs``."""
    pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(size, size)
    )
    return connected_components(graph, directed=False)[1]


def _merge_collinear(segments, snap_tol):
    """Merge overlapping or touching collinear segments."""
    count = len(segments)
    if count < 2:
        return list(segments)
    pairs = []
    for i in range(count):
        a_i, b_i = segments[i]
        d_i = (b_i - a_i) / np.linalg.norm(b_i - a_i)
        for j in range(i + 1, count):
            a_j, b_j = segments[j]
            if (
                abs(cross2(d_i, a_j - a_i)) <= snap_tol
                and abs(cross2(d_i, b_j - a_i)) <= snap_tol
            ):
                pairs.append((i, j))
    groups = {}
    for i, label in enumerate(_components(count, pairs).tolist()):
        groups.setdefault(label, []).append(i)

    merged = []
    for members in groups.values():
        if len(members) == 1:
            merged.append(segments[members[0]])
            continue
        origin, end = segments[members[0]]
        direction = (end - origin) / np.linalg.norm(end - origin)
        intervals = []
        for i in members:
            a, b = segments[i]
            t_a, t_b = np.dot(a - origin, direction), np.dot(b - origin, direction)
            # endpoints ordered along the shared direction, not lexicographically
            if t_b < t_a:
                t_a, t_b, a, b = t_b, t_a, b, a
            intervals.append((t_a, t_b, a, b))
        intervals.sort(key=lambda x: (x[0], x[1]))
        current = list(intervals[0])
        for start, stop, a, b in intervals[1:]:
            if start <= current[1] + snap_tol:
                if stop > current[1]:
                    current[1], current[3] = stop, b
            else:
                merged.append((current[2], current[3]))
                current = [start, stop, a, b]
        merged.append((current[2], current[3]))
    merged = [_canonical(a, b) for a, b in merged]
    merged.sort(key=lambda x: (x[0][0], x[0][1], x[1][0], x[1][1]))
    return merged


def _cluster_points(coords, priorities, snap_tol):
    """Identify points closer than ``snap_tol``; returns point -> vertex."""
    labels = _components(len(coords), sorted(cKDTree(coords).query_pairs(snap_tol)))
    clusters = {}
    for i, label in enumerate(labels.tolist()):
        clusters.setdefault(label, []).append(i)
    representative = {}
    for members in clusters.values():
        best = min(
            members, key=lambda i: (priorities[i], coords[i][0], coords[i][1])
        )
        for i in members:
            representative[i] = best
    chosen = sorted(
        set(representative.values()), key=lambda i: (coords[i][0], coords[i][1])
    )
    vertex_of_point = {p: v for v, p in enumerate(chosen)}
    point_to_vertex = [vertex_of_point[representative[i]] for i in range(len(coords))]
    return np.array([coords[i] for i in chosen]), point_to_vertex


def _chain_edges(entries, point_to_vertex):
    """Consecutive vertex pairs along a segment sorted by parameter."""
    entries = sorted(entries)
    chain = []
    for _t, point in entries:
        vertex = point_to_vertex[point]
        if not chain or chain[-1] != vertex:
            chain.append(vertex)
    return list(zip(chain[:-1], chain[1:]))


def _merge_straight_vertices(vertices, interface_edges, boundary_vertices, tol):
    """Remove interior vertices joining exactly two collinear interface edges."""
    edges = set(interface_edges)
    while True:
        adjacency = {}
        for u, v in edges:
            adjacency.setdefault(u, []).append(v)
            adjacency.setdefault(v, []).append(u)
        straight = None
        for vertex in sorted(adjacency):
            neighbors = adjacency[vertex]
            if len(neighbors) != 2 or vertex in boundary_vertices:
                continue
            u, w = neighbors
            du = vertices[u] - vertices[vertex]
            dw = vertices[w] - vertices[vertex]
            sine = cross2(du, dw) / (np.linalg.norm(du) * np.linalg.norm(dw))
            if abs(sine) * min(np.linalg.norm(du), np.linalg.norm(dw)) <= tol and (
                np.dot(du, dw) < 0
            ):
                straight = (vertex, u, w)
                break
        if straight is None:
            return sorted(edges)
        vertex, u, w = straight
        edges.discard((min(u, vertex), max(u, vertex)))
        edges.discard((min(w, vertex), max(w, vertex)))
        edges.add((min(u, w), max(u, w)))


def _face_cycles(vertices, edges):
    """Half-edge traversal; the face of a half-edge lies on its left."""
    neighbors = {}
    for u, v in edges:
        neighbors.setdefault(u, []).append(v)
        neighbors.setdefault(v, []).append(u)
    order = {}
    for vertex, items in neighbors.items():
        angles = [
            math.atan2(
                vertices[x][1] - vertices[vertex][1],
                vertices[x][0] - vertices[vertex][0],
            )
            for x in items
        ]
        ranked = [x for _a, x in sorted(zip(angles, items))]
        neighbors[vertex] = ranked
        order[vertex] = {x: i for i, x in enumerate(ranked)}

    def _next(u, v):
        ranked = neighbors[v]
        return v, ranked[(order[v][u] - 1) % len(ranked)]

    visited = set()
    cycles = []
    for u, v in sorted(edges):
        for start in ((u, v), (v, u)):
            if start in visited:
                continue
            cycle = []
            half_edge = start
            while half_edge not in visited:
                visited.add(half_edge)
                cycle.append(half_edge)
                half_edge = _next(*half_edge)
            cycles.append(cycle)
    return cycles


def _rotate_to_min(cycle_vertices):
    start = cycle_vertices.index(min(cycle_vertices))
    return tuple(cycle_vertices[start:] + cycle_vertices[:start])


def build_arrangement(polygon=None, segments=(), snap_tol=None):
    """Split segments at all intersections and compute the bulk regions.

    :param polygon: convex polygon, unit square when None
    :param segments: iterable of :class:`Segment2D` or point pairs
    :param snap_tol: identification distance, default relative to the
        polygon diameter
    """
    polygon, diameter = _validate_polygon(
        _UNIT_SQUARE if polygon is None else polygon
    )
    if snap_tol is None:
        snap_tol = _DEFAULT_SNAP_FACTOR * diameter
    if snap_tol <= 0:
        raise GeometryException("snap_tol must be positive")
    n_corners = len(polygon)

    kept = []
    for index, segment in enumerate(segments):
        if not isinstance(segment, Segment2D):
            try:
                segment = Segment2D(*segment)
            except GeometryException:
                raise GeometryException(
                    "Segment %d has zero length" % index, index=index
                )
        a, edges_a = _snap_endpoint(segment.a, polygon, snap_tol, index)
        b, edges_b = _snap_endpoint(segment.b, polygon, snap_tol, index)
        if np.linalg.norm(b - a) <= snap_tol:
            raise GeometryException(
                "Segment %d is degenerate after snapping" % index, index=index
            )
        if edges_a & edges_b:
            logger.warning(
                "Segment %d lies on the domain boundary and is ignored" % index
            )
            continue
        kept.append(_canonical(a, b))
    kept.sort(key=lambda x: (x[0][0], x[0][1], x[1][0], x[1][1]))
    interfaces = _merge_collinear(kept, snap_tol)
    if len(interfaces) < len(kept):
        logger.info(
            "%d collinear overlapping segments merged into %d"
            % (len(kept), len(interfaces))
        )

    # Candidate points: corners first (priority 0), then boundary points (1)
    coords, priorities = [], []

    def _add_point(point, priority):
        coords.append((float(point[0]), float(point[1])))
        priorities.append(priority)
        return len(coords) - 1

    corner_points = [_add_point(p, 0) for p in polygon]
    boundary_entries = [
        [(0.0, corner_points[e]), (1.0, corner_points[(e + 1) % n_corners])]
        for e in range(n_corners)
    ]
    iface_entries = []
    starts = np.array([s[0] for s in interfaces]).reshape(-1, 2)
    ends = np.array([s[1] for s in interfaces]).reshape(-1, 2)
    for s, (a, b) in enumerate(interfaces):
        entries = []
        for t, p in ((0.0, a), (1.0, b)):
            edges, _distances = _polygon_edges_of_point(p, polygon, snap_tol)
            point = _add_point(p, 1 if edges else 2)
            entries.append((t, point))
            for e in edges:
                c0, c1 = polygon[e], polygon[(e + 1) % n_corners]
                te = np.dot(p - c0, c1 - c0) / np.dot(c1 - c0, c1 - c0)
                boundary_entries[e].append((float(te), point))
        iface_entries.append(entries)

    count = len(interfaces)
    if count > 1:
        directions = ends - starts
        lengths = np.linalg.norm(directions, axis=1)
        # endpoints touching another segment (T-junctions)
        endpoints = np.concatenate([starts, ends])
        touching = point_segment_distance(endpoints, starts, ends) <= snap_tol
        for p, s in zip(*np.nonzero(touching)):
            owner = p % count
            if owner == s:
                continue
            t = np.dot(endpoints[p] - starts[s], directions[s]) / lengths[s] ** 2
            point = iface_entries[owner][p // count][1]
            iface_entries[s].append((float(t), point))
        # proper crossings
        denom = cross2(directions[:, None, :], directions[None, :, :])
        offset = starts[None, :, :] - starts[:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = cross2(offset, directions[None, :, :]) / denom
            w = cross2(offset, directions[:, None, :]) / denom
        proper = (
            (np.abs(denom) > 1e-14 * lengths[:, None] * lengths[None, :])
            & (t * lengths[:, None] > snap_tol)
            & ((1.0 - t) * lengths[:, None] > snap_tol)
            & (w * lengths[None, :] > snap_tol)
            & ((1.0 - w) * lengths[None, :] > snap_tol)
        )
        proper = np.triu(proper, k=1)
        for s, r in zip(*np.nonzero(proper)):
            point = _add_point(starts[s] + t[s, r] * directions[s], 2)
            iface_entries[s].append((float(t[s, r]), point))
            iface_entries[r].append((float(w[s, r]), point))

    vertices, point_to_vertex = _cluster_points(
        np.array(coords), priorities, snap_tol
    )

    boundary_edges = []
    for entries in boundary_entries:
        boundary_edges.extend(_chain_edges(entries, point_to_vertex))
    boundary_keys = {(min(u, v), max(u, v)) for u, v in boundary_edges}
    boundary_vertices = {v for edge in boundary_edges for v in edge}
    interface_edges = set()
    for entries in iface_entries:
        for u, v in _chain_edges(entries, point_to_vertex):
            key = (min(u, v), max(u, v))
            if key not in boundary_keys:
                interface_edges.add(key)
    interface_edges = _merge_straight_vertices(
        vertices, interface_edges, boundary_vertices, snap_tol
    )

    # Drop vertices left unused by the straight-vertex merge
    used = sorted(
        {v for edge in boundary_edges for v in edge}
        | {v for edge in interface_edges for v in edge}
    )
    renumber = {old: new for new, old in enumerate(used)}
    vertices = vertices[used]
    boundary_edges = [(renumber[u], renumber[v]) for u, v in boundary_edges]
    interface_edges = sorted(
        (min(renumber[u], renumber[v]), max(renumber[u], renumber[v]))
        for u, v in interface_edges
    )
    boundary_vertices = {v for edge in boundary_edges for v in edge}

    all_edges = sorted(
        {(min(u, v), max(u, v)) for u, v in boundary_edges} | set(interface_edges)
    )
    cycles = _face_cycles(vertices, all_edges)

    component_of = _components(len(vertices), all_edges).tolist()
    boundary_component = component_of[boundary_edges[0][0]]

    # the unbounded cycle of a component is clockwise (or flat for a tree),
    # every other cycle is a bounded face, however small
    areas = [polygon_signed_area(vertices[[u for u, _v in c]]) for c in cycles]
    outer_cycle = {}
    for index, cycle in enumerate(cycles):
        component = component_of[cycle[0][0]]
        best = outer_cycle.get(component)
        if best is None or areas[index] < areas[best]:
            outer_cycle[component] = index
    faces, holes = [], []
    for index, cycle in enumerate(cycles):
        component = component_of[cycle[0][0]]
        if outer_cycle[component] != index:
            faces.append((cycle, areas[index], component))
        elif component != boundary_component:
            holes.append((cycle, areas[index], component))
    tiny = [area for _c, area, _x in faces if area <= snap_tol * diameter]
    if tiny:
        logger.warning(
            "%d bulk regions are smaller than %.3g (smallest %.3g),"
            " they sit between nearly concurrent interfaces"
            % (len(tiny), snap_tol * diameter, min(tiny))
        )

    faces.sort(key=lambda x: _rotate_to_min([u for u, _v in x[0]]))
    face_holes = [[] for _x in faces]
    for cycle, area, component in holes:
        point = vertices[cycle[0][0]]
        best = None
        for f, (outer, outer_area, outer_component) in enumerate(faces):
            if outer_component == component:
                continue
            ring = vertices[[u for u, _v in outer]]
            if points_in_polygon(point, ring)[0] and (
                best is None or outer_area < faces[best][1]
            ):
                best = f
        if best is None:
            raise GeometryException(
                "No bulk region contains the interface component at %s"
                % (tuple(point),)
            )
        face_holes[best].append((cycle, area))

    side_region = {}
    regions = []
    for i, ((outer, area, _component), hole_list) in enumerate(zip(faces, face_holes)):
        hole_list.sort(key=lambda x: _rotate_to_min([u for u, _v in x[0]]))
        for cycle in [outer] + [h for h, _a in hole_list]:
            for half_edge in cycle:
                side_region[half_edge] = i
        regions.append(
            BulkRegion(
                index=i,
                outer=tuple(u for u, _v in outer),
                holes=tuple(tuple(u for u, _v in h) for h, _a in hole_list),
                area=area + sum(a for _h, a in hole_list),
            )
        )

    segments_j = []
    interface_degree = {}
    for j, (u, v) in enumerate(interface_edges):
        segments_j.append(
            InterfaceSegment(
                index=j,
                vertices=(u, v),
                a=tuple(vertices[u]),
                b=tuple(vertices[v]),
                regions=(side_region[(u, v)], side_region[(v, u)]),
            )
        )
        interface_degree.setdefault(u, []).append(j)
        interface_degree.setdefault(v, []).append(j)

    junctions, E1 = [], set()
    free_tips = []
    for vertex in sorted(interface_degree):
        if vertex in boundary_vertices:
            continue
        incident = interface_degree[vertex]
        if len(incident) == 1:
            free_tips.append(vertex)
            continue
        k = len(junctions)
        junctions.append(Junction(k, vertex, tuple(vertices[vertex])))
        E1.update((j, k) for j in incident)
    E0 = frozenset((i, s.index) for s in segments_j for i in set(s.regions))

    domain = MixedDomain(
        polygon=polygon,
        vertices=vertices,
        snap_tol=snap_tol,
        diameter=diameter,
        boundary_edges=tuple(boundary_edges),
        interface_segments=tuple(segments_j),
        bulk_regions=tuple(regions),
        junction_points=tuple(junctions),
        E0=E0,
        E1=frozenset(E1),
        free_tips=tuple(free_tips),
        side_region=side_region,
    )
    logger.info(
        "Arrangement: %d bulk regions, %d interface segments, %d junctions,"
        " %d free tips"
        % (len(regions), len(segments_j), len(junctions), len(free_tips))
    )
    return domain


def boundary_touching_regions(d):
    """Regions sharing a boundary piece of positive length with the polygon."""
    return {d.side_region[edge] for edge in d.boundary_edges}
