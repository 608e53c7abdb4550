# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Interface fitted triangulations and their nested red refinement.

The initial mesh is a constrained Delaunay triangulation: every arrangement
edge is pre-split into a chain of pieces not longer than ``h_target``, the
interior is filled with a square lattice of spacing ``h_target``, the point
set is triangulated with qhull, missing constraint pieces are recovered by
edge flips and the result is legalized by Lawson flips that never touch a
constraint. Triangles below the angle floor get their circumcenter
inserted, or split the constraint piece the circumcenter encroaches on.
"""

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, cKDTree

from .config import _DEFAULT_ANGLE_FLOOR, _FILL_CLEARANCE, _MAX_REFINEMENT_ROUNDS
from .exception import MeshException
from .log import logger
from .tools import _write_content, min_distance_to_segments, orient


@dataclass(frozen=True, eq=False)
class FittedMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    triangle_regions: np.ndarray
    interface_edges: np.ndarray
    interface_tags: np.ndarray
    boundary_edges: np.ndarray
    h: float
    domain: object
    level: int = 0
    parent: Optional["FittedMesh"] = None
    child_to_parent: Optional[np.ndarray] = None
    interface_parent: Optional[np.ndarray] = None
    vertex_parents: Optional[np.ndarray] = None

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def boundary_vertices(self):
        return np.unique(self.boundary_edges)

    def areas(self):
        p = self.vertices[self.triangles]
        return 0.5 * orient(p[:, 0], p[:, 1], p[:, 2])

    def edges(self):
        """Unique undirected edges, sorted, as an (E, 2) array."""
        t = self.triangles
        pairs = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        return np.unique(pairs, axis=0)

    def angles(self):
        """Interior angles in degrees, shape (T, 3), angle k at corner k."""
        p = self.vertices[self.triangles]
        result = np.empty((len(p), 3))
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cosine = np.einsum("ij,ij->i", u, v) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
            )
            result[:, k] = np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0)))
        return result

    def min_angle(self):
        return float(self.angles().min()) if len(self.triangles) else 0.0

    def region_areas(self):
        return np.bincount(
            self.triangle_regions,
            weights=self.areas(),
            minlength=len(self.domain.bulk_regions),
        )

    def locate(self, points):
        """Index of a triangle containing each point, -1 when outside."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        p = self.vertices[self.triangles]
        result = np.full(len(points), -1)
        area2 = orient(p[:, 0], p[:, 1], p[:, 2])
        tol = -1e-12
        for start in range(0, len(points), 256):
            x = points[start:start + 256, None, :]
            l0 = orient(p[None, :, 1], p[None, :, 2], x) / area2
            l1 = orient(p[None, :, 2], p[None, :, 0], x) / area2
            inside = (l0 >= tol) & (l1 >= tol) & (1.0 - l0 - l1 >= tol)
            found = inside.any(axis=1)
            result[start:start + 256][found] = inside[found].argmax(axis=1)
        return result

    def barycentric(self, triangles, points):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        p = self.vertices[self.triangles[triangles]]
        area2 = orient(p[:, 0], p[:, 1], p[:, 2])
        l0 = orient(p[:, 1], p[:, 2], points) / area2
        l1 = orient(p[:, 2], p[:, 0], points) / area2
        return np.stack([l0, l1, 1.0 - l0 - l1], axis=1)


class _Triangulation:
    """Mutable triangle soup with a directed-edge index, used for flips."""

    def __init__(self, points, simplices):
        self.points = points
        self.triangles = np.array(simplices, dtype=np.int64).reshape(-1, 3)
        self.left = {}
        for t in range(len(self.triangles)):
            self._register(t)

    def _register(self, t):
        a, b, c = (int(x) for x in self.triangles[t])
        self.left[(a, b)] = t
        self.left[(b, c)] = t
        self.left[(c, a)] = t

    def _unregister(self, t):
        a, b, c = (int(x) for x in self.triangles[t])
        del self.left[(a, b)]
        del self.left[(b, c)]
        del self.left[(c, a)]

    def has_edge(self, u, v):
        return (u, v) in self.left or (v, u) in self.left

    def _apex(self, t, u, v):
        a, b, c = (int(x) for x in self.triangles[t])
        if (a, b) == (u, v):
            return c
        if (b, c) == (u, v):
            return a
        return b

    def _quad(self, u, v):
        p = self._apex(self.left[(u, v)], u, v)
        q = self._apex(self.left[(v, u)], v, u)
        return p, q

    def is_convex(self, u, v):
        p, q = self._quad(u, v)
        pts = self.points
        return orient(pts[u], pts[q], pts[p]) > 0 and orient(pts[q], pts[v], pts[p]) > 0

    def flip(self, u, v):
        t1, t2 = self.left[(u, v)], self.left[(v, u)]
        p, q = self._quad(u, v)
        self._unregister(t1)
        self._unregister(t2)
        self.triangles[t1] = (u, q, p)
        self.triangles[t2] = (v, p, q)
        self._register(t1)
        self._register(t2)
        return p, q

    def _crosses(self, u, v, a, b):
        pts = self.points
        o1 = orient(pts[u], pts[v], pts[a])
        o2 = orient(pts[u], pts[v], pts[b])
        o3 = orient(pts[a], pts[b], pts[u])
        o4 = orient(pts[a], pts[b], pts[v])
        return o1 * o2 < 0 and o3 * o4 < 0

    def crossing_edges(self, u, v):
        t = self.triangles
        edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        edges = edges[edges[:, 0] < edges[:, 1]]
        pts = self.points
        a, b = pts[edges[:, 0]], pts[edges[:, 1]]
        o1 = orient(pts[u], pts[v], a)
        o2 = orient(pts[u], pts[v], b)
        o3 = orient(a, b, pts[u])
        o4 = orient(a, b, pts[v])
        mask = (o1 * o2 < 0) & (o3 * o4 < 0)
        return [(int(x), int(y)) for x, y in edges[mask]]

    def recover(self, u, v):
        """Flip edges crossing (u, v) until it is an edge."""
        if self.has_edge(u, v):
            return
        queue = deque(self.crossing_edges(u, v))
        if not queue:
            raise MeshException(
                "Constraint piece %s - %s can not be recovered"
                % (tuple(self.points[u]), tuple(self.points[v])),
                locations=[tuple(self.points[u]), tuple(self.points[v])],
            )
        budget = 100 * len(queue) ** 2 + 1000
        while queue:
            budget -= 1
            if budget < 0:
                raise MeshException(
                    "Constraint recovery does not terminate near %s"
                    % (tuple(self.points[u]),),
                    locations=[tuple(self.points[u]), tuple(self.points[v])],
                )
            a, b = queue.popleft()
            if not self.is_convex(a, b):
                queue.append((a, b))
                continue
            p, q = self.flip(a, b)
            if self._crosses(u, v, p, q):
                queue.append((p, q))

    def legalize(self, constrained):
        """Lawson flips on every edge that is not constrained."""
        pts = self.points
        stack = [edge for edge in self.left if edge[0] < edge[1]]
        flips = 0
        while stack:
            a, b = stack.pop()
            if (a, b) not in self.left or (b, a) not in self.left:
                continue
            if (min(a, b), max(a, b)) in constrained:
                continue
            p, q = self._quad(a, b)
            if _incircle(pts[a], pts[b], pts[p], pts[q]) <= 0:
                continue
            if not self.is_convex(a, b):
                continue
            self.flip(a, b)
            flips += 1
            stack.extend([(a, q), (q, b), (b, p), (p, a)])
        return flips


def _incircle(a, b, c, d):
    """Positive when d lies strictly inside the circumcircle of ccw (a, b, c)."""
    rows = []
    for p in (a, b, c):
        dx, dy = p[0] - d[0], p[1] - d[1]
        rows.append((dx, dy, dx * dx + dy * dy))
    det = (
        rows[0][0] * (rows[1][1] * rows[2][2] - rows[2][1] * rows[1][2])
        - rows[0][1] * (rows[1][0] * rows[2][2] - rows[2][0] * rows[1][2])
        + rows[0][2] * (rows[1][0] * rows[2][1] - rows[2][0] * rows[1][1])
    )
    scale = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    return det if abs(det) > 1e-10 * scale * scale else 0.0


@dataclass
class _Chain:
    kind: str
    tag: int
    half_edge: tuple
    points: list

    def pieces(self):
        return list(zip(self.points[:-1], self.points[1:]))


def _initial_chains(d, h_target):
    points = [tuple(p) for p in d.vertices]
    chains = []

    def _chain(kind, tag, u, v):
        a, b = d.vertices[u], d.vertices[v]
        count = max(1, int(math.ceil(np.linalg.norm(b - a) / h_target - 1e-9)))
        ids = [u]
        for k in range(1, count):
            points.append(tuple(a + (b - a) * (k / count)))
            ids.append(len(points) - 1)
        ids.append(v)
        chains.append(_Chain(kind, tag, (u, v), ids))

    for u, v in d.boundary_edges:
        _chain("boundary", -1, u, v)
    for segment in d.interface_segments:
        _chain("interface", segment.index, *segment.vertices)
    return points, chains


def _fill_points(d, h_target):
    """Square lattice, clear of every arrangement edge, framing the polygon."""
    low = d.polygon.min(axis=0) - 2 * h_target
    high = d.polygon.max(axis=0) + 2 * h_target
    xs = low[0] + h_target * np.arange(int(math.ceil((high[0] - low[0]) / h_target)) + 1)
    ys = low[1] + h_target * np.arange(int(math.ceil((high[1] - low[1]) / h_target)) + 1)
    grid = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    starts = [d.vertices[u] for u, _v in d.boundary_edges]
    ends = [d.vertices[v] for _u, v in d.boundary_edges]
    for segment in d.interface_segments:
        starts.append(segment.a)
        ends.append(segment.b)
    clearance = min_distance_to_segments(grid, np.array(starts), np.array(ends))
    return grid[clearance >= _FILL_CLEARANCE * h_target * (1.0 - 1e-9)]


def _inside_polygon(polygon, points):
    starts = polygon
    ends = np.roll(polygon, -1, axis=0)
    result = np.ones(len(points), dtype=bool)
    for a, b in zip(starts, ends):
        result &= orient(a, b, points) > 0
    return result


def _constrained_mesh(d, points, chains, fill):
    """Triangulate constraint points plus fill points; returns mesh arrays."""
    constraint_points = np.array(points, dtype=float)
    n_constraint = len(constraint_points)
    close = cKDTree(constraint_points).query_pairs(d.snap_tol)
    if close:
        locations = sorted({tuple(constraint_points[i]) for pair in close for i in pair})
        raise MeshException(
            "Interfaces pass within %g of each other without intersecting"
            " near %s" % (d.snap_tol, locations[0]),
            locations=locations,
        )
    all_points = np.vstack([constraint_points, fill]) if len(fill) else constraint_points
    delaunay = Delaunay(all_points)
    if len(delaunay.coplanar):
        missing = [tuple(all_points[i]) for i in delaunay.coplanar[:, 0]]
        raise MeshException(
            "Points left out of the triangulation near %s" % (missing[0],),
            locations=missing,
        )
    simplices = delaunay.simplices.copy()
    p = all_points[simplices]
    area2 = orient(p[:, 0], p[:, 1], p[:, 2])
    simplices[area2 < 0] = simplices[area2 < 0][:, [0, 2, 1]]
    scale = float(np.ptp(all_points, axis=0).max())
    simplices = simplices[np.abs(area2) > 1e-14 * scale * scale]

    work = _Triangulation(all_points, simplices)
    constrained = set()
    for chain in chains:
        for u, v in chain.pieces():
            work.recover(u, v)
            constrained.add((min(u, v), max(u, v)))
    flips = work.legalize(constrained)
    for chain in chains:
        for u, v in chain.pieces():
            if not work.has_edge(u, v):
                raise MeshException(
                    "Constraint piece %s - %s lost during legalization"
                    % (tuple(all_points[u]), tuple(all_points[v])),
                    locations=[tuple(all_points[u]), tuple(all_points[v])],
                )
    logger.debug("Constrained Delaunay: %d Lawson flips" % flips)

    triangles = work.triangles
    centroids = all_points[triangles].mean(axis=1)
    kept = np.flatnonzero(_inside_polygon(d.polygon, centroids))
    kept_index = np.full(len(triangles), -1)
    kept_index[kept] = np.arange(len(kept))

    # region seeds from the constraint pieces, flood fill across the others
    seeds = np.full(len(kept), -1)
    for chain in chains:
        eu, ev = chain.half_edge
        for u, v in chain.pieces():
            for directed, half_edge in (((u, v), (eu, ev)), ((v, u), (ev, eu))):
                t = work.left.get(directed)
                if t is None or kept_index[t] < 0 or half_edge not in d.side_region:
                    continue
                region = d.side_region[half_edge]
                if seeds[kept_index[t]] not in (-1, region):
                    raise MeshException(
                        "Triangle next to %s is claimed by two regions"
                        % (tuple(all_points[u]),),
                        locations=[tuple(all_points[u])],
                    )
                seeds[kept_index[t]] = region
    rows, cols = [], []
    for t in kept:
        a, b, c = (int(x) for x in triangles[t])
        for u, v in ((a, b), (b, c), (c, a)):
            if (min(u, v), max(u, v)) in constrained:
                continue
            other = work.left.get((v, u))
            if other is not None and kept_index[other] >= 0:
                rows.append(kept_index[t])
                cols.append(kept_index[other])
    graph = coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(len(kept), len(kept))
    )
    n_components, labels = connected_components(graph, directed=False)
    component_region = np.full(n_components, -1)
    for t in np.flatnonzero(seeds >= 0):
        label = labels[t]
        if component_region[label] not in (-1, seeds[t]):
            location = tuple(centroids[kept[t]])
            raise MeshException(
                "Triangles around %s are connected across an interface" % (location,),
                locations=[location],
            )
        component_region[label] = seeds[t]
    if np.any(component_region < 0):
        location = tuple(centroids[kept[np.argmax(component_region[labels] < 0)]])
        raise MeshException(
            "A group of triangles near %s has no bulk region" % (location,),
            locations=[location],
        )
    regions = component_region[labels]

    used = np.unique(triangles[kept])
    renumber = np.full(len(all_points), -1)
    renumber[used] = np.arange(len(used))
    if np.any(renumber[:n_constraint] < 0):
        raise MeshException("Constraint points were dropped from the mesh")
    iface, tags, boundary = [], [], []
    for chain in chains:
        pieces = [(renumber[u], renumber[v]) for u, v in chain.pieces()]
        if chain.kind == "interface":
            iface.extend(pieces)
            tags.extend([chain.tag] * len(pieces))
        else:
            boundary.extend(pieces)
    return (
        all_points[used],
        renumber[triangles[kept]],
        regions,
        np.array(iface, dtype=np.int64).reshape(-1, 2),
        np.array(tags, dtype=np.int64),
        np.array(boundary, dtype=np.int64).reshape(-1, 2),
        renumber,
    )


def _circumcenters(p):
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    d = 2.0 * orient(a, b, c)
    a2 = np.einsum("ij,ij->i", a, a)
    b2 = np.einsum("ij,ij->i", b, b)
    c2 = np.einsum("ij,ij->i", c, c)
    x = (a2 * (b[:, 1] - c[:, 1]) + b2 * (c[:, 1] - a[:, 1]) + c2 * (a[:, 1] - b[:, 1])) / d
    y = (a2 * (c[:, 0] - b[:, 0]) + b2 * (a[:, 0] - c[:, 0]) + c2 * (b[:, 0] - a[:, 0])) / d
    return np.stack([x, y], axis=1)


def _refine_quality(d, mesh_arrays, points, chains, fill, angle_floor, h_target):
    """Queue Steiner points for bad triangles; returns the new fill."""
    vertices, triangles, _regions, iface, _tags, boundary, renumber = mesh_arrays
    candidate = FittedMesh(
        vertices, triangles, _regions, iface, _tags, boundary, 0.0, d
    )
    angles = candidate.angles()
    bad = np.flatnonzero(angles.min(axis=1) < angle_floor)
    if not len(bad):
        return None
    constraint_keys = {
        (min(u, v), max(u, v)) for u, v in np.concatenate([iface, boundary])
    }
    smallest = angles[bad].argmin(axis=1)
    keep = []
    for t, k in zip(bad, smallest):
        corner = triangles[t]
        x, y, z = int(corner[k]), int(corner[(k + 1) % 3]), int(corner[(k + 2) % 3])
        # an angle between two constraint pieces can not be improved
        if (min(x, y), max(x, y)) in constraint_keys and (
            min(x, z),
            max(x, z),
        ) in constraint_keys:
            continue
        keep.append(t)
    if not keep:
        return None
    keep = np.array(keep)
    centers = _circumcenters(vertices[triangles[keep]])
    shortest = np.min(
        np.linalg.norm(
            vertices[triangles[keep]] - vertices[triangles[keep][:, [1, 2, 0]]], axis=2
        ),
        axis=1,
    )

    piece_index = []
    for c, chain in enumerate(chains):
        for position, (u, v) in enumerate(chain.pieces()):
            piece_index.append((c, position, u, v))
    piece_a = np.array([points[u] for _c, _p, u, _v in piece_index])
    piece_b = np.array([points[v] for _c, _p, _u, v in piece_index])
    mids = 0.5 * (piece_a + piece_b)
    radii = 0.5 * np.linalg.norm(piece_b - piece_a, axis=1)
    min_piece = h_target / 8.0

    existing = cKDTree(np.vstack([np.array(points), fill]) if len(fill) else np.array(points))
    split = {}
    added = []
    order = np.argsort(angles[keep].min(axis=1))
    for i in order:
        center = centers[i]
        encroached = np.flatnonzero(np.linalg.norm(mids - center, axis=1) < radii)
        outside = not _inside_polygon(d.polygon, center[None, :])[0]
        if len(encroached) or outside:
            if not len(encroached):
                distance = np.linalg.norm(mids - center, axis=1) - radii
                encroached = [int(np.argmin(distance))]
            for piece in encroached:
                if 2.0 * radii[piece] >= 2.0 * min_piece:
                    c, position, _u, _v = piece_index[piece]
                    split.setdefault(c, set()).add(position)
            continue
        if existing.query(center)[0] < 1e-3 * shortest[i]:
            continue
        if added and np.min(np.linalg.norm(np.array(added) - center, axis=1)) < 0.5 * shortest[i]:
            continue
        added.append(center)

    if not split and not added:
        return None
    for c, positions in split.items():
        chain = chains[c]
        new_ids = [chain.points[0]]
        for position, (u, v) in enumerate(chain.pieces()):
            if position in positions:
                points.append(tuple(0.5 * (np.array(points[u]) + np.array(points[v]))))
                new_ids.append(len(points) - 1)
            new_ids.append(v)
        chain.points = new_ids
    new_fill = np.vstack([fill] + ([np.array(added)] if added else []))
    if split:
        # fill points may now encroach on the new, shorter pieces
        starts = np.array([points[u] for chain in chains for u, _v in chain.pieces()])
        ends = np.array([points[v] for chain in chains for _u, v in chain.pieces()])
        lengths = np.linalg.norm(ends - starts, axis=1)
        clearance = min_distance_to_segments(new_fill, starts, ends)
        new_fill = new_fill[clearance > 0.25 * lengths.min()]
    logger.debug(
        "Quality refinement: %d bad triangles, %d Steiner points, %d split pieces"
        % (len(bad), len(added), sum(len(x) for x in split.values()))
    )
    return new_fill


def triangulate(d, h_target, angle_floor=None, max_rounds=None):
    """Constrained Delaunay mesh of ``d`` fitted to every interface segment."""
    if not h_target or h_target <= 0:
        raise MeshException("h_target must be positive, got %s" % h_target)
    if angle_floor is None:
        angle_floor = _DEFAULT_ANGLE_FLOOR
    if max_rounds is None:
        max_rounds = _MAX_REFINEMENT_ROUNDS
    points, chains = _initial_chains(d, h_target)
    fill = _fill_points(d, h_target)
    for round_number in range(max_rounds + 1):
        arrays = _constrained_mesh(d, points, chains, fill)
        if round_number == max_rounds:
            break
        new_fill = _refine_quality(
            d, arrays, points, chains, fill, angle_floor, h_target
        )
        if new_fill is None:
            break
        fill = new_fill

    vertices, triangles, regions, iface, tags, boundary, _renumber = arrays
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    h = float(np.max(np.linalg.norm(vertices[edges[:, 0]] - vertices[edges[:, 1]], axis=1)))
    mesh = FittedMesh(
        vertices=vertices,
        triangles=triangles,
        triangle_regions=regions,
        interface_edges=iface,
        interface_tags=tags,
        boundary_edges=boundary,
        h=h,
        domain=d,
    )
    min_angle = mesh.min_angle()
    below = int(np.sum(mesh.angles().min(axis=1) < angle_floor))
    if below:
        logger.warning(
            "%d triangles stay below the %.1f degree floor (min angle %.2f),"
            " they sit at sharp input angles" % (below, angle_floor, min_angle)
        )
    logger.info(
        "Mesh: %d vertices, %d triangles, %d interface edges, h=%.4g,"
        " min angle=%.2f"
        % (mesh.n_vertices, mesh.n_triangles, len(iface), h, min_angle)
    )
    return mesh


def refine(m):
    """Red refinement: every edge bisected, every triangle split in 4."""
    n = m.n_vertices
    t = m.triangles
    pairs = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    mid = n + inverse.reshape(3, len(t)).T
    vertices = np.vstack([m.vertices, 0.5 * (m.vertices[edges[:, 0]] + m.vertices[edges[:, 1]])])
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    mab, mbc, mca = mid[:, 0], mid[:, 1], mid[:, 2]
    children = np.stack(
        [
            np.stack([a, mab, mca], axis=1),
            np.stack([mab, b, mbc], axis=1),
            np.stack([mca, mbc, c], axis=1),
            np.stack([mab, mbc, mca], axis=1),
        ],
        axis=1,
    ).reshape(-1, 3)
    codes = edges[:, 0] * n + edges[:, 1]

    def _split(pieces):
        if not len(pieces):
            return pieces.reshape(-1, 2)
        keys = np.minimum(pieces[:, 0], pieces[:, 1]) * n + np.maximum(pieces[:, 0], pieces[:, 1])
        middle = n + np.searchsorted(codes, keys)
        return np.stack(
            [np.stack([pieces[:, 0], middle], axis=1), np.stack([middle, pieces[:, 1]], axis=1)],
            axis=1,
        ).reshape(-1, 2)

    vertex_parents = np.vstack([np.stack([np.arange(n), np.arange(n)], axis=1), edges])
    fine = FittedMesh(
        vertices=vertices,
        triangles=children,
        triangle_regions=np.repeat(m.triangle_regions, 4),
        interface_edges=_split(m.interface_edges),
        interface_tags=np.repeat(m.interface_tags, 2),
        boundary_edges=_split(m.boundary_edges),
        h=0.5 * m.h,
        domain=m.domain,
        level=m.level + 1,
        parent=m,
        child_to_parent=np.repeat(np.arange(len(t)), 4),
        interface_parent=np.repeat(np.arange(len(m.interface_edges)), 2),
        vertex_parents=vertex_parents,
    )
    logger.debug(
        "Refined mesh level %d: %d vertices, %d triangles"
        % (fine.level, fine.n_vertices, fine.n_triangles)
    )
    return fine


def write_mesh(m, file_path):
    """Plain text export of vertices, triangles and interface edges."""
    lines = [
        "# mixdim-solve mesh, level %d, h=%r" % (m.level, m.h),
        "# vertices %d: index x y" % m.n_vertices,
    ]
    lines += ["%d %r %r" % (i, x, y) for i, (x, y) in enumerate(m.vertices.tolist())]
    lines.append("# triangles %d: index v0 v1 v2 region" % m.n_triangles)
    lines += [
        "%d %d %d %d %d" % (i, a, b, c, r)
        for i, ((a, b, c), r) in enumerate(zip(m.triangles.tolist(), m.triangle_regions.tolist()))
    ]
    lines.append("# interface_edges %d: index v0 v1 segment" % len(m.interface_edges))
    lines += [
        "%d %d %d %d" % (i, a, b, j)
        for i, ((a, b), j) in enumerate(zip(m.interface_edges.tolist(), m.interface_tags.tolist()))
    ]
    lines.append("# boundary_vertices %d" % len(m.boundary_vertices))
    lines += ["%d" % v for v in m.boundary_vertices.tolist()]
    _write_content(file_path, "\n".join(lines) + "\n")
    logger.info("Mesh written: %s" % file_path)
