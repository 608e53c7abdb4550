# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Degrees of freedom of the bulk and interface spaces.

Bulk functions are continuous inside a bulk region and may jump across
interface edges: a mesh vertex carries one bulk dof per angular fan of
triangles, where fans are separated by interface edges. Interface
functions carry one dof per interface vertex, shared by every segment
meeting at a junction.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .exception import MeshException
from .log import logger
from .tools import evaluate_point_function


@dataclass(frozen=True, eq=False)
class DofMap:
    corner_dof: np.ndarray
    bulk_vertex: np.ndarray
    bulk_fan: np.ndarray
    bulk_region: np.ndarray
    iface_vertex: np.ndarray
    vertex_iface: np.ndarray
    trace_bulk: np.ndarray
    trace_iface: np.ndarray
    trace_triangles: np.ndarray
    dirichlet_bulk: np.ndarray
    dirichlet_iface: np.ndarray
    bulk_free: np.ndarray
    iface_free: np.ndarray
    region_slices: tuple

    @property
    def n_bulk(self):
        return len(self.bulk_vertex)

    @property
    def n_iface(self):
        return len(self.iface_vertex)

    @property
    def n0(self):
        return len(self.bulk_free)

    @property
    def n1(self):
        return len(self.iface_free)

    @property
    def bulk_dofs(self):
        """(vertex, fan id, region) for every bulk dof."""
        return list(
            zip(self.bulk_vertex.tolist(), self.bulk_fan.tolist(), self.bulk_region.tolist())
        )

    def fans_at(self, vertex):
        return int(np.sum(self.bulk_vertex == vertex))

    def split(self, values):
        """Full vector over (bulk dofs, interface dofs) -> the two parts."""
        values = np.asarray(values)
        return values[: self.n_bulk], values[self.n_bulk:]


def _directed_edge_codes(triangles, n_vertices):
    starts = triangles.ravel()
    ends = triangles[:, [1, 2, 0]].ravel()
    return starts, ends, starts * n_vertices + ends


def build_dofmap(m, dirichlet=True):
    """Fans, interface dofs, traces and Dirichlet masks of a fitted mesh.

    :param dirichlet: False gives the variant without boundary conditions,
        all dofs free
    """
    triangles = m.triangles
    n_vertices = m.n_vertices
    n_corners = 3 * len(triangles)
    starts, ends, codes = _directed_edge_codes(triangles, n_vertices)
    order = np.argsort(codes)
    sorted_codes = codes[order]
    # directed edge e runs from corner e to the next corner of its triangle
    end_corner = (np.arange(n_corners) // 3) * 3 + (np.arange(n_corners) % 3 + 1) % 3

    def _lookup(u, v):
        wanted = np.asarray(u) * n_vertices + np.asarray(v)
        position = np.clip(np.searchsorted(sorted_codes, wanted), 0, len(codes) - 1)
        found = sorted_codes[position] == wanted
        return np.where(found, order[position], -1)

    iface = m.interface_edges
    iface_keys = np.minimum(iface[:, 0], iface[:, 1]) * n_vertices + np.maximum(
        iface[:, 0], iface[:, 1]
    )
    twin = _lookup(ends, starts)
    undirected = np.minimum(starts, ends) * n_vertices + np.maximum(starts, ends)
    joins = (twin >= 0) & ~np.isin(undirected, iface_keys)
    first = np.flatnonzero(joins)
    second = twin[first]
    rows = np.concatenate([first, end_corner[first]])
    cols = np.concatenate([end_corner[second], second])
    graph = coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n_corners, n_corners)
    )
    n_fans, labels = connected_components(graph, directed=False)

    first_corner = np.full(n_fans, n_corners)
    np.minimum.at(first_corner, labels, np.arange(n_corners))
    fan_vertex = starts[first_corner]
    fan_order = np.lexsort((first_corner, fan_vertex))
    dof_of_label = np.empty(n_fans, dtype=np.int64)
    dof_of_label[fan_order] = np.arange(n_fans)
    corner_dof = dof_of_label[labels].reshape(-1, 3)
    bulk_vertex = fan_vertex[fan_order]
    bulk_region = m.triangle_regions[first_corner[fan_order] // 3]
    _unique, first_of_vertex, inverse = np.unique(
        bulk_vertex, return_index=True, return_inverse=True
    )
    bulk_fan = np.arange(n_fans) - first_of_vertex[np.asarray(inverse).reshape(-1)]

    iface_vertex = np.unique(iface) if len(iface) else np.zeros(0, dtype=np.int64)
    vertex_iface = np.full(n_vertices, -1)
    vertex_iface[iface_vertex] = np.arange(len(iface_vertex))

    left = _lookup(iface[:, 0], iface[:, 1])
    right = _lookup(iface[:, 1], iface[:, 0])
    if np.any(left < 0) or np.any(right < 0):
        bad = np.flatnonzero((left < 0) | (right < 0))[0]
        point = tuple(m.vertices[iface[bad, 0]])
        raise MeshException(
            "Interface edge at %s lacks a triangle on one side" % (point,),
            locations=[point],
        )
    flat = corner_dof.ravel()
    trace_bulk = np.stack(
        [
            np.stack([flat[left], flat[end_corner[left]]], axis=1),
            np.stack([flat[end_corner[right]], flat[right]], axis=1),
        ],
        axis=1,
    ).reshape(-1, 2, 2)
    trace_iface = vertex_iface[iface].reshape(-1, 2)
    trace_triangles = np.stack([left // 3, right // 3], axis=1).reshape(-1, 2)

    if dirichlet:
        boundary = m.boundary_vertices
        dirichlet_bulk = np.isin(bulk_vertex, boundary)
        dirichlet_iface = np.isin(iface_vertex, boundary)
    else:
        dirichlet_bulk = np.zeros(n_fans, dtype=bool)
        dirichlet_iface = np.zeros(len(iface_vertex), dtype=bool)

    free = np.flatnonzero(~dirichlet_bulk)
    bulk_free = free[np.lexsort((free, bulk_region[free]))]
    region_slices = []
    if len(bulk_free):
        free_regions = bulk_region[bulk_free]
        boundaries = np.flatnonzero(np.diff(free_regions)) + 1
        starts_ = np.concatenate([[0], boundaries])
        stops_ = np.concatenate([boundaries, [len(bulk_free)]])
        region_slices = [
            (int(free_regions[a]), int(a), int(b)) for a, b in zip(starts_, stops_)
        ]

    dofmap = DofMap(
        corner_dof=corner_dof,
        bulk_vertex=bulk_vertex,
        bulk_fan=bulk_fan,
        bulk_region=bulk_region,
        iface_vertex=iface_vertex,
        vertex_iface=vertex_iface,
        trace_bulk=trace_bulk,
        trace_iface=trace_iface,
        trace_triangles=trace_triangles,
        dirichlet_bulk=dirichlet_bulk,
        dirichlet_iface=dirichlet_iface,
        bulk_free=bulk_free,
        iface_free=np.flatnonzero(~dirichlet_iface),
        region_slices=tuple(region_slices),
    )
    logger.info(
        "Dofs: %d bulk (%d free), %d interface (%d free), %d region blocks"
        % (n_fans, dofmap.n0, len(iface_vertex), dofmap.n1, len(region_slices))
    )
    return dofmap


def interpolate_nodal(func, d, m):
    """Interface coefficient vector of ``func``; Dirichlet entries are zero."""
    values = evaluate_point_function(func, m.vertices[d.iface_vertex])
    values[d.dirichlet_iface] = 0.0
    return values


def nodal_values(func, d, m):
    """Bulk and interface nodal values of ``func`` on every dof."""
    bulk = evaluate_point_function(func, m.vertices[d.bulk_vertex])
    iface = evaluate_point_function(func, m.vertices[d.iface_vertex])
    return bulk, iface


def evaluate_bulk(d, m, bulk_values, points):
    """Value of a bulk finite element function at ``points``."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    located = m.locate(points)
    if np.any(located < 0):
        raise MeshException(
            "Points outside the mesh", locations=[tuple(x) for x in points[located < 0]]
        )
    weights = m.barycentric(located, points)
    return np.einsum("ij,ij->i", weights, np.asarray(bulk_values)[d.corner_dof[located]])


def prolongate(coarse, fine, fine_mesh, bulk_values, iface_values):
    """Exact nested prolongation of a coarse function to ``fine_mesh``.

    ``coarse`` and ``fine`` are the dof maps of ``fine_mesh.parent`` and
    ``fine_mesh``. Every fine vertex is a coarse vertex or the midpoint of a
    coarse edge, so values are read from the parent triangle corners.
    """
    parent_mesh = fine_mesh.parent
    if parent_mesh is None:
        raise MeshException("Prolongation needs a refined mesh")
    bulk_values = np.asarray(bulk_values, dtype=float)
    iface_values = np.asarray(iface_values, dtype=float)
    parents = fine_mesh.child_to_parent
    vertex_parents = fine_mesh.vertex_parents
    vertices = fine_mesh.triangles.ravel()
    parent_triangles = np.repeat(parents, 3)
    ends = vertex_parents[vertices]
    coarse_corners = parent_mesh.triangles[parent_triangles]
    values = np.zeros(len(vertices))
    for column in range(2):
        position = np.argmax(coarse_corners == ends[:, column][:, None], axis=1)
        dofs = coarse.corner_dof[parent_triangles, position]
        values += 0.5 * bulk_values[dofs]
    fine_bulk = np.zeros(fine.n_bulk)
    fine_bulk[fine.corner_dof.ravel()] = values

    ends = vertex_parents[fine.iface_vertex]
    fine_iface = 0.5 * (
        iface_values[coarse.vertex_iface[ends[:, 0]]]
        + iface_values[coarse.vertex_iface[ends[:, 1]]]
    )
    return fine_bulk, fine_iface
