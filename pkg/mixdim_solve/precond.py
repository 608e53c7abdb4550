# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Two-level additive Schwarz preconditioner on the interface unknowns.

The coarse space interpolates the hat functions of a structured coarse
grid, laid over the domain independently of the interfaces, at the
interface vertices. Every coarse node also owns a local space: the
interface dofs whose basis function is supported inside the patch of its
hat. The preconditioner is

    T r = sum_j Q_j (Q_j^T S Q_j)^-1 Q_j^T r

with S the Schur complement on the interface.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, qr
from scipy.sparse import coo_matrix

from .config import _DENSE_SCHUR_CAP
from .exception import PreconditionerException
from .log import logger
from .solver import assemble_schur_dense
from .tools import _parallel_map


@dataclass(frozen=True, eq=False)
class CoarseGrid:
    """Uniform right-triangle grid of mesh size H over a bounding box.

    Every square cell is cut along its lower-left to upper-right diagonal.
    Node (i, j) has index ``j * (nx + 1) + i``.
    """

    origin: tuple
    H: float
    nx: int
    ny: int

    @classmethod
    def covering(cls, polygon, H):
        polygon = np.asarray(polygon, dtype=float)
        low = polygon.min(axis=0)
        width = polygon.max(axis=0) - low
        nx = max(1, int(math.ceil(width[0] / H - 1e-9)))
        ny = max(1, int(math.ceil(width[1] / H - 1e-9)))
        return cls((float(low[0]), float(low[1])), float(H), nx, ny)

    @property
    def n_nodes(self):
        return (self.nx + 1) * (self.ny + 1)

    @property
    def nodes(self):
        i, j = np.meshgrid(np.arange(self.nx + 1), np.arange(self.ny + 1))
        return np.stack(
            [self.origin[0] + self.H * i.ravel(), self.origin[1] + self.H * j.ravel()],
            axis=1,
        )

    @property
    def triangles(self):
        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        p00 = (j * (self.nx + 1) + i).ravel()
        p10, p01 = p00 + 1, p00 + self.nx + 1
        p11 = p01 + 1
        lower = np.stack([p00, p10, p11], axis=1)
        upper = np.stack([p00, p11, p01], axis=1)
        return np.stack([lower, upper], axis=1).reshape(-1, 3)

    def cells(self, points):
        """(i, j) of the cell holding every point, clipped to the grid."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        i = np.floor((points[:, 0] - self.origin[0]) / self.H).astype(np.int64)
        j = np.floor((points[:, 1] - self.origin[1]) / self.H).astype(np.int64)
        return np.clip(i, 0, self.nx - 1), np.clip(j, 0, self.ny - 1)

    def hat(self, node, points):
        """Unclipped hat of ``node``: 1 at the node, negative outside its patch."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        center = self.nodes[node]
        dx = (points[:, 0] - center[0]) / self.H
        dy = (points[:, 1] - center[1]) / self.H
        return 1.0 - np.maximum(np.maximum(np.abs(dx), np.abs(dy)), np.abs(dx - dy))

    def interpolation(self, points):
        """Sparse (points x nodes) matrix of the hat values at ``points``."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        i, j = self.cells(points)
        rows, cols, values = [], [], []
        for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
            node = (j + dj) * (self.nx + 1) + (i + di)
            dx = (points[:, 0] - self.origin[0]) / self.H - (i + di)
            dy = (points[:, 1] - self.origin[1]) / self.H - (j + dj)
            value = 1.0 - np.maximum(np.maximum(np.abs(dx), np.abs(dy)), np.abs(dx - dy))
            keep = value > 0
            rows.append(np.flatnonzero(keep))
            cols.append(node[keep])
            values.append(value[keep])
        return coo_matrix(
            (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(points), self.n_nodes),
        ).tocsc()


class SubspacePreconditioner:
    def __init__(
        self, grid, Q0, coarse_nodes, coarse_basis, coarse_factor,
        local_nodes, Q_local, local_factors, coverage, threads=1, collapsed=False,
    ):
        self.grid = grid
        self.Q0 = Q0
        self.coarse_nodes = coarse_nodes
        self.coarse_basis = coarse_basis
        self.coarse_factor = coarse_factor
        self.local_nodes = local_nodes
        self.Q_local = Q_local
        self.local_factors = local_factors
        self.coverage = coverage
        self.collapsed = collapsed
        self._threads = threads
        self.n1 = len(coverage)

    @property
    def H(self):
        return self.grid.H

    @property
    def n_subspaces(self):
        return len(self.Q_local) + (self.coarse_factor is not None)

    @property
    def overlap(self):
        return int(self.coverage.max()) if len(self.coverage) else 0

    def _terms(self):
        terms = [("local", indices, factor) for indices, factor in zip(self.Q_local, self.local_factors)]
        if self.coarse_factor is not None:
            terms.append(("coarse", self.coarse_basis, self.coarse_factor))
        return terms

    def apply(self, r):
        """T r, the sum of the independent subspace corrections."""
        r = np.asarray(r, dtype=float)
        if r.shape != (self.n1,):
            raise PreconditionerException(
                "Residual of shape %s, expected (%d,)" % (r.shape, self.n1)
            )

        def _correction(term):
            kind, space, factor = term
            if kind == "local":
                return space, cho_solve(factor, r[space])
            return None, space @ cho_solve(factor, space.T @ r)

        result = np.zeros(self.n1)
        for indices, values in _parallel_map(_correction, self._terms(), self._threads):
            if indices is None:
                result += values
            else:
                result[indices] += values
        return result

    def __call__(self, r):
        return self.apply(r)


def _independent_columns(Q, tol=1e-10):
    """Positions of a maximal linearly independent set of columns of Q."""
    _q, r, pivots = qr(Q, mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(r))
    if not len(diagonal) or diagonal[0] == 0:
        return np.zeros(0, dtype=np.int64)
    rank = int(np.sum(diagonal > tol * diagonal[0]))
    return np.sort(pivots[:rank])


def _local_selection(grid, node, points, edges, vertex_of, tol):
    """Free dofs whose incident interface edges all lie in the patch of ``node``."""
    psi = grid.hat(node, points)
    candidates = psi > tol
    if not np.any(candidates):
        return np.zeros(0, dtype=np.int64)
    ends = grid.hat(node, points[edges].reshape(-1, 2)).reshape(-1, 2)
    middle = grid.hat(node, points[edges].mean(axis=1))
    inside = (ends[:, 0] >= -tol) & (ends[:, 1] >= -tol) & (middle > tol)
    outside_vertices = np.unique(edges[~inside])
    candidates[outside_vertices] = False
    return np.flatnonzero(candidates[vertex_of])


def _factor(matrix, node):
    try:
        return cho_factor(matrix, lower=True)
    except LinAlgError:
        raise PreconditionerException(
            "Galerkin matrix of coarse node %s is singular; its interface dofs"
            " are not tied to any Dirichlet data" % node,
            node=node,
        )


def build_preconditioner(op, d, m, H, threads=1, tol=1e-12, memory_cap=None):
    """Coarse space and local patch spaces of size ``H``, all factored.

    :param op: Schur complement operator of the system
    :param d: dof map of ``m``
    :param m: fitted mesh
    """
    if H is None or H <= 0:
        raise PreconditionerException("Coarse mesh size must be positive, got %s" % H)
    if d.n1 == 0:
        raise PreconditionerException("The interface has no free dof")
    if H <= m.h:
        logger.warning("Coarse mesh size %g does not exceed h=%g" % (H, m.h))
    if memory_cap is None:
        memory_cap = _DENSE_SCHUR_CAP
    if op.dense is None and op.n1 <= memory_cap:
        assemble_schur_dense(op, memory_cap)

    grid = CoarseGrid.covering(m.domain.polygon, H)
    # interface vertex positions, indexed by interface dof
    points = m.vertices[d.iface_vertex]
    edges = d.trace_iface
    free = d.iface_free
    n1 = len(free)

    Q0 = grid.interpolation(points[free])
    coarse_nodes = np.flatnonzero(np.diff(Q0.indptr) > 0)
    Q0 = Q0[:, coarse_nodes].tocsc()

    local_nodes, Q_local = [], []
    coverage = np.zeros(n1, dtype=np.int64)
    for node in range(grid.n_nodes):
        selection = _local_selection(grid, node, points, edges, free, tol)
        if len(selection):
            local_nodes.append(node)
            Q_local.append(selection)
            coverage[selection] += 1

    uncovered = np.flatnonzero(coverage == 0)
    if len(uncovered):
        logger.warning(
            "%d interface dofs lie in no patch (H=%g); each is added to the patch"
            " of its largest coarse hat" % (len(uncovered), H)
        )
        owners = np.asarray(Q0[uncovered].argmax(axis=1)).reshape(-1)
        for dof, owner in zip(uncovered.tolist(), coarse_nodes[owners].tolist()):
            if owner in local_nodes:
                position = local_nodes.index(owner)
                Q_local[position] = np.sort(np.append(Q_local[position], dof))
            else:
                local_nodes.append(owner)
                Q_local.append(np.array([dof]))
            coverage[dof] += 1

    whole = [k for k, selection in enumerate(Q_local) if len(selection) == n1]
    collapsed = bool(whole)
    if collapsed:
        local_nodes = [local_nodes[whole[0]]]
        Q_local = [Q_local[whole[0]]]
        logger.info(
            "Patch of coarse node %d holds every interface dof, exact inverse"
            % local_nodes[0]
        )

    def _local_factor(item):
        node, selection = item
        if op.dense is not None:
            matrix = op.dense[np.ix_(selection, selection)]
        else:
            matrix = op.columns(selection)[selection]
            matrix = 0.5 * (matrix + matrix.T)
        return _factor(matrix, node)

    local_factors = _parallel_map(_local_factor, list(zip(local_nodes, Q_local)), threads)

    coarse_basis, coarse_factor = None, None
    if not collapsed:
        dense_Q0 = Q0.toarray()
        independent = _independent_columns(dense_Q0)
        if len(independent) < Q0.shape[1]:
            logger.debug(
                "Coarse space: %d of %d columns are independent"
                % (len(independent), Q0.shape[1])
            )
        coarse_basis = dense_Q0[:, independent]
        coarse_factor = _factor(op.galerkin(coarse_basis), "coarse")

    preconditioner = SubspacePreconditioner(
        grid=grid,
        Q0=Q0,
        coarse_nodes=coarse_nodes,
        coarse_basis=coarse_basis,
        coarse_factor=coarse_factor,
        local_nodes=local_nodes,
        Q_local=Q_local,
        local_factors=local_factors,
        coverage=coverage,
        threads=threads,
        collapsed=collapsed,
    )
    logger.info(
        "Preconditioner: H=%g, %d coarse columns, %d local spaces, max overlap %d"
        % (H, Q0.shape[1], len(Q_local), preconditioner.overlap)
    )
    return preconditioner
