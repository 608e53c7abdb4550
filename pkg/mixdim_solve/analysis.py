# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Diagnostics around the discrete problem.

Interface graph matrices, Poincare constant and spectral bounds of the
Schur complement, connectivity of the bulk/interface adjacency graph,
corner exponents of the bulk regions and statistics of the network.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh, eigvalsh
from scipy.sparse import coo_matrix, diags
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh, splu

from .config import _DENSE_EIGEN_CAP, _POINCARE_MAXIT, _POINCARE_TOL
from .exception import AnalysisException
from .geometry import boundary_touching_regions
from .log import logger
from .precond import CoarseGrid
from .solver import assemble_schur_dense
from .tools import _write_key_values


@dataclass(frozen=True, eq=False)
class InterfaceGraph:
    nodes: np.ndarray
    points: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    dirichlet: np.ndarray

    @classmethod
    def from_edges(cls, points, edges, dirichlet=None):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if dirichlet is None:
            dirichlet = np.zeros(len(points), dtype=bool)
        return cls(
            nodes=np.arange(len(points)),
            points=points,
            edges=edges,
            lengths=np.linalg.norm(points[edges[:, 1]] - points[edges[:, 0]], axis=1),
            dirichlet=np.asarray(dirichlet, dtype=bool),
        )

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def free(self):
        return np.flatnonzero(~self.dirichlet)


def interface_graph(m, d):
    """Graph of the interface mesh; node k is interface dof k."""
    graph = InterfaceGraph(
        nodes=d.iface_vertex,
        points=m.vertices[d.iface_vertex],
        edges=d.trace_iface,
        lengths=np.linalg.norm(
            m.vertices[m.interface_edges[:, 1]] - m.vertices[m.interface_edges[:, 0]], axis=1
        ),
        dirichlet=d.dirichlet_iface,
    )
    if np.any(graph.lengths <= 0):
        raise AnalysisException("Interface graph has an edge of zero length")
    return graph


def _reduce(matrix, g, reduce):
    if not reduce:
        return matrix.tocsr()
    free = g.free
    return matrix.tocsr()[free][:, free].tocsr()


def graph_laplacian(g, reduce=True):
    """Weighted Laplacian, (Lv, v) = sum over edges (v(x) - v(y))^2 / |x - y|."""
    local = (1.0 / g.lengths)[:, None, None] * np.array([[1.0, -1.0], [-1.0, 1.0]])
    rows = np.broadcast_to(g.edges[:, :, None], local.shape)
    cols = np.broadcast_to(g.edges[:, None, :], local.shape)
    matrix = coo_matrix(
        (local.ravel(), (rows.ravel(), cols.ravel())), shape=(g.n_nodes, g.n_nodes)
    )
    return _reduce(matrix, g, reduce)


def mass_matrix(g, reduce=True):
    """Lumped mass, half the length of every incident edge."""
    diagonal = 0.5 * (
        np.bincount(g.edges[:, 0], weights=g.lengths, minlength=g.n_nodes)
        + np.bincount(g.edges[:, 1], weights=g.lengths, minlength=g.n_nodes)
    )
    return _reduce(diags(diagonal), g, reduce)


@dataclass
class PoincareResult:
    D: float
    finite: bool
    floating_components: list = field(default_factory=list)
    iterations: int = 0


def _floating_components(L):
    """Connected components of L on which every row sums to zero."""
    n_components, labels = connected_components(L, directed=False)
    row_sums = np.abs(np.asarray(L.sum(axis=1)).reshape(-1))
    scale = np.abs(L.diagonal()).max() if L.shape[0] else 1.0
    floating = []
    for component in range(n_components):
        members = np.flatnonzero(labels == component)
        if np.all(row_sums[members] <= 1e-12 * scale):
            floating.append(members)
    return floating


def poincare_constant(L, M, tol=None, maxit=None):
    """Largest D with v^T M v <= D v^T L v, the top eigenvalue of (M, L)."""
    tol = _POINCARE_TOL if tol is None else tol
    maxit = _POINCARE_MAXIT if maxit is None else maxit
    L = L.tocsr()
    n = L.shape[0]
    if n == 0:
        return PoincareResult(0.0, True)
    floating = _floating_components(L)
    if floating:
        logger.warning(
            "%d interface components carry no Dirichlet node, Poincare constant"
            " is infinite" % len(floating)
        )
        return PoincareResult(math.inf, False, floating)
    if n <= _DENSE_EIGEN_CAP:
        values = eigvalsh(M.toarray(), L.toarray())
        return PoincareResult(float(values[-1]), True)

    lu = splu(L.tocsc())
    x = np.ones(n)
    value = 0.0
    for iteration in range(1, maxit + 1):
        x = lu.solve(M @ x)
        x /= np.linalg.norm(x)
        new_value = float(x @ (M @ x)) / float(x @ (L @ x))
        if abs(new_value - value) <= tol * new_value:
            return PoincareResult(new_value, True, iterations=iteration)
        value = new_value
    logger.warning("Inverse iteration for D stopped after %d steps" % maxit)
    return PoincareResult(value, True, iterations=maxit)


@dataclass
class SpectralBounds:
    c1: float
    c2: float
    bound: float
    holds: bool
    D: float


def spectral_equivalence(op, L, M=None, alpha_max=None, beta_max=None, D=None):
    """Extreme generalized eigenvalues of (S, L) and the check c2 <= alpha + D beta.

    :param op: Schur complement operator
    :param L: reduced graph Laplacian, same dofs as ``op``
    :param M: reduced mass matrix, used for D when ``D`` is not given
    """
    if L.shape[0] != op.n1:
        raise AnalysisException(
            "Laplacian of size %d for %d interface dofs" % (L.shape[0], op.n1)
        )
    metadata = op.system.metadata
    alpha_max = metadata["alpha_max"] if alpha_max is None else alpha_max
    beta_max = metadata["beta_max"] if beta_max is None else beta_max
    if D is None:
        if M is None:
            raise AnalysisException("Either D or the mass matrix is needed")
        result = poincare_constant(L, M)
        if not result.finite:
            return SpectralBounds(0.0, math.inf, math.inf, False, math.inf)
        D = result.D

    try:
        if op.n1 <= _DENSE_EIGEN_CAP:
            dense = op.dense if op.dense is not None else assemble_schur_dense(op)
            values = eigh(dense, L.toarray(), eigvals_only=True)
            c1, c2 = float(values[0]), float(values[-1])
        else:
            schur = op.as_linear_operator()
            c2 = float(eigsh(schur, k=1, M=L.tocsc(), which="LA", tol=_POINCARE_TOL)[0][0])
            c1 = float(eigsh(schur, k=1, M=L.tocsc(), which="SA", tol=_POINCARE_TOL)[0][0])
    except (LinAlgError, RuntimeError) as e:
        # ArpackError derives from RuntimeError
        raise AnalysisException(
            "The Laplacian is not positive definite on the free interface dofs: %s" % e
        )
    bound = alpha_max + D * beta_max
    holds = bool(0 < c1 <= c2 * (1 + 1e-12) and c2 <= bound + 1e-8 * max(1.0, bound))
    logger.info("Spectral bounds: c1=%.6g, c2=%.6g, bound=%.6g" % (c1, c2, bound))
    return SpectralBounds(c1, c2, bound, holds, D)


@dataclass
class WalkResult:
    walk: tuple
    N: int
    success: bool
    unreachable_segments: tuple = ()
    unreachable_regions: tuple = ()


def coercivity_walk(d, e0=None):
    """Walk through the bulk/interface adjacency graph ending on the boundary.

    The graph has one node per bulk region ("I", i) and per interface
    segment ("J", j), joined by ``e0`` (default: the arrangement's E0). The
    walk is the depth-first tour of the breadth-first tree grown from the
    first region touching the boundary; regions it misses start trees of
    their own, joined to the walk through the boundary. ``N`` counts the
    interface entries of the walk.
    """
    e0 = d.E0 if e0 is None else e0
    neighbors = {}
    for i, j in sorted(e0):
        neighbors.setdefault(("I", i), []).append(("J", j))
        neighbors.setdefault(("J", j), []).append(("I", i))
    roots = [("I", i) for i in sorted(boundary_touching_regions(d))]

    parent = {}
    children = {}
    trees = []
    for root in roots:
        if root in parent:
            continue
        trees.append(root)
        parent[root] = None
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for other in neighbors.get(node, []):
                if other not in parent:
                    parent[other] = node
                    children.setdefault(node, []).append(other)
                    queue.append(other)

    walk = []
    for root in reversed(trees):
        stack = [(root, iter(children.get(root, [])))]
        walk.append(root)
        while stack:
            node, pending = stack[-1]
            child = next(pending, None)
            if child is None:
                stack.pop()
                if stack:
                    walk.append(stack[-1][0])
                continue
            walk.append(child)
            stack.append((child, iter(children.get(child, []))))

    unreachable_segments = tuple(
        s.index for s in d.interface_segments if ("J", s.index) not in parent
    )
    unreachable_regions = tuple(
        r.index for r in d.bulk_regions if ("I", r.index) not in parent
    )
    success = not unreachable_segments and not unreachable_regions
    if not success:
        logger.warning(
            "Coercivity walk misses segments %s and regions %s"
            % (list(unreachable_segments), list(unreachable_regions))
        )
    return WalkResult(
        walk=tuple(walk),
        N=sum(1 for kind, _index in walk if kind == "J"),
        success=success,
        unreachable_segments=unreachable_segments,
        unreachable_regions=unreachable_regions,
    )


@dataclass
class ExponentResult:
    lambdas: list
    sobolev_index: float
    warnings: list = field(default_factory=list)


def _corner_kind(bc):
    bc = bc.upper()
    if len(bc) != 2 or set(bc) - {"D", "R"}:
        raise AnalysisException("Boundary pattern must be two of D/R, got '%s'" % bc)
    return "S" if bc[0] == bc[1] else "M"


def singular_exponents(omega, kind=None, bc=None):
    """Corner exponents in (0, 1) of a bulk region with interior angle omega.

    ``kind`` is ``S`` (same condition on both pieces) or ``M`` (Dirichlet on
    one, Robin on the other); it is derived from ``bc`` (e.g. ``"DR"``) when
    omitted. The predicted bulk Sobolev index is min(2, 1 + min lambda).
    """
    if kind is None:
        if bc is None:
            raise AnalysisException("Corner kind or boundary pattern needed")
        kind = _corner_kind(bc)
    kind = kind.upper()
    if kind not in ("S", "M"):
        raise AnalysisException("Unknown corner kind '%s'" % kind)
    omega = float(omega)
    if not 0 < omega <= 2 * math.pi:
        raise AnalysisException("Corner angle %r outside (0, 2 pi]" % omega)
    warnings = []
    if omega == 2 * math.pi:
        warnings.append("slit tip: angle 2 pi lies outside the regular corner sets")
    elif kind == "M" and omega == math.pi:
        raise AnalysisException("Straight corner with mixed conditions has no expansion")

    lambdas = []
    ell = 1
    while True:
        if kind == "S":
            value = ell * math.pi / omega
        else:
            value = (ell - 0.5) * math.pi / omega
        if value >= 1 - 1e-12:
            break
        lambdas.append(value)
        ell += 1
    if lambdas and lambdas[0] <= 0.5:
        warnings.append("exponent %.6g does not exceed 1/2" % lambdas[0])
    for message in warnings:
        logger.warning("Corner omega=%.6g kind %s: %s" % (omega, kind, message))
    index = min(2.0, 1.0 + lambdas[0]) if lambdas else 2.0
    return ExponentResult(lambdas, index, warnings)


@dataclass
class Corner:
    region: int
    vertex: int
    point: tuple
    omega: float
    pieces: str
    kind: str
    tip: bool
    exponents: ExponentResult = None


def _interior_angle(previous, vertex, following):
    """Angle at ``vertex`` on the left of previous -> vertex -> following."""
    outgoing = following - vertex
    incoming = previous - vertex
    angle = math.atan2(
        outgoing[0] * incoming[1] - outgoing[1] * incoming[0],
        outgoing[0] * incoming[0] + outgoing[1] * incoming[1],
    ) % (2 * math.pi)
    return 2 * math.pi if angle <= 1e-12 else angle


def corner_classification(d, tol=1e-9):
    """Every corner of every bulk region with its exponents.

    Pieces on the polygon are Dirichlet (D), interface pieces Robin (R).
    Straight vertices between pieces of the same kind are skipped.
    """
    boundary = set(tuple(e) for e in d.boundary_edges)
    tips = set(d.free_tips)
    corners = []
    for region in d.bulk_regions:
        for cycle in (region.outer,) + tuple(region.holes):
            size = len(cycle)
            for k in range(size):
                u, v, w = cycle[k - 1], cycle[k], cycle[(k + 1) % size]
                omega = _interior_angle(d.vertices[u], d.vertices[v], d.vertices[w])
                pieces = "".join(
                    "D" if edge in boundary else "R" for edge in ((u, v), (v, w))
                )
                kind = _corner_kind(pieces)
                if abs(omega - math.pi) <= tol:
                    continue
                corner = Corner(
                    region=region.index,
                    vertex=int(v),
                    point=tuple(d.vertices[v]),
                    omega=omega,
                    pieces=pieces,
                    kind=kind,
                    tip=v in tips and u == w,
                )
                try:
                    corner.exponents = singular_exponents(omega, kind)
                except AnalysisException as e:
                    logger.warning("Corner at %s skipped: %s" % (corner.point, e))
                    continue
                corners.append(corner)
    return corners


def predicted_rate(corners):
    """Energy convergence rate forecast, min(1, smallest exponent)."""
    lambdas = [c.exponents.lambdas[0] for c in corners if c.exponents.lambdas]
    return min([1.0] + lambdas)


def network_statistics(m, H):
    """Proxy statistics of the interface network on a coarse grid of size H."""
    grid = CoarseGrid.covering(m.domain.polygon, H)
    edges = m.interface_edges
    stats = {
        "interface_edges": len(edges),
        "max_edge_length": 0.0,
        "cell_length_mean": 0.0,
        "cell_length_variance": 0.0,
        "max_cell_components": 0,
        "mean_cell_components": 0.0,
    }
    if not len(edges):
        return stats
    lengths = np.linalg.norm(m.vertices[edges[:, 1]] - m.vertices[edges[:, 0]], axis=1)
    i, j = grid.cells(m.vertices[edges].mean(axis=1))
    cell = j * grid.nx + i
    n_cells = grid.nx * grid.ny
    per_cell = np.bincount(cell, weights=lengths, minlength=n_cells)
    components = np.zeros(n_cells, dtype=np.int64)
    for c in np.unique(cell).tolist():
        local = edges[cell == c]
        nodes, inverse = np.unique(local, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1, 2)
        graph = coo_matrix(
            (np.ones(len(inverse)), (inverse[:, 0], inverse[:, 1])),
            shape=(len(nodes), len(nodes)),
        )
        components[c] = connected_components(graph, directed=False)[0]
    occupied = components > 0
    stats.update(
        max_edge_length=float(lengths.max()),
        cell_length_mean=float(per_cell.mean()),
        cell_length_variance=float(per_cell.var()),
        max_cell_components=int(components.max()),
        mean_cell_components=float(components[occupied].mean()),
    )
    return stats


def condition_number(sys, dense_cap=None):
    """Spectral condition number of the free-dof system matrix."""
    dense_cap = _DENSE_EIGEN_CAP if dense_cap is None else dense_cap
    matrix = sys.free_matrix()
    if matrix.shape[0] <= dense_cap:
        values = eigvalsh(matrix.toarray())
        low, high = float(values[0]), float(values[-1])
    else:
        high = float(eigsh(matrix, k=1, which="LA", return_eigenvectors=False)[0])
        low = float(
            eigsh(matrix.tocsc(), k=1, sigma=0.0, which="LM", return_eigenvectors=False)[0]
        )
    if low <= 0:
        return math.inf
    return high / low


def write_report(file_path, items, header_lines=None):
    """Key-value diagnostics report."""
    _write_key_values(file_path, items, header_lines=header_lines)
