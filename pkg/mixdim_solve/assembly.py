# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Assembly of the coupled bulk/interface form into a 2x2 block system.

The form is the sum of the bulk stiffness (P1 on triangles), the tangential
stiffness of the interfaces (P1 on interface edges) and the Robin coupling
``B (v0 - v1)(w0 - w1)`` integrated on every interface edge, once per side.
Dirichlet dofs are eliminated after lifting the nodal interpolant of ``g``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import bmat, coo_matrix

from .config import (
    _BULK_QUADRATURE,
    _IFACE_QUADRATURE,
    _SOURCE_CENTER,
    _SOURCE_DECAY,
)
from .exception import AssemblyException, ConfigException, SPDViolation
from .log import logger
from .space import nodal_values
from .tools import _write_content, evaluate_point_function, orient


def exponential_source(x, y):
    """The default source, exp(-10 |x - (1/2, 1/2)|)."""
    return np.exp(
        -_SOURCE_DECAY * np.hypot(x - _SOURCE_CENTER[0], y - _SOURCE_CENTER[1])
    )


def source_function(spec):
    """``exp`` | ``zero`` | ``const:V`` | a number -> point function."""
    if callable(spec):
        return spec
    if isinstance(spec, (int, float)):
        return float(spec)
    text = str(spec).strip()
    if text == "exp":
        return exponential_source
    if text == "zero":
        return 0.0
    if text.startswith("const:"):
        try:
            return float(text.split(":", 1)[1])
        except ValueError:
            pass
    try:
        return float(text)
    except ValueError:
        raise ConfigException("Unknown source '%s'" % spec)


@dataclass(frozen=True, eq=False)
class Coefficients:
    A_bulk: np.ndarray
    A_iface: np.ndarray
    B_iface: np.ndarray

    def __post_init__(self):
        for name in ("A_bulk", "A_iface", "B_iface"):
            values = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(values)):
                raise AssemblyException("%s has non finite values" % name)
            object.__setattr__(self, name, values)
        if np.any(self.A_bulk <= 0) or np.any(self.A_iface <= 0):
            raise AssemblyException("Conductivities must be strictly positive")
        if np.any(self.B_iface < 0):
            raise AssemblyException("Coupling coefficients must be non negative")
        if len(self.A_iface) != len(self.B_iface):
            raise AssemblyException("A_iface and B_iface sizes differ")

    @property
    def bounds(self):
        alpha = np.concatenate([self.A_bulk, self.A_iface])
        beta = self.B_iface if len(self.B_iface) else np.zeros(1)
        return (
            float(alpha.min()),
            float(alpha.max()),
            float(beta.min()),
            float(beta.max()),
        )

    @classmethod
    def constant(cls, m, a_bulk=1.0, a_iface=1.0, b_iface=1.0):
        n_edges = len(m.interface_edges)
        return cls(
            np.full(m.n_triangles, float(a_bulk)),
            np.full(n_edges, float(a_iface)),
            np.full(n_edges, float(b_iface)),
        )

    @classmethod
    def uniform_iface(cls, m, low, high, seed, a_bulk=1.0, b_iface=1.0):
        """A_iface drawn uniformly in [low, high] for every interface edge."""
        if not 0 < low <= high:
            raise AssemblyException("Invalid range [%s, %s] for A_iface" % (low, high))
        rng = np.random.default_rng(seed)
        n_edges = len(m.interface_edges)
        return cls(
            np.full(m.n_triangles, float(a_bulk)),
            rng.uniform(low, high, n_edges),
            np.full(n_edges, float(b_iface)),
        )

    @classmethod
    def from_functions(cls, m, a_bulk, a_iface, b_iface):
        """Sample at triangle barycenters and interface edge midpoints."""
        centers = m.vertices[m.triangles].mean(axis=1)
        mids = m.vertices[m.interface_edges].mean(axis=1)
        return cls(
            evaluate_point_function(a_bulk, centers),
            evaluate_point_function(a_iface, mids),
            evaluate_point_function(b_iface, mids),
        )

    def refine(self, fine_mesh):
        """Children inherit the value of their parent element."""
        return Coefficients(
            self.A_bulk[fine_mesh.child_to_parent],
            self.A_iface[fine_mesh.interface_parent],
            self.B_iface[fine_mesh.interface_parent],
        )

    def scaled(self, factor):
        return Coefficients(
            self.A_bulk * factor, self.A_iface * factor, self.B_iface * factor
        )


@dataclass(frozen=True, eq=False)
class BlockSystem:
    A00: object
    A01: object
    A10: object
    A11: object
    b0: np.ndarray
    b1: np.ndarray
    region_blocks: tuple
    dofmap: object
    matrix: object
    load: np.ndarray
    lift: np.ndarray
    free: np.ndarray
    terms: dict
    metadata: dict = field(default_factory=dict)

    @property
    def n0(self):
        return len(self.b0)

    @property
    def n1(self):
        return len(self.b1)

    def free_matrix(self):
        return bmat([[self.A00, self.A01], [self.A10, self.A11]], format="csr")

    def expand(self, U0, U1):
        """Free bulk and interface values -> vector over every dof, lift added."""
        values = self.lift.copy()
        values[self.free[: self.n0]] += U0
        values[self.free[self.n0:]] += U1
        return values


def _bulk_stiffness(m, d, c):
    p = m.vertices[m.triangles]
    area2 = orient(p[:, 0], p[:, 1], p[:, 2])
    opposite = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-opposite[..., 1], opposite[..., 0]], axis=-1) / area2[:, None, None]
    local = (c.A_bulk * 0.5 * area2)[:, None, None] * np.einsum(
        "tik,tjk->tij", grads, grads
    )
    rows = np.broadcast_to(d.corner_dof[:, :, None], local.shape)
    cols = np.broadcast_to(d.corner_dof[:, None, :], local.shape)
    return local.ravel(), rows.ravel(), cols.ravel()


def _edge_lengths(m):
    e = m.interface_edges
    return np.linalg.norm(m.vertices[e[:, 1]] - m.vertices[e[:, 0]], axis=1)


def _iface_stiffness(m, d, c):
    lengths = _edge_lengths(m)
    pattern = np.array([[1.0, -1.0], [-1.0, 1.0]])
    local = (c.A_iface / lengths)[:, None, None] * pattern
    dofs = d.n_bulk + d.trace_iface
    rows = np.broadcast_to(dofs[:, :, None], local.shape)
    cols = np.broadcast_to(dofs[:, None, :], local.shape)
    return local.ravel(), rows.ravel(), cols.ravel()


def _robin_coupling(m, d, c):
    lengths = _edge_lengths(m)
    mass = (c.B_iface * lengths / 6.0)[:, None, None] * np.array([[2.0, 1.0], [1.0, 2.0]])
    local = np.block([[mass, -mass], [-mass, mass]])
    values, rows, cols = [], [], []
    for side in (0, 1):
        dofs = np.concatenate([d.trace_bulk[:, side, :], d.n_bulk + d.trace_iface], axis=1)
        values.append(local.ravel())
        rows.append(np.broadcast_to(dofs[:, :, None], local.shape).ravel())
        cols.append(np.broadcast_to(dofs[:, None, :], local.shape).ravel())
    return np.concatenate(values), np.concatenate(rows), np.concatenate(cols)


def _term_matrix(n, term):
    values, rows, cols = term
    matrix = coo_matrix((values, (rows, cols)), shape=(n, n)).tocsr()
    matrix.sum_duplicates()
    return matrix


def _bulk_load(m, d, f_bulk):
    p = m.vertices[m.triangles]
    area = 0.5 * orient(p[:, 0], p[:, 1], p[:, 2])
    mids = 0.5 * (p + p[:, [1, 2, 0]])
    # mids[:, k] is the midpoint of edge (k, k+1)
    values = evaluate_point_function(f_bulk, mids.reshape(-1, 2)).reshape(-1, 3)
    weights = (area / 6.0)[:, None] * (values + values[:, [2, 0, 1]])
    return np.bincount(d.corner_dof.ravel(), weights=weights.ravel(), minlength=d.n_bulk)


def _iface_load(m, d, f_iface):
    e = m.interface_edges
    a, b = m.vertices[e[:, 0]], m.vertices[e[:, 1]]
    lengths = np.linalg.norm(b - a, axis=1)
    load = np.zeros(d.n_iface)
    for t in (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)):
        values = evaluate_point_function(f_iface, a + t * (b - a)) * 0.5 * lengths
        load += np.bincount(d.trace_iface[:, 0], weights=values * (1.0 - t), minlength=d.n_iface)
        load += np.bincount(d.trace_iface[:, 1], weights=values * t, minlength=d.n_iface)
    return load


def assemble(m, d, c, f_bulk=None, f_iface=None, g=0.0):
    """Reduced block system on the free dofs.

    :param f_bulk: point function, number or None (zero)
    :param f_iface: point function, number or None (zero)
    :param g: Dirichlet data, point function or number
    """
    if len(c.A_bulk) != m.n_triangles or len(c.A_iface) != len(m.interface_edges):
        raise AssemblyException("Coefficients do not match the mesh")
    if d.n0 + d.n1 == 0:
        raise AssemblyException("The system has no free dof")
    n = d.n_bulk + d.n_iface
    terms = {
        "bulk": _term_matrix(n, _bulk_stiffness(m, d, c)),
        "iface": _term_matrix(n, _iface_stiffness(m, d, c)),
        "coupling": _term_matrix(n, _robin_coupling(m, d, c)),
    }
    matrix = terms["bulk"] + terms["iface"] + terms["coupling"]
    # write (i, j) and (j, i) as the same floating point value
    matrix = ((matrix + matrix.T) * 0.5).tocsr()
    matrix.eliminate_zeros()
    load = np.concatenate([_bulk_load(m, d, f_bulk), _iface_load(m, d, f_iface)])

    lift = np.zeros(n)
    bulk_g, iface_g = nodal_values(g, d, m)
    lift[: d.n_bulk][d.dirichlet_bulk] = bulk_g[d.dirichlet_bulk]
    lift[d.n_bulk:][d.dirichlet_iface] = iface_g[d.dirichlet_iface]
    rhs = load - matrix @ lift

    p0 = d.bulk_free
    p1 = d.n_bulk + d.iface_free
    rows0 = matrix[p0]
    rows1 = matrix[p1]
    bounds = c.bounds
    system = BlockSystem(
        A00=rows0[:, p0].tocsr(),
        A01=rows0[:, p1].tocsr(),
        A10=rows1[:, p0].tocsr(),
        A11=rows1[:, p1].tocsr(),
        b0=rhs[p0],
        b1=rhs[p1],
        region_blocks=d.region_slices,
        dofmap=d,
        matrix=matrix,
        load=load,
        lift=lift,
        free=np.concatenate([p0, p1]),
        terms=terms,
        metadata={
            "bulk_quadrature": _BULK_QUADRATURE,
            "iface_quadrature": _IFACE_QUADRATURE,
            "h": m.h,
            "alpha_min": bounds[0],
            "alpha_max": bounds[1],
            "beta_min": bounds[2],
            "beta_max": bounds[3],
        },
    )
    logger.info(
        "Assembled system: n0=%d, n1=%d, %d region blocks, nnz=%d"
        % (system.n0, system.n1, len(system.region_blocks), matrix.nnz)
    )
    return system


def energy_norm(sys, U):
    """sqrt(U^T A U), U over the free dofs or over every dof."""
    U = np.asarray(U, dtype=float)
    if len(U) == sys.n0 + sys.n1:
        matrix = sys.free_matrix()
    elif len(U) == sys.matrix.shape[0]:
        matrix = sys.matrix
    else:
        raise AssemblyException(
            "Vector of size %d matches neither %d free dofs nor %d dofs"
            % (len(U), sys.n0 + sys.n1, sys.matrix.shape[0])
        )
    value = float(U @ (matrix @ U))
    scale = float(np.abs(U) @ (abs(matrix) @ np.abs(U)))
    if value < -1e-12 * scale:
        raise SPDViolation("Negative energy %g" % value, value=value)
    return math.sqrt(max(value, 0.0))


def evaluate_form(m, d, c, U, V):
    """The three sums of a(U, V), one element at a time.

    U and V are vectors over every dof (bulk first). Returns a dict with
    the ``bulk``, ``iface`` and ``coupling`` contributions.
    """
    U0, U1 = d.split(U)
    V0, V1 = d.split(V)
    result = {"bulk": 0.0, "iface": 0.0, "coupling": 0.0}
    for t, corners in enumerate(m.triangles):
        p = m.vertices[corners]
        area = 0.5 * float(orient(p[0], p[1], p[2]))
        grad_u = np.zeros(2)
        grad_v = np.zeros(2)
        for k in range(3):
            e = p[(k + 2) % 3] - p[(k + 1) % 3]
            grad = np.array([-e[1], e[0]]) / (2.0 * area)
            dof = d.corner_dof[t, k]
            grad_u += U0[dof] * grad
            grad_v += V0[dof] * grad
        result["bulk"] += c.A_bulk[t] * area * float(grad_u @ grad_v)
    for f, (u, v) in enumerate(m.interface_edges):
        length = float(np.linalg.norm(m.vertices[v] - m.vertices[u]))
        iu, iv = d.trace_iface[f]
        result["iface"] += (
            c.A_iface[f] * (U1[iv] - U1[iu]) * (V1[iv] - V1[iu]) / length
        )
        for side in (0, 1):
            bu, bv = d.trace_bulk[f, side]
            ju = U0[bu] - U1[iu]
            jv = U0[bv] - U1[iv]
            ku = V0[bu] - V1[iu]
            kv = V0[bv] - V1[iv]
            # exact integral of the product of two linear functions
            result["coupling"] += (
                c.B_iface[f] * length * (2 * ju * ku + ju * kv + jv * ku + 2 * jv * kv) / 6.0
            )
    return result


def export_coo(sys, file_path):
    """Free-dof matrix as ``row col value`` lines."""
    matrix = sys.free_matrix().tocoo()
    lines = [
        "# free-dof matrix %d x %d, nnz %d, bulk dofs first (n0=%d, n1=%d)"
        % (matrix.shape[0], matrix.shape[1], matrix.nnz, sys.n0, sys.n1),
        "# row col value",
    ]
    lines += [
        "%d %d %r" % (i, j, v)
        for i, j, v in zip(matrix.row.tolist(), matrix.col.tolist(), matrix.data.tolist())
    ]
    _write_content(file_path, "\n".join(lines) + "\n")
    logger.info("Matrix written: %s" % file_path)
