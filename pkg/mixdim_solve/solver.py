# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

"""Block factorization of A00, Schur complement on the interface, PCG."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.sparse import issparse
from scipy.sparse.linalg import LinearOperator, spsolve, splu

from .config import _DEFAULT_MAXIT, _DEFAULT_RTOL, _DENSE_SCHUR_CAP
from .exception import FactorizationException, SolverException, SPDViolation
from .log import logger
from .tools import _parallel_map, _write_table


class SchurOperator:
    """Action of A11 - A10 A00^-1 A01 on the free interface dofs."""

    def __init__(self, system, factors, threads=1):
        self.system = system
        self._factors = factors
        self._threads = threads
        self.dense = None
        self.asymmetry = None
        self.b_tilde = system.b1 - system.A10 @ self.solve_bulk(system.b0)

    @property
    def n1(self):
        return self.system.n1

    @property
    def n_blocks(self):
        return len(self._factors)

    @property
    def factors(self):
        return list(self._factors)

    def solve_bulk(self, rhs):
        """A00^-1 rhs, one independent solve per region block."""
        rhs = np.asarray(rhs, dtype=float)
        result = np.zeros_like(rhs)

        def _solve(item):
            _region, start, stop, lu = item
            return lu.solve(np.ascontiguousarray(rhs[start:stop]))

        for (_region, start, stop, _lu), block in zip(
            self._factors, _parallel_map(_solve, self._factors, self._threads)
        ):
            result[start:stop] = block
        return result

    def apply_matrix_free(self, x):
        sys = self.system
        return sys.A11 @ x - sys.A10 @ self.solve_bulk(sys.A01 @ x)

    def matvec(self, x):
        if self.dense is not None:
            return self.dense @ x
        return self.apply_matrix_free(x)

    def columns(self, indices):
        """Dense columns of the Schur complement."""
        indices = np.asarray(indices, dtype=np.int64)
        if self.dense is not None:
            return self.dense[:, indices]
        unit = np.zeros((self.n1, len(indices)))
        unit[indices, np.arange(len(indices))] = 1.0
        return self.apply_matrix_free(unit)

    def galerkin(self, Q):
        """Q^T S Q for a dense or sparse (n1 x k) prolongation."""
        if issparse(Q):
            Q = Q.toarray()
        product = self.dense @ Q if self.dense is not None else self.apply_matrix_free(Q)
        result = Q.T @ product
        return 0.5 * (result + result.T)

    def as_linear_operator(self):
        return LinearOperator((self.n1, self.n1), matvec=self.matvec, dtype=float)


def _factor_block(system, region, start, stop):
    block = system.A00[start:stop, start:stop].tocsc()
    try:
        lu = splu(
            block,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options=dict(SymmetricMode=True),
        )
    except RuntimeError as e:
        raise FactorizationException(
            "Factorization of bulk region %d failed: %s" % (region, e), region=region
        )
    pivots = lu.U.diagonal()
    if not np.all(pivots > 1e-14 * np.max(np.abs(pivots))):
        raise FactorizationException(
            "Bulk block of region %d is not positive definite (pivot %g)"
            % (region, pivots.min()),
            region=region,
        )
    return region, start, stop, lu


def factor_bulk(system, threads=1):
    """Factor every region block of A00; returns the Schur operator."""
    factors = _parallel_map(
        lambda item: _factor_block(system, *item), system.region_blocks, threads
    )
    logger.debug(
        "Factored %d bulk blocks, largest %d dofs"
        % (len(factors), max([stop - start for _r, start, stop, _l in factors] or [0]))
    )
    return SchurOperator(system, factors, threads=threads)


def assemble_schur_dense(op, memory_cap=None):
    """Explicit Schur complement, built from the coupled columns per block."""
    if memory_cap is None:
        memory_cap = _DENSE_SCHUR_CAP
    if op.n1 > memory_cap:
        raise SolverException(
            "%d interface dofs exceed the dense cap of %d; build the local"
            " Galerkin matrices from Schur columns instead" % (op.n1, memory_cap)
        )
    sys = op.system
    dense = sys.A11.toarray()

    def _correction(item):
        _region, start, stop, lu = item
        coupling = sys.A01[start:stop]
        cols = np.unique(coupling.indices)
        if not len(cols):
            return cols, None
        block = coupling[:, cols].toarray()
        return cols, block.T @ lu.solve(block)

    for cols, correction in _parallel_map(_correction, op.factors, op._threads):
        if correction is not None:
            dense[np.ix_(cols, cols)] -= correction
    scale = np.max(np.abs(dense)) if dense.size else 0.0
    op.asymmetry = float(np.max(np.abs(dense - dense.T)) / scale) if scale else 0.0
    logger.debug("Dense Schur complement %d x %d, asymmetry %.3g" % (op.n1, op.n1, op.asymmetry))
    dense = 0.5 * (dense + dense.T)
    op.dense = dense
    return dense


@dataclass
class PCGResult:
    x: np.ndarray
    iterations: int
    residuals: list
    converged: bool
    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)

    @property
    def kappa(self):
        return lanczos_condition(self.alphas, self.betas)


def _as_function(operator):
    if operator is None:
        return lambda r: r.copy()
    for name in ("matvec", "apply"):
        method = getattr(operator, name, None)
        if callable(method):
            return method
    if callable(operator):
        return operator
    return lambda x: operator @ x


def pcg(op, precond=None, x0=None, rtol=None, maxit=None, b=None, callback=None):
    """Preconditioned conjugate gradients.

    Stops when sqrt(r^T T r) drops below ``rtol`` times its initial value.
    ``op`` is a :class:`SchurOperator` (right-hand side defaults to its
    reduced load) or any symmetric matrix/operator with ``b`` given.
    """
    rtol = _DEFAULT_RTOL if rtol is None else rtol
    maxit = _DEFAULT_MAXIT if maxit is None else maxit
    if b is None:
        b = getattr(op, "b_tilde", None)
        if b is None:
            raise SolverException("pcg needs a right-hand side")
    b = np.asarray(b, dtype=float)
    apply_a = _as_function(op)
    apply_t = _as_function(precond)

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_a(x) if x0 is not None else b.copy()
    z = apply_t(r)
    if z.shape != r.shape:
        raise SolverException("Preconditioner returned shape %s for %s" % (z.shape, r.shape))
    rz = float(r @ z)
    if rz < 0:
        raise SPDViolation("Preconditioner is not positive definite", value=rz)
    initial = math.sqrt(rz)
    residuals = [initial]
    result = PCGResult(x, 0, residuals, True)
    if initial == 0.0:
        return result
    p = z.copy()
    for iteration in range(1, maxit + 1):
        ap = apply_a(p)
        pap = float(p @ ap)
        if pap <= 0:
            raise SPDViolation(
                "Breakdown at iteration %d: p^T A p = %g" % (iteration, pap), value=pap
            )
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        z = apply_t(r)
        rz_new = float(r @ z)
        if rz_new < 0:
            raise SPDViolation("Preconditioner is not positive definite", value=rz_new)
        residuals.append(math.sqrt(rz_new))
        result.alphas.append(alpha)
        result.iterations = iteration
        if callback is not None:
            callback(iteration, x)
        if math.sqrt(rz_new) <= rtol * initial:
            result.converged = True
            logger.debug("PCG converged in %d iterations" % iteration)
            return result
        beta = rz_new / rz
        result.betas.append(beta)
        p = z + beta * p
        rz = rz_new
    result.converged = False
    logger.warning(
        "PCG not converged after %d iterations (relative residual %.3g)"
        % (maxit, residuals[-1] / initial)
    )
    return result


def lanczos_condition(alphas, betas):
    """Condition number of the Lanczos matrix built from the CG coefficients."""
    steps = len(alphas)
    if steps < 2:
        return 1.0
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas[: steps - 1], dtype=float)
    diagonal = 1.0 / alphas
    diagonal[1:] += betas / alphas[:-1]
    off = np.sqrt(betas) / alphas[:-1]
    eigenvalues = eigvalsh_tridiagonal(diagonal, off)
    if eigenvalues[0] <= 0:
        return math.inf
    return float(eigenvalues[-1] / eigenvalues[0])


def recover_bulk(op, U1):
    """Back substitution A00 U0 = b0 - A01 U1."""
    sys = op.system
    return op.solve_bulk(sys.b0 - sys.A01 @ np.asarray(U1, dtype=float))


def monolithic_solve(system):
    """Sparse direct solve of the whole free-dof system."""
    rhs = np.concatenate([system.b0, system.b1])
    solution = np.atleast_1d(spsolve(system.free_matrix().tocsc(), rhs))
    return solution[: system.n0], solution[system.n0:]


def write_residual_history(result, file_path):
    rows = [
        {"iteration": i, "residual": value} for i, value in enumerate(result.residuals)
    ]
    _write_table(
        file_path,
        ["iteration", "residual"],
        rows,
        header_lines=[
            "preconditioned residual sqrt(r^T T r) per PCG iteration",
            "converged=%s iterations=%d" % (result.converged, result.iterations),
        ],
    )


def cg_error_bound(kappa, iterations):
    """2 ((sqrt(kappa) - 1) / (sqrt(kappa) + 1))^l for l = 0 .. iterations."""
    steps = np.arange(iterations + 1)
    if not math.isfinite(kappa):
        return np.full(len(steps), 2.0)
    root = math.sqrt(max(kappa, 1.0))
    return 2.0 * ((root - 1.0) / (root + 1.0)) ** steps


@dataclass
class ErrorHistory:
    """Relative energy errors of the PCG iterates and their kappa bound."""

    errors: np.ndarray
    bounds: np.ndarray
    holds: bool


def energy_error_history(
    op, precond, exact, rtol=None, maxit=None, b=None, floor=1e-9
):
    """PCG from zero, recording |U - U_l|_S / |U|_S at every iteration.

    The bound uses the Lanczos estimate of kappa of the finished run;
    ``floor`` absorbs the rounding error of ``exact``.
    """
    exact = np.asarray(exact, dtype=float)
    apply_a = _as_function(op)

    def _norm(e):
        return math.sqrt(max(float(e @ apply_a(e)), 0.0))

    errors = [_norm(exact)]
    result = pcg(
        op,
        precond,
        rtol=rtol,
        maxit=maxit,
        b=b,
        callback=lambda _iteration, x: errors.append(_norm(exact - x)),
    )
    errors = np.array(errors)
    relative = errors / errors[0] if errors[0] > 0 else np.zeros(len(errors))
    bounds = cg_error_bound(result.kappa, result.iterations)
    holds = bool(np.all(relative <= bounds + floor))
    if not holds:
        worst = int(np.argmax(relative - bounds))
        logger.warning(
            "Energy error %.3g at iteration %d exceeds the kappa=%.4g bound %.3g"
            % (relative[worst], worst, result.kappa, bounds[worst])
        )
    return result, ErrorHistory(relative, bounds, holds)
