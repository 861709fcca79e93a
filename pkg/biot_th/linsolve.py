"""
Direct sparse solves for the coupled saddle-point systems

SuperLU with a COLAMD fill-reducing column ordering and threshold partial
pivoting handles the symmetric-indefinite block matrices. Every solve checks
the residual contract and falls back to iterative refinement before giving up.
"""

import threading

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import structlog

from biot_th.shared.errors import SingularMatrixError, SolverConvergenceError

logger = structlog.get_logger(__name__)

RESIDUAL_TOLERANCE = 1e-10
MAX_REFINEMENT_STEPS = 2
# |u_ii| below this fraction of max |u_jj| is reported as a zero pivot
PIVOT_TOLERANCE = 1e-14
# largest order for which a failed factorization is diagnosed with a dense QR
DENSE_DIAGNOSIS_LIMIT = 2000


class Factorization:
    """
    LU factors of one sparse matrix, reusable for any number of solves

    Solves are serialized internally, so one factorization can be shared by
    several worker threads.
    """

    def __init__(self, matrix: sp.spmatrix, tolerance: float = RESIDUAL_TOLERANCE):
        self.matrix = sp.csc_matrix(matrix)
        self.tolerance = tolerance
        self.solve_count = 0
        self._lock = threading.Lock()
        try:
            self._lu = spla.splu(self.matrix, permc_spec="COLAMD")
        except RuntimeError as e:
            pivot = deficient_column(self.matrix)
            raise SingularMatrixError(f"factorization failed in column {pivot}: {e}", pivot=pivot) from e

        diagonal = np.abs(self._lu.U.diagonal())
        scale = diagonal.max() if diagonal.size else 0.0
        small = np.flatnonzero(diagonal <= PIVOT_TOLERANCE * scale)
        if scale == 0.0 or small.size:
            pivot = int(np.argsort(self._lu.perm_c)[small[0]]) if small.size else 0
            raise SingularMatrixError(f"zero pivot in column {pivot}", pivot=pivot)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def _residual(self, x: np.ndarray, rhs: np.ndarray, norm: float) -> tuple[np.ndarray, float]:
        r = rhs - self.matrix @ x
        return r, float(np.linalg.norm(r)) / norm

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """
        Solve A x = rhs.

        Raises:
            SolverConvergenceError: If the relative residual stays above tolerance
        """
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.shape[0],):
            raise ValueError(f"rhs has shape {rhs.shape}, expected ({self.shape[0]},)")
        norm = float(np.linalg.norm(rhs))
        with self._lock:
            self.solve_count += 1
            if norm == 0.0:
                return np.zeros_like(rhs)
            x = self._lu.solve(rhs)
            r, residual = self._residual(x, rhs, norm)
            steps = 0
            while residual >= self.tolerance and steps < MAX_REFINEMENT_STEPS:
                x = x + self._lu.solve(r)
                r, residual = self._residual(x, rhs, norm)
                steps += 1
        if not np.isfinite(residual) or residual >= self.tolerance:
            raise SolverConvergenceError(
                f"relative residual {residual:.3e} above {self.tolerance:.1e}",
                residual=residual,
            )
        if steps:
            logger.debug("iterative_refinement", steps=steps, residual=residual)
        return x


def deficient_column(matrix: sp.spmatrix) -> int | None:
    """
    Locate a column responsible for the rank deficiency of a square matrix.

    Structurally empty columns are reported first. Otherwise a column-pivoted
    QR ranks the columns and the first one past the numerical rank is returned.
    Returns None when the matrix is too large for the dense diagnosis.
    """
    csc = sp.csc_matrix(matrix)
    empty = np.flatnonzero(np.diff(csc.indptr) == 0)
    if empty.size:
        return int(empty[0])
    n = csc.shape[1]
    if n > DENSE_DIAGNOSIS_LIMIT:
        logger.warning("singular_column_unknown", size=n)
        return None
    r, perm = sla.qr(csc.toarray(), mode="r", pivoting=True)
    diagonal = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diagonal > PIVOT_TOLERANCE * diagonal[0] * n))
    return int(perm[min(rank, n - 1)])


def factorize(matrix: sp.spmatrix, tolerance: float = RESIDUAL_TOLERANCE) -> Factorization:
    """
    Factorize a square sparse matrix.

    Raises:
        ValueError: If the matrix is not square
        SingularMatrixError: If a zero pivot is met
    """
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"matrix must be square, got {matrix.shape}")
    factorization = Factorization(matrix, tolerance=tolerance)
    logger.debug("factorized", size=matrix.shape[0], nnz=matrix.nnz)
    return factorization


def solve(factorization: Factorization, rhs: np.ndarray) -> np.ndarray:
    """Solve with an existing factorization (see Factorization.solve)"""
    return factorization.solve(rhs)
