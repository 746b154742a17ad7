"""Strategy selection with weighted eigen-queries.

The eigen-queries of W are the eigenvectors of W^T W. We weight them by
solving the design-weighting program with costs equal to the eigenvalues,
then pad each column up to the common sensitivity with diagonal rows. The
padding adds measurements without raising sensitivity, so it can only
lower error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .spectral import eigendecompose, gram
from .weighting import U_FLOOR, WeightingProblem, WeightingSolution, optimize_weights

PROVENANCES = ("eigen", "identity", "wavelet", "hierarchical", "workload", "reduced", "adhoc")
COMPLETION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Strategy:
    matrix: np.ndarray
    provenance: str = "adhoc"
    solutions: tuple = ()

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.matrix, dtype=float, copy=True))
        if not np.any(A):
            raise ValidationError("strategy matrix is all zeros")
        if not np.all(np.any(A != 0, axis=1)):
            raise ValidationError("strategy contains an all-zero row")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

    @property
    def p(self):
        return self.matrix.shape[0]

    @property
    def n(self):
        return self.matrix.shape[1]

    @property
    def column_norms(self):
        return np.sqrt(np.sum(self.matrix**2, axis=0))

    @property
    def sensitivity(self) -> float:
        return float(self.column_norms.max())


def complete_columns(Aprime: Strategy) -> Strategy:
    """Append diagonal rows so every column reaches the maximum column norm.

    Rows whose padding would be (numerically) zero are dropped, so a strategy
    with equal column norms comes back unchanged.
    """
    norms2 = np.sum(Aprime.matrix**2, axis=0)
    M2 = norms2.max()
    pad2 = M2 - norms2
    need = np.flatnonzero(pad2 > COMPLETION_TOL * M2)
    if need.size == 0:
        return Aprime
    D = np.zeros((need.size, Aprime.n))
    D[np.arange(need.size), need] = np.sqrt(pad2[need])
    return Strategy(np.vstack([Aprime.matrix, D]), Aprime.provenance, Aprime.solutions)


def weighted_design(Q, u) -> np.ndarray:
    """diag(sqrt(u)) @ Q, dropping rows with u == 0."""
    keep = u > 0
    return np.sqrt(u[keep])[:, None] * Q[keep]


def eigen_queries(W):
    """Eigen-queries and eigenvalues of W restricted to nonzero eigenvalues."""
    dec = eigendecompose(gram(W))
    return dec.Q[:dec.r], dec.D[:dec.r]


def eigen_design_uncompleted(W, tol: float = 1e-8):
    """Weighted eigen-queries before column completion, plus the solve."""
    Q, sigma = eigen_queries(W)
    if Q.shape[0] == 0:
        raise ValidationError("workload is zero")
    prob = WeightingProblem.from_design(Q, sigma)
    sol = optimize_weights(prob, tol=tol)
    u = np.maximum(sol.u, U_FLOOR)
    return Strategy(weighted_design(Q, u), "eigen", (prob, sol)), prob, sol


def eigen_design(W, tol: float = 1e-8) -> Strategy:
    """Eigen-Design strategy for workload W (matrix or `Workload`)."""
    Aprime, _, _ = eigen_design_uncompleted(W, tol)
    return complete_columns(Aprime)


def solutions_of(strategy: Strategy) -> list[tuple[WeightingProblem, WeightingSolution]]:
    """(problem, solution) pairs recorded while building a strategy."""
    s = strategy.solutions
    if len(s) == 2 and isinstance(s[0], WeightingProblem):
        return [s]
    return list(s)
