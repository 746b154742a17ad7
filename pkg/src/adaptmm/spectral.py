"""Gram matrices, sorted symmetric eigendecomposition and numerical rank."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NotPSDError

RANK_TOL = 1e-10
CLAMP_TOL = 1e-8


def _as_matrix(W):
    return np.asarray(getattr(W, "matrix", W), dtype=float)


def gram(W) -> np.ndarray:
    """W^T W, symmetrized."""
    M = _as_matrix(W)
    G = M.T @ M
    return 0.5 * (G + G.T)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """S = Q.T @ diag(D) @ Q with eigen-queries as the rows of Q."""

    Q: np.ndarray
    D: np.ndarray
    r: int

    @property
    def n(self):
        return self.D.size

    def reconstruct(self):
        return self.Q.T @ (self.D[:, None] * self.Q)


def eigendecompose(S, rel_tol: float = RANK_TOL) -> SpectralDecomposition:
    """Eigenvalues in non-increasing order, rows of Q the matching eigenvectors.

    Negative eigenvalues down to -1e-8 * max|eig| are clamped to zero;
    anything more negative means S was not PSD. Each eigenvector's sign is
    fixed so that its largest-magnitude entry is positive.
    """
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    scale = max(np.abs(w).max(initial=0.0), np.finfo(float).tiny)
    if w.size and w[-1] < -CLAMP_TOL * scale:
        raise NotPSDError(f"matrix is not positive semidefinite (eigenvalue {w[-1]:.3e})")
    w = np.where(w < 0, 0.0, w)
    Q = V.T.copy()
    pivots = np.argmax(np.abs(Q), axis=1)
    signs = np.sign(Q[np.arange(Q.shape[0]), pivots])
    signs[signs == 0] = 1.0
    Q *= signs[:, None]
    r = _rank_of(w, rel_tol)
    Q.setflags(write=False)
    w.setflags(write=False)
    return SpectralDecomposition(Q, w, r)


def _rank_of(D, rel_tol):
    if D.size == 0 or D[0] <= 0:
        return 0
    return int(np.count_nonzero(D > rel_tol * D[0]))


def rank(decomp: SpectralDecomposition, rel_tol: float = RANK_TOL) -> int:
    return _rank_of(np.asarray(decomp.D), rel_tol)


def workload_rank(W, rel_tol: float = RANK_TOL) -> int:
    return rank(eigendecompose(gram(W)), rel_tol)
