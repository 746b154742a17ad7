"""Gaussian and matrix mechanisms under (eps, delta)-differential privacy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import AnswerabilityError, ValidationError
from .spectral import RANK_TOL

ANSWERABILITY_TOL = 1e-8


def _mat(A):
    return np.atleast_2d(np.asarray(getattr(A, "matrix", A), dtype=float))


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy budget plus the calibration constant inside the log.

    ``P = 2 ln(calibration / delta) / eps**2`` and the Gaussian scale for a
    matrix A is ``||A||_2 * sqrt(P)``. The constant defaults to 2.
    """

    eps: float
    delta: float
    calibration: float = 2.0

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ValidationError(f"eps must be positive, got {self.eps}")
        if not 0 < self.delta < 1:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.calibration > 0:
            raise ValidationError("calibration constant must be positive")

    @property
    def P(self) -> float:
        return 2.0 * math.log(self.calibration / self.delta) / self.eps**2

    def sigma_scale(self, A) -> float:
        return sensitivity_l2(A) * math.sqrt(self.P)


def privacy_factor(pp: PrivacyParams | None) -> float:
    """P(eps, delta), or 1 when no parameters are given (unit-P accounting)."""
    return 1.0 if pp is None else pp.P


def sensitivity_l2(A) -> float:
    """Largest column L2 norm."""
    M = _mat(A)
    return float(np.sqrt(np.max(np.sum(M * M, axis=0))))


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Independent stream per (seed, trial index)."""
    return np.random.default_rng([int(seed), int(trial)])


def gaussian_mechanism(W, x, pp: PrivacyParams, seed: int) -> np.ndarray:
    M = _mat(W)
    x = np.asarray(x, dtype=float).ravel()
    if M.shape[1] != x.size:
        raise ValidationError(f"query matrix has {M.shape[1]} columns, data vector {x.size}")
    noise = trial_rng(seed).normal(0.0, pp.sigma_scale(M), M.shape[0])
    return M @ x + noise


class Pseudoinverse:
    """A+ of a strategy via the eigendecomposition of A^T A.

    Eigenvalues at or below ``rel_tol * max`` are treated as zero, so for a
    rank-deficient A this is the minimum-norm least-squares inverse on its
    row space.
    """

    def __init__(self, A, rel_tol: float = RANK_TOL):
        A = _mat(A)
        if not np.any(A):
            raise ValidationError("strategy matrix is all zeros")
        G = A.T @ A
        G = 0.5 * (G + G.T)
        w, V = np.linalg.eigh(G)
        keep = w > rel_tol * w.max()
        self.A = A
        self.V = V[:, keep]
        self.w = w[keep]
        self.rank = int(keep.sum())
        self.gram_pinv = (self.V / self.w) @ self.V.T
        self.matrix = self.gram_pinv @ A.T

    def solve(self, y):
        return self.matrix @ y

    def projector(self):
        """Orthogonal projector onto the row space of A."""
        return self.V @ self.V.T


def least_squares_estimate(A, y) -> np.ndarray:
    """x_hat = A+ y. Accepts a single vector or one column per trial."""
    return Pseudoinverse(A).solve(np.asarray(y, dtype=float))


def check_answerable(W, pinv: Pseudoinverse, tol: float = ANSWERABILITY_TOL):
    W = _mat(W)
    if W.shape[1] != pinv.A.shape[1]:
        raise ValidationError(
            f"workload has {W.shape[1]} columns, strategy has {pinv.A.shape[1]}")
    resid = np.linalg.norm(W - W @ pinv.projector())
    if resid > tol * np.linalg.norm(W):
        raise AnswerabilityError(
            f"workload is not answerable by this strategy (residual {resid:.3e})")


@dataclass(frozen=True, eq=False)
class MechanismOutput:
    answers: np.ndarray
    xhat: np.ndarray
    seed: int


def matrix_mechanism(W, A, x, pp: PrivacyParams, seed: int, trial: int = 0,
                     pinv: Pseudoinverse | None = None) -> MechanismOutput:
    """Measure A with Gaussian noise, infer x by least squares, answer W.

    x_hat is only determined on the row space of A; off it we return the
    minimum-norm solution.
    """
    W = _mat(W)
    x = np.asarray(x, dtype=float).ravel()
    pinv = pinv or Pseudoinverse(A)
    check_answerable(W, pinv)
    if x.size != pinv.A.shape[1]:
        raise ValidationError(f"data vector has {x.size} cells, strategy {pinv.A.shape[1]}")
    rng = trial_rng(seed, trial)
    y = pinv.A @ x + rng.normal(0.0, pp.sigma_scale(pinv.A), pinv.A.shape[0])
    xhat = pinv.solve(y)
    return MechanismOutput(answers=W @ xhat, xhat=xhat, seed=seed)


def run_trials(W, A, x, pp: PrivacyParams, seed: int, trials: int) -> np.ndarray:
    """Noisy workload answers for trials 0..trials-1, shape (trials, m).

    Row t draws the same noise as ``matrix_mechanism(..., seed, trial=t)``;
    the batched solve may differ from it in the last bits.
    """
    W = _mat(W)
    pinv = Pseudoinverse(A)
    check_answerable(W, pinv)
    x = np.asarray(x, dtype=float).ravel()
    Ax = pinv.A @ x
    sigma = pp.sigma_scale(pinv.A)
    p = pinv.A.shape[0]
    Y = np.empty((p, trials))
    for t in range(trials):
        Y[:, t] = Ax + trial_rng(seed, t).normal(0.0, sigma, p)
    return (W @ pinv.solve(Y)).T
