"""Analytic and empirical error of the matrix mechanism.

Workload error follows the closed form

    Error_A(W) = ||A||_2 * sqrt(P * trace(W^T W (A^T A)^+))

with no 1/m factor. The per-query root-mean-square form (divide the
squared error by m) is available as `ErrorReport.rms_error`. A Monte-Carlo
rmse averaged over queries estimates that form, not `workload_error`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ValidationError
from .mechanism import (PrivacyParams, Pseudoinverse, check_answerable, privacy_factor,
                        run_trials)
from .spectral import eigendecompose, gram


def _mat(A):
    return np.atleast_2d(np.asarray(getattr(A, "matrix", A), dtype=float))


def _eigvals(W):
    """Eigenvalues of W^T W with round-off in the null space set to zero."""
    dec = eigendecompose(gram(W))
    D = np.array(dec.D)
    D[dec.r:] = 0.0
    return D


def svdb(W) -> float:
    """Singular value bound (1/n) * (sum_i sqrt(sigma_i))**2, sigma = eig(W^T W)."""
    sig = _eigvals(W)
    return float(np.sum(np.sqrt(sig)) ** 2 / sig.size)


def lower_bound(W, pp: PrivacyParams | None = None) -> float:
    return math.sqrt(privacy_factor(pp) * svdb(W))


def thm3_cap(W) -> float:
    """Guaranteed ratio (n * sigma_1 / svdb)**(1/4) of eigen-design error to the bound."""
    sig = _eigvals(W)
    if sig[0] <= 0:
        raise ValidationError("workload is zero")
    return float((sig.size * sig[0] / svdb(W)) ** 0.25)


@dataclass
class ErrorReport:
    workload_error: float
    unitP_squared: float
    per_query: np.ndarray
    svdb: float
    lower_bound: float
    ratio_to_bound: float
    thm3_cap: float
    P: float
    m: int
    n: int

    @property
    def rms_error(self) -> float:
        """Root mean square over queries: workload_error / sqrt(m)."""
        return self.workload_error / math.sqrt(self.m)

    def as_dict(self):
        d = asdict(self)
        d.pop("per_query")
        d["rms_error"] = self.rms_error
        return {k: v.item() if isinstance(v, np.generic) else v for k, v in d.items()}

    def to_record(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in self.as_dict().items())

    @classmethod
    def csv_header(cls):
        return ["workload_error", "unitP_squared", "rms_error", "svdb", "lower_bound",
                "ratio_to_bound", "thm3_cap", "P", "m", "n"]

    def csv_row(self):
        d = self.as_dict()
        return [repr(d[k]) for k in self.csv_header()]


def unit_squared_error(W, A, pinv: Pseudoinverse | None = None) -> float:
    """||A||_2**2 * trace(W^T W (A^T A)^+)."""
    W = _mat(W)
    pinv = pinv or Pseudoinverse(A)
    check_answerable(W, pinv)
    WA = W @ pinv.matrix
    return float(np.max(np.sum(pinv.A**2, axis=0)) * np.sum(WA * WA))


def workload_error(W, A, pp: PrivacyParams | None = None) -> ErrorReport:
    """Full analytic report for answering W with strategy A.

    `pp=None` means unit privacy factor (P = 1).
    """
    W = _mat(W)
    pinv = Pseudoinverse(A)
    check_answerable(W, pinv)
    P = privacy_factor(pp)
    sens2 = float(np.max(np.sum(pinv.A**2, axis=0)))
    WA = W @ pinv.matrix
    row2 = np.sum(WA * WA, axis=1)
    unit2 = sens2 * float(row2.sum())
    err = math.sqrt(P * unit2)
    sv = svdb(W)
    lb = math.sqrt(P * sv)
    return ErrorReport(workload_error=err, unitP_squared=unit2,
                       per_query=np.sqrt(P * sens2 * row2), svdb=sv, lower_bound=lb,
                       ratio_to_bound=err / lb if lb > 0 else math.inf,
                       thm3_cap=thm3_cap(W), P=P, m=W.shape[0], n=W.shape[1])


@dataclass
class EmpiricalReport:
    rmse: float
    per_query_rmse: np.ndarray
    relative_per_query: np.ndarray
    trials: int

    @property
    def total_rmse(self) -> float:
        """sqrt(mean over trials of the summed squared deviation)."""
        return self.rmse * math.sqrt(self.per_query_rmse.size)

    @property
    def mean_relative(self) -> float:
        return float(np.mean(self.relative_per_query))


def empirical_error(W, A, x, pp: PrivacyParams, trials: int, seed: int,
                    sanity: float = 1.0) -> EmpiricalReport:
    """Monte-Carlo error over `trials` seeded runs of the matrix mechanism.

    Relative error per query is |estimate - truth| / max(|truth|, sanity),
    averaged over trials.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if sanity <= 0:
        raise ValidationError("sanity bound must be positive")
    W = _mat(W)
    truth = W @ np.asarray(x, dtype=float).ravel()
    ans = run_trials(W, A, x, pp, seed, trials)
    dev = ans - truth
    sq = dev * dev
    per_q = np.sqrt(np.mean(sq, axis=0))
    rel = np.mean(np.abs(dev), axis=0) / np.maximum(np.abs(truth), sanity)
    return EmpiricalReport(rmse=float(math.sqrt(math.fsum(sq.ravel()) / sq.size)),
                           per_query_rmse=per_q, relative_per_query=rel, trials=trials)
