"""Fixed strategies from prior work, used as comparison points."""

from __future__ import annotations

import math

import numpy as np

from .domain import DomainShape
from .eigendesign import Strategy
from .exceptions import UnsupportedShapeError, ValidationError
from .mechanism import PrivacyParams, privacy_factor, sensitivity_l2


def _shape(shape):
    return shape if isinstance(shape, DomainShape) else DomainShape(shape)


def _kron(mats):
    out = np.ones((1, 1))
    for M in mats:
        out = np.kron(out, M)
    return out


def identity_strategy(n: int) -> Strategy:
    if n < 1:
        raise ValidationError("n must be >= 1")
    return Strategy(np.eye(n), "identity")


def haar_matrix(d: int) -> np.ndarray:
    """Unnormalized Haar basis: the all-ones row, then +1/-1 split rows
    level by level, blocks left to right."""
    if d < 1 or d & (d - 1):
        raise UnsupportedShapeError(f"wavelet strategy needs power-of-two sizes, got {d}")
    rows = [np.ones(d)]
    block = d
    while block > 1:
        half = block // 2
        for start in range(0, d, block):
            r = np.zeros(d)
            r[start:start + half] = 1.0
            r[start + half:start + block] = -1.0
            rows.append(r)
        block = half
    return np.array(rows)


def wavelet_strategy(shape) -> Strategy:
    shape = _shape(shape)
    return Strategy(_kron([haar_matrix(d) for d in shape.dims]), "wavelet")


def _tree_intervals(lo, hi, fanout):
    """Breadth-first node intervals [lo, hi) of a fanout-ary tree."""
    out, frontier = [], [(lo, hi)]
    while frontier:
        nxt = []
        for a, b in frontier:
            out.append((a, b))
            size = b - a
            if size <= 1:
                continue
            parts = min(fanout, size)
            base, extra = divmod(size, parts)
            start = a
            for i in range(parts):
                step = base + (1 if i < extra else 0)
                nxt.append((start, start + step))
                start += step
        frontier = nxt
    return out


def hierarchy_matrix(d: int, fanout: int = 2) -> np.ndarray:
    if fanout < 2:
        raise ValidationError("fanout must be >= 2")
    ivs = _tree_intervals(0, d, fanout)
    H = np.zeros((len(ivs), d))
    for r, (a, b) in enumerate(ivs):
        H[r, a:b] = 1.0
    return H


def hierarchy_strategy(shape, fanout: int = 2) -> Strategy:
    """Tree of interval counts per dimension (root first), combined by
    Kronecker product. Uneven splits put the extra cell on the left."""
    shape = _shape(shape)
    return Strategy(_kron([hierarchy_matrix(d, fanout) for d in shape.dims]), "hierarchical")


def workload_strategy(W) -> Strategy:
    return Strategy(np.asarray(getattr(W, "matrix", W), dtype=float), "workload")


def gaussian_baseline_error(W, pp: PrivacyParams | None = None) -> float:
    """Error of answering W directly with the Gaussian mechanism, no inference:
    sqrt(m * P * ||W||_2**2)."""
    M = np.atleast_2d(np.asarray(getattr(W, "matrix", W), dtype=float))
    return math.sqrt(M.shape[0] * privacy_factor(pp) * sensitivity_l2(M) ** 2)
