"""Cheaper variants of eigen-design that shrink the weighting problem.

* separation: solve the weighting problem per contiguous group of
  eigen-queries (sorted by eigenvalue), then solve a second weighting
  problem over one scale factor per group;
* principal: individual weights for the top-k eigen-queries and a single
  shared weight for all remaining nonzero-eigenvalue ones.

Both end with the usual column completion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigendesign import Strategy, complete_columns, eigen_design, eigen_queries, weighted_design
from .exceptions import ValidationError
from .weighting import U_FLOOR, WeightingProblem, optimize_weights, optimize_weights_many

MODES = ("full", "separation", "principal")


@dataclass(frozen=True)
class ReductionConfig:
    mode: str = "full"
    group_size: int | None = None
    principal_count: int | None = None

    def __post_init__(self):
        aliases = {"sep": "separation", "pv": "principal"}
        object.__setattr__(self, "mode", aliases.get(self.mode, self.mode))
        if self.mode not in MODES:
            raise ValidationError(f"unknown reduction mode {self.mode!r}")
        for name in ("group_size", "principal_count"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValidationError(f"{name} must be >= 1")


def default_group_size(r: int) -> int:
    return max(1, math.ceil(round(r ** (1 / 3), 9)))


def default_principal_count(r: int) -> int:
    return max(1, math.ceil(r / 10))


def eigen_separation(W, group_size: int | None = None, tol: float = 1e-8) -> Strategy:
    Q, sigma = eigen_queries(W)
    r = sigma.size
    if r == 0:
        raise ValidationError("workload is zero")
    ng = default_group_size(r) if group_size is None else int(group_size)
    if ng < 1:
        raise ValidationError("group size must be >= 1")
    ng = min(ng, r)
    groups = [np.arange(s, min(s + ng, r)) for s in range(0, r, ng)]
    records = []

    inner_u = np.zeros(r)
    probs = [WeightingProblem.from_design(Q[g], sigma[g]) for g in groups]
    for g, prob, sol in zip(groups, probs, optimize_weights_many(probs, tol=tol)):
        inner_u[g] = np.maximum(sol.u, U_FLOOR)
        records.append((prob, sol))

    sq = Q * Q
    comb_sq = np.array([inner_u[g] @ sq[g] for g in groups])
    comb_c = np.array([np.sum(sigma[g] / inner_u[g]) for g in groups])
    prob = WeightingProblem(comb_c, comb_sq)
    sol = optimize_weights(prob, tol=tol)
    records.append((prob, sol))

    u = inner_u.copy()
    for w, g in zip(sol.u, groups):
        u[g] *= max(w, U_FLOOR)
    return complete_columns(Strategy(weighted_design(Q, u), "reduced", tuple(records)))


def principal_vectors(W, principal_count: int | None = None, tol: float = 1e-8) -> Strategy:
    Q, sigma = eigen_queries(W)
    r = sigma.size
    if r == 0:
        raise ValidationError("workload is zero")
    kp = default_principal_count(r) if principal_count is None else int(principal_count)
    if not 1 <= kp <= r:
        raise ValidationError(f"principal count must lie in 1..{r}")
    sq = Q * Q
    c = sigma[:kp]
    rows = sq[:kp]
    if kp < r:
        c = np.append(c, sigma[kp:].sum())
        rows = np.vstack([rows, sq[kp:].sum(axis=0)])
    prob = WeightingProblem(c, rows)
    sol = optimize_weights(prob, tol=tol)
    v = np.maximum(sol.u, U_FLOOR)
    u = np.empty(r)
    u[:kp] = v[:kp]
    if kp < r:
        u[kp:] = v[kp]
    return complete_columns(Strategy(weighted_design(Q, u), "reduced", ((prob, sol),)))


def select_eigen(W, config: ReductionConfig | None = None, tol: float = 1e-8) -> Strategy:
    config = config or ReductionConfig()
    if config.mode == "separation":
        return eigen_separation(W, config.group_size, tol)
    if config.mode == "principal":
        return principal_vectors(W, config.principal_count, tol)
    return eigen_design(W, tol)
