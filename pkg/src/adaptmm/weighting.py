"""Optimal weighting of a fixed set of design queries.

Given design rows q_i with costs c_i, choose squared weights u_i >= 0 to

    minimize    sum_i c_i / u_i
    subject to  sum_i u_i * q_ij**2 <= 1   for every cell j.

This is the semidefinite weighting program with its 2x2 blocks
[[u_i, 1], [1, v_i]] >= 0 eliminated: at an optimum v_i = 1/u_i, so the
reduced problem has the same optimum and argmin.

The Lagrangian dual has a closed form. For multipliers mu >= 0 on the cell
constraints, minimizing over u gives u_i = sqrt(c_i / a_i) with a = S^T mu
(S the p x n matrix of squared design entries), and after optimizing the
overall scale of mu the dual objective is

    g(nu) = (sum_i sqrt(c_i * (S^T nu)_i))**2,   nu on the simplex.

Any nu >= 0 gives a certified lower bound, which is how both the solver
and `verify_kkt` measure their optimality gap.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .exceptions import ConvergenceError, RankDeficientError, ValidationError, WeightingError
from .spectral import RANK_TOL

U_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class WeightingProblem:
    """Costs `c` (length p) and squared design entries `sq` (p x n).

    `sq` is normally ``Qd * Qd``, but any non-negative matrix describing how
    each weight loads onto each cell's sensitivity is accepted. The
    reductions use that to weight whole blocks of eigen-queries at once.
    """

    c: np.ndarray
    sq: np.ndarray
    Qd: np.ndarray | None = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        sq = np.atleast_2d(np.asarray(self.sq, dtype=float))
        if c.size < 1:
            raise ValidationError("need at least one design query")
        if sq.shape[0] != c.size:
            raise ValidationError(f"{c.size} costs but {sq.shape[0]} design rows")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValidationError("costs must be finite and non-negative")
        if np.any(sq < 0) or not np.all(np.isfinite(sq)):
            raise ValidationError("squared design entries must be finite and non-negative")
        if np.any(sq.sum(axis=1) == 0):
            raise ValidationError("design rows must be nonzero")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "sq", sq)

    @classmethod
    def from_design(cls, Qd, c):
        Qd = np.atleast_2d(np.asarray(Qd, dtype=float))
        return cls(c=c, sq=Qd * Qd, Qd=Qd)

    @property
    def p(self):
        return self.c.size

    @property
    def n(self):
        return self.sq.shape[1]

    @property
    def zero_cost(self):
        return self.c == 0


@dataclass(frozen=True, eq=False)
class WeightingSolution:
    u: np.ndarray
    objective: float
    gap: float
    active: tuple
    mu: np.ndarray | None = None
    iterations: int = 0

    @property
    def weights(self):
        """Row multipliers lambda_i = sqrt(u_i)."""
        return np.sqrt(self.u)


def design_costs(W, Qd, rel_tol: float = RANK_TOL) -> np.ndarray:
    """Squared column norms of W @ pinv(Qd).

    Costs below ``rel_tol * max`` are set to exactly zero so that null
    directions of the workload drop out of the optimization.
    """
    W = np.asarray(getattr(W, "matrix", W), dtype=float)
    Qd = np.atleast_2d(np.asarray(Qd, dtype=float))
    sv = np.linalg.svd(Qd, compute_uv=False)
    if Qd.shape[0] > Qd.shape[1] or sv.min() <= rel_tol * sv.max():
        raise RankDeficientError("design matrix must have full row rank")
    c = np.sum((W @ np.linalg.pinv(Qd)) ** 2, axis=0)
    if c.max() > 0:
        c[c <= rel_tol * c.max()] = 0.0
    return c


def dual_bound(c, sq, mu) -> float:
    """Lower bound on the optimum from multipliers mu >= 0 (any scale)."""
    c = np.asarray(c, dtype=float)
    mu = np.clip(np.asarray(mu, dtype=float), 0.0, None)
    total = mu.sum()
    if total <= 0:
        return 0.0
    a = np.asarray(sq) @ (mu / total)
    return float(np.sum(np.sqrt(c * a)) ** 2)


def _loads(B, u):
    return np.matmul(B, u[..., None])[..., 0]


def _batch_dual(c, B, mu):
    """dual_bound for a stack of problems: c (G, p), B (G, n, p), mu (G, n)."""
    total = mu.sum(axis=1, keepdims=True)
    nu = mu / np.where(total > 0, total, 1.0)
    a = np.matmul(nu[:, None, :], B)[:, 0, :]
    return np.sum(np.sqrt(c * a), axis=1) ** 2


def _barrier_solve(c, B, tol, max_iter):
    """Log-barrier Newton method on a stack of same-shaped problems.

    c is (G, p) with positive entries, B is (G, n, p) with no all-zero
    columns. All-zero rows (dead cells) are harmless. Each problem keeps
    its own barrier parameter and stops on its own certified gap.
    Returns u scaled to max load 1, cell multipliers, gaps and Newton
    iteration counts, one per problem.
    """
    G, n, p = B.shape
    live = B.sum(axis=2) > 0
    # minimizer of the Lagrangian at uniform multipliers, pulled inside
    u = np.sqrt(c / (B.sum(axis=1) / n))
    u *= 0.9 / _loads(B, u).max(axis=1, keepdims=True)
    f0 = np.sum(c / u, axis=1)
    scaled = u / _loads(B, u).max(axis=1, keepdims=True)
    fs = np.sum(c / scaled, axis=1)
    gap0 = np.maximum(1.0 - _batch_dual(c, B, live.astype(float)) / fs, 1e-3)
    t = n / (gap0 * f0)

    out_u = np.empty_like(u)
    out_mu = np.zeros((G, n))
    out_gap = np.full(G, np.inf)
    iters = np.zeros(G, dtype=int)
    best_u, best_gap = scaled.copy(), np.full(G, np.inf)
    stuck = np.zeros(G, dtype=bool)
    todo = np.arange(G)
    diag = np.arange(p)

    while todo.size:
        cc, BB, uu, tt = c[todo], B[todo], u[todo], t[todo]
        s = 1.0 - _loads(BB, uu)
        inv_s = 1.0 / s
        g = -tt[:, None] * cc / uu**2 + np.matmul(inv_s[:, None, :], BB)[:, 0, :]
        H = np.matmul(np.swapaxes(BB * (inv_s**2)[..., None], 1, 2), BB)
        H[:, diag, diag] += 2.0 * tt[:, None] * cc / uu**3
        try:
            du = -np.linalg.solve(H, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            du = -np.stack([np.linalg.lstsq(h, v, rcond=None)[0] for h, v in zip(H, g)])
        dec2 = -np.sum(g * du, axis=1)
        centered = (dec2 <= 1e-7) | stuck[todo]

        if centered.any():
            k = todo[centered]
            mu = np.where(live[k], 1.0 / (t[k, None] * s[centered]), 0.0)
            sc = u[k] / _loads(B[k], u[k]).max(axis=1, keepdims=True)
            fu = np.sum(c[k] / sc, axis=1)
            gap = (fu - _batch_dual(c[k], B[k], mu)) / fu
            better = gap < best_gap[k]
            best_u[k[better]] = sc[better]
            best_gap[k[better]] = gap[better]
            ok = gap <= tol
            kd = k[ok]
            out_u[kd], out_mu[kd], out_gap[kd] = sc[ok], mu[ok], gap[ok]
            bad = ~ok & (t[k] * fu > 1e15)
            if bad.any():
                j = k[bad][0]
                raise ConvergenceError(
                    f"weighting solver stalled at relative gap {best_gap[j]:.2e}",
                    best_u=best_u[j], gap=best_gap[j])
            t[k[~ok]] *= 50.0
            stuck[k] = False

        mv = ~centered
        if mv.any():
            k = todo[mv]
            uu, dd, ss, isv = u[k], du[mv], s[mv], inv_s[mv]
            Bd = _loads(B[k], dd)
            with np.errstate(divide="ignore", invalid="ignore"):
                lim_u = np.where(dd < 0, -uu / dd, np.inf).min(axis=1)
                lim_s = np.where(Bd > 0, ss / Bd, np.inf).min(axis=1)
            step = np.minimum(1.0, 0.99 * np.minimum(lim_u, lim_s))
            tk, ck, d2 = t[k], c[k], dec2[mv]
            pending = np.ones(k.size, dtype=bool)
            # barrier change evaluated termwise; phi itself is too large to difference
            while pending.any():
                st = step[:, None]
                un = uu + st * dd
                dphi = (tk * np.sum(-st * ck * dd / (uu * un), axis=1)
                        - np.sum(np.log1p(-st * Bd * isv), axis=1))
                pending &= ~(dphi <= -0.25 * step * d2)
                pending &= step > 1e-12
                step = np.where(pending, 0.5 * step, step)
            moved = step > 1e-12
            u[k[moved]] = uu[moved] + step[moved, None] * dd[moved]
            stuck[k[~moved]] = True
            iters[k[moved]] += 1
            if iters[k].max() >= max_iter:
                j = k[np.argmax(iters[k])]
                raise ConvergenceError("weighting solver hit its iteration cap",
                                       best_u=best_u[j], gap=best_gap[j])

        todo = np.flatnonzero(np.isinf(out_gap))
    return out_u, out_mu, out_gap, iters


def _solution(prob, pos, live, u_p, mu_live, gap, iters, scale):
    u = np.zeros(prob.p)
    u[pos] = u_p
    mu = np.zeros(prob.n)
    mu[live] = mu_live * scale
    load = prob.sq.T @ u
    active = tuple(int(j) for j in np.flatnonzero(load >= 1.0 - 1e-6))
    return WeightingSolution(u=u, objective=float(np.sum(prob.c[pos] / u_p)), gap=float(gap),
                             active=active, mu=mu, iterations=int(iters))


def optimize_weights(prob: WeightingProblem, tol: float = 1e-8,
                     max_iter: int = 100_000) -> WeightingSolution:
    """Solve the weighting problem to relative duality gap `tol`.

    Zero-cost rows are removed beforehand and come back with u_i = 0. The
    returned u is scaled so the largest cell constraint is exactly 1.
    """
    pos = prob.c > 0
    if not pos.any():
        raise WeightingError("all costs are zero; nothing to optimize")
    cp = prob.c[pos]
    B = prob.sq[pos].T
    live = B.sum(axis=1) > 0
    scale = cp.max()
    u_p, mu, gap, iters = _barrier_solve((cp / scale)[None], B[live][None], tol, max_iter)
    return _solution(prob, pos, live, u_p[0], mu[0], gap[0], iters[0], scale)


def optimize_weights_many(probs, tol: float = 1e-8,
                          max_iter: int = 100_000) -> list[WeightingSolution]:
    """Solve independent weighting problems, batching those of equal shape.

    Gives the same answers as calling `optimize_weights` on each problem,
    but runs the Newton iterations of same-shaped problems together.
    """
    probs = list(probs)
    sols = [None] * len(probs)
    buckets = {}
    for i, pr in enumerate(probs):
        if np.all(pr.c > 0):
            buckets.setdefault(pr.sq.shape, []).append(i)
        else:
            sols[i] = optimize_weights(pr, tol, max_iter)
    for idx in buckets.values():
        scales = np.array([probs[i].c.max() for i in idx])
        c = np.stack([probs[i].c for i in idx]) / scales[:, None]
        B = np.stack([probs[i].sq.T for i in idx])
        u, mu, gap, iters = _barrier_solve(c, B, tol, max_iter)
        for j, i in enumerate(idx):
            pr = probs[i]
            live = pr.sq.sum(axis=0) > 0
            sols[i] = _solution(pr, np.ones(pr.p, dtype=bool), live, u[j], mu[j][live],
                                gap[j], iters[j], scales[j])
    return sols


@dataclass
class KKTReport:
    feasibility: float
    stationarity: float
    complementarity: float
    gap: float
    mu: np.ndarray
    passed: bool
    checks: dict

    def __str__(self):
        flags = " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in self.checks.items())
        return (f"KKT {'PASS' if self.passed else 'FAIL'}: feas={self.feasibility:.2e} "
                f"stat={self.stationarity:.2e} cs={self.complementarity:.2e} "
                f"gap={self.gap:.2e} [{flags}]")


def verify_kkt(prob: WeightingProblem, sol: WeightingSolution, tol: float = 1e-5,
               active_tol: float = 1e-4) -> KKTReport:
    """Check first-order optimality of `sol` independently of the solver.

    Multipliers are fitted by non-negative least squares on the
    near-active cell constraints, so the stationarity residual is a real
    test of u rather than an echo of the solver's duals. The gap uses the
    closed-form dual, which is a valid lower bound for any mu >= 0.
    """
    u = np.asarray(sol.u, dtype=float)
    c, sq = prob.c, prob.sq
    load = sq.T @ u
    obj = float(np.sum(c[c > 0] / np.maximum(u[c > 0], np.finfo(float).tiny)))
    feas = max(0.0, float(load.max() - 1.0), float(-u.min()))
    zero_ok = bool(np.all(u[c == 0] == 0)) and bool(np.all(u[c > 0] > 0))

    supp = (u > 0) & (c > 0)
    r = c[supp] / u[supp] ** 2
    act = np.flatnonzero(load >= 1.0 - active_tol)
    mu = np.zeros(prob.n)
    if act.size:
        A = sq[np.ix_(supp, act)]
        colscale = np.linalg.norm(A, axis=0)
        colscale[colscale == 0] = 1.0
        coef, _ = nnls(A / colscale, r, maxiter=50 * max(A.shape))
        mu[act] = coef / colscale
    resid = float(np.linalg.norm(sq[supp] @ mu - r) / np.linalg.norm(r))
    cs = float(np.sum(mu * np.clip(1.0 - load, 0.0, None)) / obj)

    lower = dual_bound(c, sq, mu)
    if sol.mu is not None:
        lower = max(lower, dual_bound(c, sq, sol.mu))
    gap = (obj - lower) / obj

    checks = {
        "feasible": feas <= 1e-8 and zero_ok,
        "stationary": resid <= tol,
        "slackness": cs <= tol,
        "gap": gap <= tol,
    }
    return KKTReport(feasibility=feas, stationarity=resid, complementarity=cs, gap=gap,
                     mu=mu, passed=all(checks.values()), checks=checks)


def dump_debug_csv(path, prob: WeightingProblem, sol: WeightingSolution, report=None):
    """Write (c, u, squared design rows) per design query and mu per cell."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["# gap", repr(float(sol.gap))])
        w.writerow(["kind", "index", "c", "u"] + [f"sq{j}" for j in range(prob.n)])
        for i in range(prob.p):
            w.writerow(["design", i, repr(float(prob.c[i])), repr(float(sol.u[i]))]
                       + [repr(float(v)) for v in prob.sq[i]])
        mu = report.mu if report is not None else sol.mu
        if mu is not None:
            w.writerow(["mu", ""] + ["", ""] + [repr(float(v)) for v in mu])
