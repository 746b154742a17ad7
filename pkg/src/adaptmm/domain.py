"""Data vectors and workload matrices.

Cells are linearized row-major over the attribute order, so the last
attribute varies fastest. Every builder and the record ingester share
this convention.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import IngestionError, InvalidCellConditions, ValidationError

FAMILIES = ("range", "marginal", "range-marginal", "cdf", "predicate", "adhoc")


@dataclass(frozen=True)
class DomainShape:
    dims: tuple

    def __init__(self, dims):
        if isinstance(dims, (int, np.integer)):
            dims = (dims,)
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise ValidationError("domain needs at least one attribute")
        if any(d < 1 for d in dims):
            raise ValidationError(f"every dimension must be >= 1, got {list(dims)}")
        object.__setattr__(self, "dims", dims)

    @property
    def n(self) -> int:
        return math.prod(self.dims)

    @property
    def k(self) -> int:
        return len(self.dims)

    def index(self, multi) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.dims))

    def multi_index(self, i: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(i, self.dims))


# --- cell conditions -------------------------------------------------------


@dataclass(frozen=True)
class CategoryBucket:
    values: frozenset

    def matches(self, value) -> bool:
        return str(value).strip() in self.values

    def __str__(self):
        return "|".join(sorted(self.values))


@dataclass(frozen=True)
class RangeBucket:
    """Half-open numeric interval [lo, hi)."""

    lo: float
    hi: float

    def matches(self, value) -> bool:
        try:
            v = float(value)
        except (TypeError, ValueError):
            return False
        return self.lo <= v < self.hi

    def __str__(self):
        return f"[{self.lo:g},{self.hi:g})"


@dataclass(frozen=True)
class Attribute:
    name: str
    buckets: tuple

    @classmethod
    def categorical(cls, name, categories):
        """One bucket per entry; an entry may itself be a set of categories."""
        buckets = []
        for c in categories:
            vals = {str(c)} if isinstance(c, (str, int, float)) else {str(v) for v in c}
            buckets.append(CategoryBucket(frozenset(v.strip() for v in vals)))
        return cls(name, tuple(buckets))

    @classmethod
    def numeric(cls, name, edges):
        edges = [float(e) for e in edges]
        if len(edges) < 2:
            raise InvalidCellConditions(f"attribute {name!r}: need at least two edges")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise InvalidCellConditions(f"attribute {name!r}: edges must be strictly increasing")
        return cls(name, tuple(RangeBucket(a, b) for a, b in zip(edges, edges[1:])))

    def locate(self, value) -> int | None:
        hits = [i for i, b in enumerate(self.buckets) if b.matches(value)]
        if len(hits) > 1:
            raise InvalidCellConditions(
                f"attribute {self.name!r}: value {value!r} matches buckets {hits}"
            )
        return hits[0] if hits else None


class CellConditions:
    """Cross product of per-attribute bucket lists.

    Buckets within an attribute must be pairwise disjoint, so each tuple
    falls in at most one cell.
    """

    def __init__(self, attributes: Sequence[Attribute]):
        self.attributes = tuple(attributes)
        if not self.attributes:
            raise InvalidCellConditions("no attributes")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise InvalidCellConditions(f"duplicate attribute names in {names}")
        for a in self.attributes:
            if not a.buckets:
                raise InvalidCellConditions(f"attribute {a.name!r} has no buckets")
            _check_disjoint(a)
        self.shape = DomainShape([len(a.buckets) for a in self.attributes])

    @property
    def names(self):
        return [a.name for a in self.attributes]

    def cell_of(self, record) -> int | None:
        if len(record) != len(self.attributes):
            raise IngestionError(
                f"record has {len(record)} fields, expected {len(self.attributes)}"
            )
        multi = []
        for attr, value in zip(self.attributes, record):
            j = attr.locate(value)
            if j is None:
                return None
            multi.append(j)
        return self.shape.index(multi)

    def describe(self, i: int) -> str:
        multi = self.shape.multi_index(i)
        return " & ".join(
            f"{a.name} in {a.buckets[j]}" for a, j in zip(self.attributes, multi)
        )


def _check_disjoint(attr: Attribute):
    cats = [b for b in attr.buckets if isinstance(b, CategoryBucket)]
    seen = set()
    for b in cats:
        if seen & b.values:
            raise InvalidCellConditions(
                f"attribute {attr.name!r}: categories {sorted(seen & b.values)} in two buckets"
            )
        seen |= b.values
    ranges = sorted((b for b in attr.buckets if isinstance(b, RangeBucket)), key=lambda b: b.lo)
    for a, b in zip(ranges, ranges[1:]):
        if b.lo < a.hi:
            raise InvalidCellConditions(f"attribute {attr.name!r}: ranges {a} and {b} overlap")


def build_data_vector(records: Iterable, cc: CellConditions) -> np.ndarray:
    """Count records per cell. Raises `IngestionError` naming the first
    record (1-based) that falls in no cell."""
    x = np.zeros(cc.shape.n, dtype=np.int64)
    for idx, rec in enumerate(records, start=1):
        try:
            cell = cc.cell_of(rec)
        except IngestionError as exc:
            raise IngestionError(f"record {idx}: {exc}", record_index=idx) from None
        if cell is None:
            raise IngestionError(f"record {idx} {tuple(rec)!r} matches no cell condition",
                                 record_index=idx)
        x[cell] += 1
    return x


# --- workloads -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Workload:
    matrix: np.ndarray
    shape: DomainShape
    family: str = "adhoc"
    descriptions: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float, copy=True)
        if mat.ndim != 2:
            raise ValidationError("workload matrix must be 2-D")
        if mat.shape[1] != self.shape.n:
            raise ValidationError(
                f"workload has {mat.shape[1]} columns but the domain has {self.shape.n} cells"
            )
        if mat.shape[0] == 0:
            raise ValidationError("workload has no rows")
        if not np.all(np.any(mat != 0, axis=1)):
            raise ValidationError("workload contains an all-zero row")
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown workload family {self.family!r}")
        if self.descriptions is not None and len(self.descriptions) != mat.shape[0]:
            raise ValidationError("one description per row required")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def from_matrix(cls, matrix, dims=None, family="adhoc"):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(matrix, DomainShape(dims if dims is not None else matrix.shape[1]), family)


def _intervals(d):
    return [(lo, hi) for lo in range(d) for hi in range(lo, d)]


def _interval_matrix(d):
    ivs = _intervals(d)
    M = np.zeros((len(ivs), d))
    for r, (lo, hi) in enumerate(ivs):
        M[r, lo:hi + 1] = 1.0
    return M


def _kron_all(mats):
    out = np.ones((1, 1))
    for M in mats:
        out = np.kron(out, M)
    return out


def all_range_workload(shape: DomainShape) -> Workload:
    shape = DomainShape(shape.dims) if isinstance(shape, DomainShape) else DomainShape(shape)
    W = _kron_all([_interval_matrix(d) for d in shape.dims])
    return Workload(W, shape, "range")


def random_range_workload(shape: DomainShape, count: int, seed: int) -> Workload:
    """Two-step sampling of hyper-rectangles.

    Each attribute is selected with probability 1/2 (re-drawn if none is
    selected); selected attributes get an interval drawn uniformly from all
    lo <= hi pairs, the rest span their full range.
    """
    shape = shape if isinstance(shape, DomainShape) else DomainShape(shape)
    if count < 1:
        raise ValidationError("count must be >= 1")
    rng = np.random.default_rng(seed)
    per_dim = [_intervals(d) for d in shape.dims]
    rows = np.zeros((count, shape.n))
    for r in range(count):
        chosen = rng.random(shape.k) < 0.5
        while not chosen.any():
            chosen = rng.random(shape.k) < 0.5
        factors = []
        for d, ivs, pick in zip(shape.dims, per_dim, chosen):
            v = np.zeros(d)
            lo, hi = ivs[rng.integers(len(ivs))] if pick else (0, d - 1)
            v[lo:hi + 1] = 1.0
            factors.append(v[None, :])
        rows[r] = _kron_all(factors)[0]
    return Workload(rows, shape, "range")


def marginal_workload(shape: DomainShape, subsets, range_flag: bool = False) -> Workload:
    """Point (or range) marginals over each attribute subset.

    Subsets hold 0-based attribute indices; the empty subset gives the
    total-count row.
    """
    shape = shape if isinstance(shape, DomainShape) else DomainShape(shape)
    seen = set()
    blocks = []
    for S in subsets:
        key = frozenset(int(i) for i in S)
        if key in seen:
            raise ValidationError(f"duplicate marginal subset {sorted(key)}")
        if any(i < 0 or i >= shape.k for i in key):
            raise ValidationError(f"subset {sorted(key)} outside attributes 0..{shape.k - 1}")
        seen.add(key)
        mats = []
        for i, d in enumerate(shape.dims):
            if i in key:
                mats.append(_interval_matrix(d) if range_flag else np.eye(d))
            else:
                mats.append(np.ones((1, d)))
        blocks.append(_kron_all(mats))
    if not blocks:
        raise ValidationError("at least one subset required")
    family = "range-marginal" if range_flag else "marginal"
    return Workload(np.vstack(blocks), shape, family)


def k_way_marginals(shape: DomainShape, k: int, range_flag: bool = False) -> Workload:
    shape = shape if isinstance(shape, DomainShape) else DomainShape(shape)
    if not 0 <= k <= shape.k:
        raise ValidationError(f"k must lie in 0..{shape.k}")
    return marginal_workload(shape, itertools.combinations(range(shape.k), k), range_flag)


def cdf_workload(shape: DomainShape) -> Workload:
    shape = shape if isinstance(shape, DomainShape) else DomainShape(shape)
    if shape.k != 1:
        raise ValidationError("cdf workload is defined on one-dimensional domains only")
    return Workload(np.tril(np.ones((shape.n, shape.n))), shape, "cdf")


def random_predicate_workload(shape: DomainShape, count: int, seed: int) -> Workload:
    """Uniformly sampled non-empty subsets of cells as 0/1 rows."""
    shape = shape if isinstance(shape, DomainShape) else DomainShape(shape)
    rng = np.random.default_rng(seed)
    rows = np.zeros((count, shape.n))
    for r in range(count):
        while not rows[r].any():
            rows[r] = rng.integers(0, 2, shape.n)
    return Workload(rows, shape, "predicate")


def permute_cells(W: Workload, perm) -> Workload:
    """Reorder cells: output column j is input column perm[j] (0-based)."""
    perm = np.asarray(perm)
    if perm.shape != (W.n,) or not np.array_equal(np.sort(perm), np.arange(W.n)):
        raise ValidationError("perm must be a bijection on 0..n-1")
    return Workload(W.matrix[:, perm], DomainShape(W.n), "adhoc", W.descriptions)


def normalize_rows(W: Workload) -> Workload:
    norms = np.linalg.norm(W.matrix, axis=1)
    if np.any(norms == 0):
        raise ValidationError("cannot normalize an all-zero row")
    return Workload(W.matrix / norms[:, None], W.shape, W.family, W.descriptions)


# --- the student example ---------------------------------------------------


def student_conditions() -> CellConditions:
    """Gender x GPA cells: M rows first, GPA buckets [1,2) [2,3) [3,3.5) [3.5,4)."""
    return CellConditions([
        Attribute.categorical("gender", ["M", "F"]),
        Attribute.numeric("gpa", [1.0, 2.0, 3.0, 3.5, 4.0]),
    ])


_STUDENT_ROWS = [
    ([1, 1, 1, 1, 1, 1, 1, 1], "all students"),
    ([1, 1, 1, 1, 0, 0, 0, 0], "male students"),
    ([0, 0, 0, 0, 1, 1, 1, 1], "female students"),
    ([1, 1, 0, 0, 1, 1, 0, 0], "students with gpa < 3.0"),
    ([0, 0, 1, 1, 0, 0, 1, 1], "students with gpa >= 3.0"),
    ([0, 0, 0, 0, 0, 0, 1, 1], "female students with gpa >= 3.0"),
    ([1, 1, 0, 0, 0, 0, 0, 0], "male students with gpa < 3.0"),
    ([1, 1, 1, 1, -1, -1, -1, -1], "difference between male and female students"),
]


def student_workload() -> Workload:
    """The eight-query gender/GPA workload used as the running example."""
    mat = np.array([r for r, _ in _STUDENT_ROWS], dtype=float)
    return Workload(mat, DomainShape([2, 4]), "adhoc", tuple(d for _, d in _STUDENT_ROWS))
