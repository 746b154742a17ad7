import numpy as np
import pytest

from adaptmm.analysis import unit_squared_error
from adaptmm.baselines import (gaussian_baseline_error, haar_matrix, hierarchy_matrix,
                               hierarchy_strategy, identity_strategy, wavelet_strategy,
                               workload_strategy)
from adaptmm.domain import DomainShape, all_range_workload, student_workload
from adaptmm.eigendesign import eigen_design
from adaptmm.exceptions import UnsupportedShapeError

HAAR8 = np.array([
    [1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, -1, -1, -1, -1],
    [1, 1, -1, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 1, -1, -1],
    [1, -1, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, -1, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, -1],
])


def test_identity():
    assert identity_strategy(1).matrix.tolist() == [[1.0]]
    assert np.array_equal(identity_strategy(3).matrix, np.eye(3))
    assert unit_squared_error(student_workload(), identity_strategy(8)) == pytest.approx(36.0)


def test_wavelet_matrices():
    assert wavelet_strategy([2]).matrix.tolist() == [[1, 1], [1, -1]]
    A = wavelet_strategy([8])
    assert np.array_equal(A.matrix, HAAR8)
    assert A.sensitivity == pytest.approx(2.0)
    with pytest.raises(UnsupportedShapeError):
        wavelet_strategy([6])
    with pytest.raises(UnsupportedShapeError):
        wavelet_strategy([4, 3])


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4, 5])
def test_haar_orthogonal_rows(k):
    H = haar_matrix(2**k)
    G = H @ H.T
    assert np.allclose(G, np.diag(np.diag(G)))
    assert np.linalg.matrix_rank(H) == 2**k


def test_wavelet_multi_dim_is_tensor_product():
    A = wavelet_strategy([2, 4]).matrix
    assert np.array_equal(A, np.kron(haar_matrix(2), haar_matrix(4)))


def test_hierarchy_examples():
    assert hierarchy_strategy([2]).matrix.tolist() == [[1, 1], [1, 0], [0, 1]]
    H = hierarchy_strategy([4])
    assert H.p == 7
    assert H.sensitivity == pytest.approx(np.sqrt(3))


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8, 13, 16])
def test_hierarchy_covers_each_cell_depth_plus_one(d):
    H = hierarchy_matrix(d)
    depth = int(np.ceil(np.log2(d))) if d > 1 else 0
    cover = H.sum(axis=0)
    # ragged trees: leaves sit at depth ceil(log2 d) or one level higher
    assert cover.max() == depth + 1
    assert cover.min() >= depth
    if d & (d - 1) == 0:
        assert np.all(cover == depth + 1)


def test_hierarchy_uneven_split():
    H = hierarchy_matrix(3)
    assert H[1].tolist() == [1, 1, 0]
    assert H[2].tolist() == [0, 0, 1]


def test_gaussian_baseline():
    assert gaussian_baseline_error(student_workload()) == pytest.approx(np.sqrt(40))
    assert gaussian_baseline_error(np.eye(6)) == pytest.approx(np.sqrt(6))
    # one all-ones row: every column has norm 1, so sensitivity is 1, not sqrt(n)
    assert gaussian_baseline_error(np.ones((1, 9))) == pytest.approx(1.0)


def test_workload_as_strategy():
    W = student_workload()
    assert unit_squared_error(W, workload_strategy(W)) == pytest.approx(20.0)


@pytest.mark.parametrize("n", [8, 16, 32, 64])
def test_eigen_beats_competitors_on_ranges(n):
    W = all_range_workload(DomainShape([n]))
    e = unit_squared_error(W, eigen_design(W))
    assert e <= unit_squared_error(W, wavelet_strategy([n]))
    assert e <= unit_squared_error(W, hierarchy_strategy([n]))
