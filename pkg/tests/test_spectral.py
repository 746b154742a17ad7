import numpy as np
import pytest
from conftest import random_orthogonal

from adaptmm.domain import DomainShape, all_range_workload, marginal_workload, student_workload
from adaptmm.exceptions import NotPSDError
from adaptmm.spectral import eigendecompose, gram, rank, workload_rank


def test_gram_examples(rng):
    assert np.array_equal(gram(np.eye(2)), np.eye(2))
    assert gram(np.array([[1, 1], [1, 0]])).tolist() == [[2, 1], [1, 1]]
    W = rng.normal(size=(6, 4))
    Q = random_orthogonal(rng, 6)
    assert np.allclose(gram(Q @ W), gram(W), atol=1e-9)
    G = gram(W)
    assert np.array_equal(G, G.T)


def test_eigen_examples():
    d = eigendecompose(np.eye(4))
    assert np.allclose(d.D, 1)
    assert np.allclose(d.Q, np.eye(4))
    d = eigendecompose(np.array([[2.0, 1], [1, 1]]))
    assert np.allclose(d.D, [(3 + np.sqrt(5)) / 2, (3 - np.sqrt(5)) / 2])
    d = eigendecompose(np.diag([1.0, 4.0]))
    assert np.allclose(d.D, [4, 1])
    assert np.allclose(np.abs(d.Q), [[0, 1], [1, 0]])


def test_not_psd():
    with pytest.raises(NotPSDError):
        eigendecompose(np.diag([1.0, -0.5]))
    # tiny negative round-off is clamped
    d = eigendecompose(np.diag([1.0, -1e-12]))
    assert d.D[1] == 0.0


@pytest.mark.parametrize("n", [3, 17, 64, 256])
def test_decomposition_invariants(rng, n):
    B = rng.normal(size=(n, max(1, n // 2)))
    S = B @ B.T
    d = eigendecompose(S)
    assert np.linalg.norm(d.reconstruct() - S) <= 1e-8 * max(1, np.linalg.norm(S))
    assert np.linalg.norm(d.Q @ d.Q.T - np.eye(n)) <= 1e-8 * np.sqrt(n)
    assert abs(d.D.sum() - np.trace(S)) <= 1e-9 * np.trace(S)
    assert np.all(np.diff(d.D) <= 0) and np.all(d.D >= 0)
    assert d.r == max(1, n // 2)


def test_deterministic(rng):
    B = rng.normal(size=(10, 10))
    S = B @ B.T
    a, b = eigendecompose(S), eigendecompose(S.copy())
    assert np.array_equal(a.Q, b.Q) and np.array_equal(a.D, b.D)


def test_rank_examples():
    assert workload_rank(student_workload()) == 4
    assert workload_rank(np.eye(5)) == 5
    assert workload_rank(marginal_workload(DomainShape([2, 2]), [[0], [1]])) == 3
    assert rank(eigendecompose(np.zeros((3, 3)))) == 0
    for n in (1, 2, 8, 33, 64):
        assert workload_rank(all_range_workload(DomainShape([n]))) == n
