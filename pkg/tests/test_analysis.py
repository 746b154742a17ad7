import math

import numpy as np
import pytest
from conftest import random_orthogonal

from adaptmm.analysis import (ErrorReport, empirical_error, lower_bound, svdb, thm3_cap,
                              unit_squared_error, workload_error)
from adaptmm.baselines import hierarchy_strategy, identity_strategy, wavelet_strategy
from adaptmm.domain import (DomainShape, all_range_workload, cdf_workload, normalize_rows,
                            student_workload)
from adaptmm.eigendesign import eigen_design
from adaptmm.mechanism import PrivacyParams

W2 = np.array([[1.0, 1.0], [1.0, 0.0]])
PP = PrivacyParams(0.5, 1e-4)


def test_error_examples():
    rep = workload_error(np.eye(5), np.eye(5))
    assert rep.workload_error == pytest.approx(math.sqrt(5))
    W = student_workload()
    assert workload_error(W, identity_strategy(8)).unitP_squared == pytest.approx(36.0)
    assert workload_error(W, wavelet_strategy([8])).unitP_squared == pytest.approx(21.0)
    assert workload_error(W, W.matrix).unitP_squared == pytest.approx(20.0)


def test_report_fields_and_privacy_scaling():
    W = student_workload()
    A = eigen_design(W)
    unit = workload_error(W, A)
    rep = workload_error(W, A, PP)
    assert rep.P == pytest.approx(PP.P)
    assert rep.workload_error == pytest.approx(math.sqrt(PP.P) * unit.workload_error)
    assert rep.ratio_to_bound == pytest.approx(unit.ratio_to_bound)
    assert np.sum(rep.per_query**2) == pytest.approx(rep.P * rep.unitP_squared, rel=1e-9)
    assert rep.rms_error == pytest.approx(rep.workload_error / math.sqrt(8))
    assert rep.ratio_to_bound >= 1 - 1e-8
    text = rep.to_record()
    assert "workload_error = " in text and "per_query" not in text
    assert len(rep.csv_row()) == len(ErrorReport.csv_header())
    float(rep.csv_row()[0])


def test_svdb_examples():
    assert svdb(np.eye(6)) == pytest.approx(6)
    assert svdb(W2) == pytest.approx(2.5)
    assert svdb(student_workload()) == pytest.approx(14.93, abs=0.01)
    assert lower_bound(np.eye(4), PP) == pytest.approx(math.sqrt(4 * PP.P))


def test_thm3_cap_examples():
    assert thm3_cap(np.eye(7)) == pytest.approx(1.0)
    s1 = (3 + math.sqrt(5)) / 2
    assert thm3_cap(W2) == pytest.approx((2 * s1 / 2.5) ** 0.25)
    assert thm3_cap(W2) == pytest.approx(1.203, abs=1e-3)


def test_rotation_invariance(rng):
    W = rng.normal(size=(6, 5))
    A = rng.normal(size=(8, 5))
    Q = random_orthogonal(rng, 6)
    assert workload_error(Q @ W, A).workload_error == pytest.approx(
        workload_error(W, A).workload_error, rel=1e-9)


def test_lower_bound_dominates_all_strategies(rng):
    W = all_range_workload(DomainShape([8]))
    lb = lower_bound(W)
    for A in [identity_strategy(8), wavelet_strategy([8]), hierarchy_strategy([8]),
              eigen_design(W), rng.normal(size=(8, 8)), rng.normal(size=(20, 8))]:
        assert workload_error(W, A).workload_error >= lb * (1 - 1e-9)


@pytest.mark.parametrize("name,W,A", [
    ("identity", np.eye(8), np.eye(8)),
    ("student-eigen", student_workload().matrix, None),
    ("student-wavelet", student_workload().matrix, wavelet_strategy([8]).matrix),
    ("cdf-hierarchy", cdf_workload(DomainShape([6])).matrix, hierarchy_strategy([6]).matrix),
])
def test_monte_carlo_oracle(name, W, A):
    if A is None:
        A = eigen_design(W)
    x = np.arange(W.shape[1], dtype=float) * 3
    emp = empirical_error(W, A, x, PP, trials=10_000, seed=17)
    rep = workload_error(W, A, PP)
    assert emp.rmse == pytest.approx(rep.rms_error, rel=0.03)
    assert emp.total_rmse == pytest.approx(rep.workload_error, rel=0.03)
    assert np.allclose(emp.per_query_rmse, rep.per_query, rtol=0.05)


def test_identity_rmse_is_sqrt_p():
    emp = empirical_error(np.eye(8), np.eye(8), np.ones(8), PP, 10_000, seed=2)
    assert emp.rmse == pytest.approx(math.sqrt(PP.P), rel=0.03)


def test_noise_free_and_sanity_floor():
    big = PrivacyParams(1e9, 1e-4)
    emp = empirical_error(np.eye(3), np.eye(3), [1.0, 0.0, 5.0], big, 5, seed=0)
    assert emp.rmse < 1e-6 and emp.mean_relative < 1e-6
    W = np.array([[1.0]])
    emp = empirical_error(W, W, [0.0], PP, 1, seed=4, sanity=2.0)
    noisy = emp.per_query_rmse[0]
    assert emp.relative_per_query[0] == pytest.approx(noisy / 2.0)
    assert math.isfinite(emp.relative_per_query[0])


def test_empirical_validation():
    with pytest.raises(ValueError):
        empirical_error(np.eye(2), np.eye(2), [1, 1], PP, 0, seed=0)
    with pytest.raises(ValueError):
        empirical_error(np.eye(2), np.eye(2), [1, 1], PP, 5, seed=0, sanity=0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_normalized_design_lowers_relative_error_on_ranges(seed):
    n = 32
    W = all_range_workload(DomainShape([n]))
    rng = np.random.default_rng(seed)
    p = 1.0 / np.arange(1, n + 1)
    x = rng.permutation(rng.multinomial(5000, p / p.sum())).astype(float)
    pp = PrivacyParams(1.0, 1e-4)
    r_plain = empirical_error(W, eigen_design(W), x, pp, 1000, seed=seed).mean_relative
    r_norm = empirical_error(W, eigen_design(normalize_rows(W)), x, pp, 1000,
                             seed=seed + 50).mean_relative
    assert r_norm <= r_plain


def test_unit_squared_error_matches_report():
    W = student_workload()
    A = eigen_design(W)
    assert unit_squared_error(W, A) == pytest.approx(workload_error(W, A).unitP_squared)
