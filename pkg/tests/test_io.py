import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adaptmm.domain import all_range_workload, cdf_workload, DomainShape, student_workload
from adaptmm.eigendesign import Strategy, eigen_design
from adaptmm.exceptions import IngestionError, SpecParseError, ValidationError
from adaptmm.io import (format_matrix, ingest, parse_domain_spec, parse_matrix, read_matrix,
                        read_strategy, read_vector, workload_from_spec, write_matrix,
                        write_strategy, write_vector)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
def test_matrix_round_trip_exact(M):
    back = parse_matrix(format_matrix(M).splitlines())
    assert np.array_equal(back, M)


def test_files_round_trip(tmp_path):
    M = np.random.default_rng(0).normal(size=(5, 3)) / 7
    write_matrix(tmp_path / "m.csv", M)
    assert np.array_equal(read_matrix(tmp_path / "m.csv"), M)
    A = eigen_design(student_workload())
    write_strategy(tmp_path / "a.csv", A)
    assert open(tmp_path / "a.csv").readline().startswith(f"# p={A.p} n=8 provenance=eigen")
    B = read_strategy(tmp_path / "a.csv")
    assert np.array_equal(B.matrix, A.matrix) and B.provenance == "eigen"
    write_vector(tmp_path / "x.csv", [1, 2, 3], fmt="%d")
    assert open(tmp_path / "x.csv").read() == "1\n2\n3\n"
    assert read_vector(tmp_path / "x.csv").tolist() == [1, 2, 3]
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp")]


def test_matrix_errors(tmp_path):
    with pytest.raises(ValidationError, match="line 2"):
        parse_matrix(["1,2", "3"])
    with pytest.raises(ValidationError):
        parse_matrix(["1,x"])
    with pytest.raises(ValidationError):
        parse_matrix([])
    with pytest.raises(ValidationError):
        read_matrix(tmp_path / "missing.csv")
    (tmp_path / "s.csv").write_text("# p=3 n=2 provenance=eigen\n1,0\n0,1\n")
    with pytest.raises(ValidationError, match="header"):
        read_strategy(tmp_path / "s.csv")


def test_spec_examples():
    W = workload_from_spec(parse_domain_spec("[family]\nname = all-range\ndims = [2]\n"))
    assert W.matrix.shape == (3, 2)
    assert np.array_equal(W.matrix, all_range_workload(DomainShape([2])).matrix)
    W = workload_from_spec(parse_domain_spec("dims = [3]\n[family]\nname = cdf\n"))
    assert np.array_equal(W.matrix, cdf_workload(DomainShape([3])).matrix)
    with pytest.raises(SpecParseError) as err:
        parse_domain_spec("dims = [0]\n[family]\nname = cdf\n")
    assert err.value.line == 1


def test_spec_attributes_and_marginals():
    text = """
    # student domain
    gender = {M, F}
    gpa = [1, 2, 3, 3.5, 4]

    [family]
    name = marginal
    subsets = {1}, {2}, {}
    """
    spec = parse_domain_spec(text)
    assert spec.shape.dims == (2, 4)
    assert spec.conditions.names == ["gender", "gpa"]
    assert workload_from_spec(spec).m == 2 + 4 + 1


@pytest.mark.parametrize("text,line", [
    ("dims = [4]\nnonsense\n", 2),
    ("dims = [4]\n[family]\nname = bogus\n", 3),
    ("dims = [4]\n[family]\nname = random-range\n", 2),
    ("dims = [2, 2]\n[family]\nname = marginal\nsubsets = {3}\n", 4),
    ("dims = [2, 2]\n[family]\nname = marginal\nsubsets = {1}, {1}\n", 3),
    ("dims = [4]\ndims = [5]\n", 2),
    ("dims = [4]\n[other]\n", 2),
    ("a = [1, 1]\n", 1),
])
def test_spec_errors_carry_lines(text, line):
    with pytest.raises(SpecParseError) as err:
        workload_from_spec(parse_domain_spec(text))
    assert err.value.line == line


def test_student_family_with_flat_dims():
    spec = parse_domain_spec("[family]\nname = student\ndims = [8]\n")
    W = workload_from_spec(spec)
    assert W.shape.dims == (8,)
    assert np.array_equal(W.matrix, student_workload().matrix)


SPEC = "gender = {M, F}\ngpa = [1, 2, 3, 3.5, 4]\n"


def test_ingest(tmp_path):
    spec = parse_domain_spec(SPEC)
    (tmp_path / "r.csv").write_text("gender,gpa\nM,1.5\nM,1.7\nF,3.6\n")
    assert ingest(tmp_path / "r.csv", spec).tolist() == [2, 0, 0, 0, 0, 0, 0, 1]
    (tmp_path / "swap.csv").write_text("gpa,gender\n1.5,M\n")
    assert ingest(tmp_path / "swap.csv", spec).tolist() == [1, 0, 0, 0, 0, 0, 0, 0]
    (tmp_path / "empty.csv").write_text("")
    assert ingest(tmp_path / "empty.csv", spec).tolist() == [0] * 8


@pytest.mark.parametrize("body,idx", [
    ("gender,gpa\nX,1.5\n", 1),
    ("gender,gpa\nM,1.5\nF,9\n", 2),
    ("gender,gpa\nM\n", 1),
    ("gender,gpa\nM,abc\n", 1),
])
def test_ingest_errors_name_record(tmp_path, body, idx):
    (tmp_path / "r.csv").write_text(body)
    with pytest.raises(IngestionError) as err:
        ingest(tmp_path / "r.csv", parse_domain_spec(SPEC))
    assert err.value.record_index == idx


def test_ingest_header_mismatch(tmp_path):
    (tmp_path / "r.csv").write_text("sex,gpa\nM,1.5\n")
    with pytest.raises(IngestionError):
        ingest(tmp_path / "r.csv", parse_domain_spec(SPEC))


def test_strategy_reader_default_provenance(tmp_path):
    (tmp_path / "s.csv").write_text("1,0\n0,1\n")
    assert read_strategy(tmp_path / "s.csv").provenance == "adhoc"
    assert isinstance(read_strategy(tmp_path / "s.csv"), Strategy)
