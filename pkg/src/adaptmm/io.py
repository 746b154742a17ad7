"""File formats: dense matrix CSV, strategy CSV, data vectors, record
ingestion, and the flat text format for domain specs and bench configs.

Matrices are written one row per line with 17 significant digits, which
round-trips any float64 exactly.

Spec files look like::

    # comments start with '#'
    gender = {M, F}          # categorical attribute, one bucket per value
    gpa = [1, 2, 3, 3.5, 4]  # numeric attribute, half-open buckets between edges
    dims = [2, 4]            # shape only, when no attributes are given

    [family]
    name = marginal
    subsets = {1}, {1, 2}    # 1-based attribute positions
    range = false

Bench configs reuse the syntax: top-level keys for eps, delta, methods and
so on, then one ``[workload]`` block per workload.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .domain import (Attribute, CellConditions, DomainShape, Workload, all_range_workload,
                     build_data_vector, cdf_workload, k_way_marginals, marginal_workload,
                     random_predicate_workload, random_range_workload, student_workload)
from .eigendesign import PROVENANCES, Strategy
from .exceptions import IngestionError, SpecParseError, ValidationError

FLOAT_FMT = "%.17g"


def atomic_write(path, text: str):
    """Write to a temp file in the same directory, then rename over `path`."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_matrix(M) -> str:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    buf = io.StringIO()
    np.savetxt(buf, M, fmt=FLOAT_FMT, delimiter=",")
    return buf.getvalue()


def write_matrix(path, M):
    atomic_write(path, format_matrix(M))


def _load(path, what):
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise ValidationError(f"{what} file not found: {path}") from None
    return lines


def parse_matrix(lines, what="matrix") -> np.ndarray:
    rows = []
    for i, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError:
            raise ValidationError(f"{what} line {i}: non-numeric entry") from None
        if len(rows[-1]) != len(rows[0]):
            raise ValidationError(f"{what} line {i}: expected {len(rows[0])} columns, "
                                  f"got {len(rows[-1])}")
    if not rows:
        raise ValidationError(f"{what} is empty")
    M = np.array(rows)
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{what} contains non-finite values")
    return M


def read_matrix(path) -> np.ndarray:
    return parse_matrix(_load(path, "matrix"), f"matrix {path}")


def read_workload(path, dims=None) -> Workload:
    M = read_matrix(path)
    return Workload.from_matrix(M, dims)


def write_strategy(path, strategy: Strategy):
    head = f"# p={strategy.p} n={strategy.n} provenance={strategy.provenance}\n"
    atomic_write(path, head + format_matrix(strategy.matrix))


def read_strategy(path) -> Strategy:
    lines = _load(path, "strategy")
    provenance = "adhoc"
    if lines and lines[0].startswith("#"):
        meta = dict(re.findall(r"(\w+)=(\S+)", lines[0]))
        provenance = meta.get("provenance", "adhoc")
        if provenance not in PROVENANCES:
            raise ValidationError(f"strategy {path}: unknown provenance {provenance!r}")
    M = parse_matrix(lines, f"strategy {path}")
    if lines and lines[0].startswith("#"):
        p, n = int(meta.get("p", M.shape[0])), int(meta.get("n", M.shape[1]))
        if (p, n) != M.shape:
            raise ValidationError(f"strategy {path}: header says {p}x{n}, "
                                  f"body is {M.shape[0]}x{M.shape[1]}")
    return Strategy(M, provenance)


def write_vector(path, v, fmt=FLOAT_FMT):
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(v).reshape(-1, 1), fmt=fmt)
    atomic_write(path, buf.getvalue())


def read_vector(path) -> np.ndarray:
    M = parse_matrix(_load(path, "vector"), f"vector {path}")
    if M.shape[1] != 1 and M.shape[0] != 1:
        raise ValidationError(f"vector {path} must have one value per line")
    return M.ravel()


def write_table(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write(path, buf.getvalue())


# --- spec files ------------------------------------------------------------


@dataclass
class Section:
    name: str
    line: int
    entries: dict = field(default_factory=dict)  # key -> (raw value, line)

    def get(self, key, default=None):
        return self.entries[key][0] if key in self.entries else default

    def line_of(self, key):
        return self.entries[key][1] if key in self.entries else self.line


def parse_sections(text: str) -> list[Section]:
    """Split into sections; the first (name '') holds top-level keys."""
    sections = [Section("", 0)]
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[\s*([\w-]+)\s*\]", line)
        if m:
            sections.append(Section(m.group(1).lower(), i))
            continue
        if "=" not in line:
            raise SpecParseError("expected 'key = value' or '[section]'", line=i)
        key, val = (s.strip() for s in line.split("=", 1))
        if not re.fullmatch(r"[A-Za-z_][\w-]*", key):
            raise SpecParseError(f"bad key {key!r}", line=i)
        if not val:
            raise SpecParseError(f"empty value for {key!r}", line=i)
        sec = sections[-1]
        if key in sec.entries:
            raise SpecParseError(f"duplicate key {key!r}", line=i)
        sec.entries[key] = (val, i)
    return sections


def _list(val, line, conv=str):
    m = re.fullmatch(r"\[(.*)\]", val)
    if not m:
        raise SpecParseError(f"expected a [list], got {val!r}", line=line)
    items = [s.strip() for s in m.group(1).split(",") if s.strip()]
    try:
        return [conv(s) for s in items]
    except ValueError:
        raise SpecParseError(f"bad list entry in {val!r}", line=line) from None


def _sets(val, line):
    if not re.fullmatch(r"\s*\{[^{}]*\}(\s*,?\s*\{[^{}]*\})*\s*", val):
        raise SpecParseError(f"expected {{...}} sets, got {val!r}", line=line)
    out = []
    for body in re.findall(r"\{([^}]*)\}", val):
        try:
            out.append([int(s) for s in body.split(",") if s.strip()])
        except ValueError:
            raise SpecParseError("subset entries must be integers",
                                 line=line) from None
    return out


def _int(sec, key, default=None):
    if key not in sec.entries:
        if default is None:
            raise SpecParseError(f"[{sec.name}] needs '{key}'", line=sec.line)
        return default
    val, line = sec.entries[key]
    try:
        return int(val)
    except ValueError:
        raise SpecParseError(f"{key} must be an integer", line=line) from None


def _float(sec, key, default):
    if key not in sec.entries:
        return default
    val, line = sec.entries[key]
    try:
        return float(val)
    except ValueError:
        raise SpecParseError(f"{key} must be a number", line=line) from None


def _bool(sec, key, default=False):
    if key not in sec.entries:
        return default
    val, line = sec.entries[key]
    if val.lower() in ("true", "yes", "1"):
        return True
    if val.lower() in ("false", "no", "0"):
        return False
    raise SpecParseError(f"{key} must be true or false", line=line)


RESERVED = ("dims", "name", "family")
WORKLOAD_FAMILIES = ("all-range", "random-range", "marginal", "range-marginal", "kway",
                     "cdf", "predicate", "student")


@dataclass
class DomainSpec:
    conditions: CellConditions | None
    shape: DomainShape
    family: Section | None = None


def domain_from_section(sec: Section, allow_extra=()):
    """Cell conditions and shape from attribute lines and/or dims."""
    attrs, dims = [], None
    for key, (val, line) in sec.entries.items():
        if key in allow_extra:
            continue
        if key == "dims":
            dims = _list(val, line, int)
            continue
        try:
            if val.startswith("{"):
                cats = [s.strip() for s in val.strip("{} ").split(",") if s.strip()]
                attrs.append(Attribute.categorical(key, cats))
            elif val.startswith("["):
                attrs.append(Attribute.numeric(key, _list(val, line)))
            else:
                raise SpecParseError(f"unknown key {key!r}", line=line)
        except ValidationError as exc:
            if isinstance(exc, SpecParseError):
                raise
            raise SpecParseError(f"{exc}", line=line) from None
    if attrs and dims is not None:
        cc = CellConditions(attrs)
        if list(cc.shape.dims) != dims:
            raise SpecParseError(f"dims {dims} disagree with "
                                 f"attributes {list(cc.shape.dims)}", line=sec.line_of("dims"))
        return cc, cc.shape
    if attrs:
        cc = CellConditions(attrs)
        return cc, cc.shape
    if dims is not None:
        try:
            return None, DomainShape(dims)
        except ValidationError as exc:
            raise SpecParseError(f"{exc}",
                                 line=sec.line_of("dims")) from None
    return None, None


def parse_domain_spec(text: str) -> DomainSpec:
    secs = parse_sections(text)
    top = secs[0]
    fam = None
    for s in secs[1:]:
        if s.name != "family":
            raise SpecParseError(f"unknown section [{s.name}]", line=s.line)
        if fam is not None:
            raise SpecParseError("only one [family] block allowed", line=s.line)
        fam = s
    cc, shape = domain_from_section(top)
    if fam is not None and "dims" in fam.entries and shape is None:
        cc, shape = domain_from_section(fam, allow_extra=tuple(k for k in fam.entries if k != "dims"))
    if shape is None and not (fam is not None and fam.get("name") == "student"):
        # the student family brings its own gender x gpa domain
        raise SpecParseError("spec defines neither attributes nor dims", line=1)
    return DomainSpec(cc, shape, fam)


def read_text(path, what="spec") -> str:
    return "\n".join(_load(path, what)) + "\n"


def read_domain_spec(path) -> DomainSpec:
    return parse_domain_spec(read_text(path))


def _subsets0(sec, shape):
    val, line = sec.entries.get("subsets", (None, sec.line))
    if val is None:
        raise SpecParseError("marginal family needs 'subsets'", line=sec.line)
    out = []
    for s in _sets(val, line):
        if any(not 1 <= a <= shape.k for a in s):
            raise SpecParseError(f"attribute positions must lie in 1..{shape.k}",
                                 line=line)
        out.append([a - 1 for a in s])
    return out


def workload_from_section(sec: Section, shape: DomainShape | None) -> Workload:
    """Build the workload a [family] / [workload] block describes."""
    name = sec.get("name") or sec.get("family")
    if name is None:
        raise SpecParseError("block needs 'name'", line=sec.line)
    line = sec.line_of("name") if "name" in sec.entries else sec.line_of("family")
    if name not in WORKLOAD_FAMILIES:
        raise SpecParseError(f"unknown family {name!r}; "
                             f"expected one of {', '.join(WORKLOAD_FAMILIES)}", line=line)
    if name == "student":
        W = student_workload()
        if shape is None:
            return W
        if shape.n != W.n:
            raise SpecParseError(f"student workload has {W.n} cells, dims give {shape.n}",
                                 line=line)
        # e.g. dims = [8] to treat the cells as one flat axis
        return Workload(W.matrix, shape, W.family, W.descriptions)
    if shape is None:
        raise SpecParseError(f"family {name!r} needs a domain", line=line)
    try:
        if name == "all-range":
            return all_range_workload(shape)
        if name == "cdf":
            return cdf_workload(shape)
        if name == "random-range":
            return random_range_workload(shape, _int(sec, "count"), _int(sec, "seed", 0))
        if name == "predicate":
            return random_predicate_workload(shape, _int(sec, "count"), _int(sec, "seed", 0))
        if name == "kway":
            return k_way_marginals(shape, _int(sec, "k"), _bool(sec, "range"))
        rng = name == "range-marginal" or _bool(sec, "range")
        return marginal_workload(shape, _subsets0(sec, shape), rng)
    except SpecParseError:
        raise
    except ValidationError as exc:
        raise SpecParseError(f"{exc}", line=line) from None


def workload_from_spec(spec: DomainSpec) -> Workload:
    if spec.family is None:
        raise SpecParseError("spec has no [family] block", line=1)
    return workload_from_section(spec.family, spec.shape)


# --- records ---------------------------------------------------------------


def read_records(path, cc: CellConditions) -> list[tuple]:
    """Records CSV with a header naming every attribute (any column order).

    Numeric attributes are parsed as floats. Errors name the 1-based
    record index, not counting the header.
    """
    lines = _load(path, "records")
    if not lines or not lines[0].strip():
        return []
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    if sorted(header) != sorted(cc.names):
        raise IngestionError(f"records header {header} does not match attributes {cc.names}",
                             record_index=0)
    order = [header.index(name) for name in cc.names]
    numeric = [not a.buckets or hasattr(a.buckets[0], "lo") for a in cc.attributes]
    out = []
    for idx, row in enumerate(reader, start=1):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != len(header):
            raise IngestionError(f"record {idx}: expected {len(header)} fields, got {len(row)}",
                                 record_index=idx)
        rec = []
        for j, is_num in zip(order, numeric):
            v = row[j].strip()
            if is_num:
                try:
                    v = float(v)
                except ValueError:
                    raise IngestionError(f"record {idx}: {cc.names[order.index(j)]} value "
                                         f"{v!r} is not a number", record_index=idx) from None
                if not math.isfinite(v):
                    raise IngestionError(f"record {idx}: non-finite value", record_index=idx)
            rec.append(v)
        out.append(tuple(rec))
    return out


def ingest(records_path, spec: DomainSpec) -> np.ndarray:
    if spec.conditions is None:
        raise ValidationError("ingestion needs attribute definitions in the spec, not just dims")
    return build_data_vector(read_records(records_path, spec.conditions), spec.conditions)
