"""Command-line entry point.

    adaptmm workload SPEC --out DIR
    adaptmm select --workload W.csv --method eigen --out DIR
    adaptmm run --workload W.csv --strategy A.csv --data x.csv --eps 1 --delta 1e-4 --out DIR
    adaptmm ingest --records R.csv --domain SPEC --out DIR
    adaptmm bench CONFIG --out DIR

Every command writes a manifest.json next to its outputs. Exit status is
0 on success, 2 for bad input and 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .analysis import empirical_error, svdb, workload_error
from .baselines import (gaussian_baseline_error, hierarchy_strategy, identity_strategy,
                        wavelet_strategy, workload_strategy)
from .domain import DomainShape, Workload, normalize_rows
from .exceptions import NumericalError, ValidationError
from .io import (atomic_write, domain_from_section, ingest, parse_domain_spec, parse_sections,
                 read_domain_spec, read_strategy, read_text, read_vector, read_workload,
                 workload_from_section, workload_from_spec, write_matrix, write_strategy,
                 write_table, write_vector)
from .mechanism import PrivacyParams, privacy_factor, run_trials
from .reduction import ReductionConfig, select_eigen

METHODS = ("eigen", "identity", "wavelet", "hierarchy")
BENCH_METHODS = METHODS + ("workload", "gaussian", "eigen-sep", "eigen-pv")
THREADS_ENV = "ADAPTMM_THREADS"
FAMILY_KEYS = ("name", "label", "methods", "count", "seed", "k", "range", "subsets", "family")


def _write_manifest(out, command, args, outputs, domain_spec=None, privacy=None,
                    reduction=None):
    keep = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    man = {
        "tool": "adaptmm",
        "version": __version__,
        "command": command,
        "arguments": keep,
        "domain_spec": domain_spec,
        "privacy": privacy,
        "seed": keep.get("seed"),
        "reduction": reduction,
        "outputs": sorted(outputs),
    }
    atomic_write(os.path.join(out, "manifest.json"),
                 json.dumps(man, indent=2, sort_keys=True, default=str) + "\n")


def _privacy(args, required=False):
    if args.eps is None and args.delta is None:
        if required:
            raise ValidationError("--eps and --delta are required")
        return None
    if args.eps is None or args.delta is None:
        raise ValidationError("give both --eps and --delta")
    return PrivacyParams(args.eps, args.delta, args.calibration)


def _privacy_dict(pp):
    if pp is None:
        return None
    return {"eps": pp.eps, "delta": pp.delta, "calibration": pp.calibration, "P": pp.P}


def _reduction(args):
    return ReductionConfig(args.reduction, args.group_size, args.principal_count)


def _shape(dims, n):
    if dims is None:
        return DomainShape([n])
    shape = DomainShape(dims)
    if shape.n != n:
        raise ValidationError(f"--dims {list(dims)} give {shape.n} cells, workload has {n}")
    return shape


def choose_strategy(W: Workload, method, config=None, normalize=False, tol=1e-8):
    """Strategy for W by name. `normalize` only affects the eigen path."""
    if method == "eigen":
        target = normalize_rows(W) if normalize else W
        return select_eigen(target, config, tol)
    if method == "identity":
        return identity_strategy(W.n)
    if method == "wavelet":
        return wavelet_strategy(W.shape)
    if method == "hierarchy":
        return hierarchy_strategy(W.shape)
    if method == "workload":
        return workload_strategy(W)
    raise ValidationError(f"unknown method {method!r}")


# --- commands ----------------------------------------------------------------


def cmd_workload(args):
    text = read_text(args.spec)
    W = workload_from_spec(parse_domain_spec(text))
    wpath = os.path.join(args.out, "workload.csv")
    rpath = os.path.join(args.out, "workload_rows.txt")
    write_matrix(wpath, W.matrix)
    desc = W.descriptions or tuple(f"q{i + 1}" for i in range(W.m))
    atomic_write(rpath, "".join(f"{d}\n" for d in desc))
    _write_manifest(args.out, "workload", args, [wpath, rpath], domain_spec=text)
    print(f"workload: {W.m} x {W.n} ({W.family}), dims {list(W.shape.dims)}")
    return 0


def cmd_select(args):
    W = read_workload(args.workload)
    W = Workload(W.matrix, _shape(args.dims, W.n))
    pp = _privacy(args)
    config = _reduction(args)
    t0 = time.perf_counter()
    A = choose_strategy(W, args.method, config, args.normalize, args.tol)
    elapsed = time.perf_counter() - t0
    rep = workload_error(W, A, pp)
    spath = os.path.join(args.out, "strategy.csv")
    tpath = os.path.join(args.out, "report.txt")
    cpath = os.path.join(args.out, "report.csv")
    write_strategy(spath, A)
    atomic_write(tpath, f"method = {args.method!r}\n" + rep.to_record())
    write_table(cpath, ["method"] + rep.csv_header(), [[args.method] + rep.csv_row()])
    _write_manifest(args.out, "select", args, [spath, tpath, cpath],
                    privacy=_privacy_dict(pp),
                    reduction={"mode": config.mode, "group_size": config.group_size,
                               "principal_count": config.principal_count})
    print(f"{args.method}: {A.p} x {A.n} strategy, error {rep.workload_error:.6g}, "
          f"bound {rep.lower_bound:.6g}, ratio {rep.ratio_to_bound:.4f} ({elapsed:.2f}s)")
    return 0


def cmd_run(args):
    pp = _privacy(args, required=True)
    if args.trials < 1:
        raise ValidationError("--trials must be >= 1")
    W = read_workload(args.workload).matrix
    A = read_strategy(args.strategy)
    x = read_vector(args.data)
    if np.any(x < 0):
        raise ValidationError("data vector has negative counts")
    if x.size != W.shape[1]:
        raise ValidationError(f"data vector has {x.size} cells, workload {W.shape[1]}")
    answers = run_trials(W, A, x, pp, args.seed, 1)[0]
    emp = empirical_error(W, A, x, pp, args.trials, args.seed, args.sanity)
    rep = workload_error(W, A, pp)
    truth = W @ x

    apath = os.path.join(args.out, "answers.csv")
    qpath = os.path.join(args.out, "per_query.csv")
    tpath = os.path.join(args.out, "report.txt")
    write_vector(apath, answers)
    write_table(qpath, ["query", "truth", "answer", "empirical_rmse", "analytic_rmse",
                        "relative_error"],
                [[i + 1, repr(float(truth[i])), repr(float(answers[i])),
                  repr(float(emp.per_query_rmse[i])), repr(float(rep.per_query[i])),
                  repr(float(emp.relative_per_query[i]))] for i in range(W.shape[0])])
    summary = {
        "trials": emp.trials,
        "seed": args.seed,
        "empirical_rmse": emp.rmse,
        "analytic_rmse": rep.rms_error,
        "rmse_ratio": emp.rmse / rep.rms_error,
        "empirical_total": emp.total_rmse,
        "analytic_workload_error": rep.workload_error,
        "mean_relative_error": emp.mean_relative,
    }
    atomic_write(tpath, "".join(f"{k} = {v!r}\n" for k, v in summary.items()))
    _write_manifest(args.out, "run", args, [apath, qpath, tpath], privacy=_privacy_dict(pp))
    print(f"rmse {emp.rmse:.6g} over {emp.trials} trials, analytic {rep.rms_error:.6g} "
          f"(ratio {summary['rmse_ratio']:.4f}), mean relative error {emp.mean_relative:.4g}")
    return 0


def cmd_ingest(args):
    spec = read_domain_spec(args.domain)
    x = ingest(args.records, spec)
    dpath = os.path.join(args.out, "data.csv")
    write_vector(dpath, x, fmt="%d")
    text = read_text(args.domain)
    _write_manifest(args.out, "ingest", args, [dpath], domain_spec=text)
    print(f"ingested {int(x.sum())} records into {x.size} cells")
    return 0


BENCH_HEADER = ["workload", "family", "n", "m", "method", "unitP_squared", "workload_error",
                "rms_error", "svdb", "lower_bound", "ratio_to_bound", "seconds", "status"]


def _bench_row(label, W, method, pp, config, tol):
    t0 = time.perf_counter()
    try:
        if method == "gaussian":
            unit2 = gaussian_baseline_error(W) ** 2
        else:
            if method == "eigen-sep":
                A = select_eigen(W, ReductionConfig("separation", config.group_size), tol)
            elif method == "eigen-pv":
                A = select_eigen(W, ReductionConfig("principal",
                                                    principal_count=config.principal_count), tol)
            else:
                A = choose_strategy(W, method, config, tol=tol)
            unit2 = workload_error(W, A).unitP_squared
        secs = time.perf_counter() - t0
        sv = svdb(W)
        P = privacy_factor(pp)
        vals = [unit2, math.sqrt(P * unit2), math.sqrt(P * unit2 / W.m), sv, math.sqrt(P * sv),
                math.sqrt(unit2 / sv), secs]
        return [label, W.family, W.n, W.m, method] + [repr(float(v)) for v in vals] + ["ok"]
    except (ValidationError, NumericalError) as exc:
        secs = time.perf_counter() - t0
        return ([label, W.family, W.n, W.m, method] + [""] * 6
                + [repr(secs), f"{type(exc).__name__}: {exc}"])


def run_bench(text):
    """Rows of the benchmark table described by a bench config."""
    secs = parse_sections(text)
    top = secs[0]
    known = {"eps", "delta", "calibration", "methods", "tol", "group_size", "principal_count"}
    for key in top.entries:
        if key not in known:
            raise ValidationError(f"line {top.line_of(key)}: unknown bench key {key!r}")
    eps, delta = top.get("eps"), top.get("delta")
    pp = None
    if eps is not None or delta is not None:
        if eps is None or delta is None:
            raise ValidationError("bench config needs both eps and delta")
        pp = PrivacyParams(float(eps), float(delta), float(top.get("calibration", 2.0)))
    tol = float(top.get("tol", 1e-8))
    gs, pc = top.get("group_size"), top.get("principal_count")
    config = ReductionConfig("full", int(gs) if gs else None, int(pc) if pc else None)
    default_methods = _methods(top) or list(METHODS)

    jobs = []
    blocks = secs[1:]
    if not blocks:
        raise ValidationError("bench config has no [workload] blocks")
    for k, sec in enumerate(blocks, start=1):
        if sec.name != "workload":
            raise ValidationError(f"line {sec.line}: unknown section [{sec.name}]")
        _, shape = domain_from_section(sec, allow_extra=FAMILY_KEYS)
        W = workload_from_section(sec, shape)
        label = sec.get("label", f"w{k}")
        for m in _methods(sec) or default_methods:
            jobs.append((label, W, m))
    threads = max(1, int(os.environ.get(THREADS_ENV, "1")))
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(lambda j: _bench_row(j[0], j[1], j[2], pp, config, tol), jobs))


def _methods(sec):
    val = sec.get("methods")
    if val is None:
        return None
    out = [s.strip() for s in val.strip("[]").split(",") if s.strip()]
    bad = [m for m in out if m not in BENCH_METHODS]
    if bad:
        raise ValidationError(f"line {sec.line_of('methods')}: unknown methods {bad}")
    return out


def cmd_bench(args):
    text = read_text(args.config, "bench config")
    rows = run_bench(text)
    rpath = os.path.join(args.out, "results.csv")
    write_table(rpath, BENCH_HEADER, rows)
    _write_manifest(args.out, "bench", args, [rpath], domain_spec=text)
    failed = sum(r[-1] != "ok" for r in rows)
    print(f"{len(rows)} rows written to {rpath}" + (f", {failed} failed" if failed else ""))
    return 0


# --- argument parsing -------------------------------------------------------


def _dims(text):
    try:
        return [int(v) for v in text.replace("x", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; use e.g. 8,8") from None


def build_parser():
    ap = argparse.ArgumentParser(prog="adaptmm", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"adaptmm {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def privacy(p, required=False):
        p.add_argument("--eps", type=float, required=required)
        p.add_argument("--delta", type=float, required=required)
        p.add_argument("--calibration", type=float, default=2.0,
                       help="constant c in P = 2 ln(c/delta) / eps^2 (default 2)")

    p = sub.add_parser("workload", help="build a workload matrix from a spec file")
    p.add_argument("spec")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_workload)

    p = sub.add_parser("select", help="choose a strategy and report its error")
    p.add_argument("--workload", required=True)
    p.add_argument("--method", choices=METHODS, default="eigen")
    p.add_argument("--dims", type=_dims, help="domain shape, e.g. 8,8 (default: 1-D)")
    p.add_argument("--reduction", choices=("full", "sep", "principal"), default="full")
    p.add_argument("--group-size", type=int)
    p.add_argument("--principal-count", type=int)
    p.add_argument("--normalize", action="store_true",
                   help="design for the row-normalized workload (relative error)")
    p.add_argument("--tol", type=float, default=1e-8)
    privacy(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("run", help="run the matrix mechanism on a data vector")
    p.add_argument("--workload", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--data", required=True)
    privacy(p, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--sanity", type=float, default=1.0,
                   help="floor on |truth| in relative error (default 1)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ingest", help="count records per cell")
    p.add_argument("--records", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("bench", help="error table for workloads x methods")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
