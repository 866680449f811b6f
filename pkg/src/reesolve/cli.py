"""Command-line front end: solve, path, check, bench.

File conventions: design matrices and response vectors are headerless CSV of
reals; problems (estimating function + penalty + lambda + config defaults)
are a single JSON document with a schema_version field; group indices are
1-based in files and converted to 0-based in memory; reports are JSON with
every number round-trippable (non-finite values are serialized as the
strings "inf"/"-inf"/"nan"); summary tables are CSV with numbers printed to
17 significant digits.

Exit codes: 0 success, 1 numerical or certificate failure, 2 usage/input
error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from itertools import product
from pathlib import Path
from typing import Optional

import numpy as np

from .diagnostics import fixed_point_residual, kkt_residual, vi_probe
from .estimating import (
    EstimatingFunction,
    LeastSquaresEstimating,
    LinearEstimating,
    LogisticEstimating,
    lipschitz_upper_bound,
)
from .model import (
    BallConstraint,
    BallIndicator,
    ElasticNet,
    EstimatingProblem,
    GroupLasso,
    GroupPartition,
    Lasso,
    PenaltySpec,
    ReesolveError,
    Ridge,
    Scad,
    SolverConfig,
    SolverReport,
    SolverStatus,
    SparseGroupLasso,
    UnsupportedPenaltyError,
    ValidationError,
    as_coefficients,
    validate_problem,
)
from .solvers import lambda_max, run_solver, solve_path

SCHEMA_VERSION = 1

CONFIG_KEYS = ("tau", "rho", "step", "t_bar", "psi", "epsilon_lqa",
               "zero_threshold", "max_iter", "tol")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _sanitize(obj):
    """Make a report JSON-safe: numpy scalars/arrays to plain Python,
    non-finite floats to portable string sentinels."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, SolverStatus):
        return obj.value
    return obj


def _load_matrix(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _load_vector(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",").ravel()


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def _parse_groups(text: str) -> list[list[int]]:
    """Parse "1,2;3,4" into 1-based index groups."""
    groups = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            groups.append([int(tok) for tok in chunk.split(",") if tok.strip()])
    return groups


def _groups_to_internal(groups: list[list[int]]) -> list[list[int]]:
    for g in groups:
        if any(i < 1 for i in g):
            raise ValidationError(
                "group indices in files/flags are 1-based; got an index < 1")
    return [[i - 1 for i in g] for g in groups]


def _penalty_from_doc(doc: dict) -> PenaltySpec:
    kind = doc.get("kind")
    if kind is None:
        raise ValidationError("penalty document is missing the 'kind' field")
    kind = str(kind).replace("-", "_")
    if kind == "ridge":
        return Ridge()
    if kind == "lasso":
        return Lasso()
    if kind == "elastic_net":
        return ElasticNet(ratio=float(doc.get("ratio", 1.0)))
    if kind in ("group_lasso", "sparse_group_lasso"):
        if "groups" not in doc:
            raise ValidationError(f"penalty '{kind}' needs a 'groups' field")
        part = GroupPartition(_groups_to_internal(doc["groups"]),
                              weights=doc.get("weights"))
        if kind == "group_lasso":
            return GroupLasso(part)
        return SparseGroupLasso(part, alpha=float(doc.get("alpha", 0.5)))
    if kind == "ball":
        norm = str(doc.get("norm", "l2"))
        if norm == "box":
            ball = BallConstraint(norm="box",
                                  lower=np.asarray(doc["lower"], dtype=float),
                                  upper=np.asarray(doc["upper"], dtype=float))
        else:
            ball = BallConstraint(norm=norm, radius=float(doc.get("radius", 1.0)))
        return BallIndicator(ball)
    if kind == "scad":
        return Scad(a=float(doc.get("a", 3.7)))
    raise ValidationError(f"unknown penalty kind '{kind}'")


def _estimating_from_doc(doc: dict, base: Path) -> EstimatingFunction:
    kind = str(doc.get("type", "least_squares")).replace("-", "_")
    declared = doc.get("lipschitz")
    if kind in ("least_squares", "logistic"):
        for field in ("design", "response"):
            if field not in doc:
                raise ValidationError(f"estimating '{kind}' needs a '{field}' file")
        X = _load_matrix(str(base / doc["design"]))
        y = _load_vector(str(base / doc["response"]))
        if kind == "least_squares":
            return LeastSquaresEstimating(X, y)
        return LogisticEstimating(X, y, lipschitz=declared)
    if kind == "linear":
        for field in ("matrix", "offset"):
            if field not in doc:
                raise ValidationError(f"estimating 'linear' needs a '{field}' file")
        A = _load_matrix(str(base / doc["matrix"]))
        b = _load_vector(str(base / doc["offset"]))
        return LinearEstimating(A, b)
    raise ValidationError(f"unknown estimating type '{kind}'")


def _merge_problem_doc(args) -> tuple[dict, Path]:
    """Combine a --problem JSON document with flag overrides."""
    doc: dict = {"schema_version": SCHEMA_VERSION}
    base = Path(".")
    if getattr(args, "problem", None):
        path = Path(args.problem)
        with open(path) as fh:
            doc = json.load(fh)
        if "schema_version" not in doc:
            raise ValidationError(
                f"problem file {path} is missing 'schema_version'")
        base = path.parent
    est = dict(doc.get("estimating", {}))
    if getattr(args, "design", None):
        est.update(type=est.get("type", "least_squares"), design=args.design)
        base = Path(".")
    if getattr(args, "response", None):
        est["response"] = args.response
    if getattr(args, "matrix", None):
        est.update(type="linear", matrix=args.matrix)
    if getattr(args, "offset", None):
        est["offset"] = args.offset
    if getattr(args, "family", None):
        est["type"] = args.family.replace("-", "_")
    if getattr(args, "lipschitz", None) is not None:
        est["lipschitz"] = args.lipschitz
    doc["estimating"] = est

    pen = dict(doc.get("penalty", {}))
    if getattr(args, "penalty", None):
        pen["kind"] = args.penalty
    if getattr(args, "groups", None):
        pen["groups"] = _parse_groups(args.groups)
    if getattr(args, "group_weights", None):
        pen["weights"] = _parse_float_list(args.group_weights)
    if getattr(args, "alpha", None) is not None:
        pen["alpha"] = args.alpha
    if getattr(args, "enet_ratio", None) is not None:
        pen["ratio"] = args.enet_ratio
    if getattr(args, "ball_norm", None):
        pen["norm"] = args.ball_norm
    if getattr(args, "radius", None) is not None:
        pen["radius"] = args.radius
    if getattr(args, "lower", None):
        pen["lower"] = _parse_float_list(args.lower)
    if getattr(args, "upper", None):
        pen["upper"] = _parse_float_list(args.upper)
    if getattr(args, "scad_a", None) is not None:
        pen["a"] = args.scad_a
    doc["penalty"] = pen

    if getattr(args, "lam", None) is not None:
        doc["lambda"] = args.lam
    return doc, base


def _build_problem(args) -> tuple[EstimatingProblem, dict, Path]:
    doc, base = _merge_problem_doc(args)
    if not doc.get("penalty", {}).get("kind"):
        raise ValidationError("no penalty given (use --penalty or a problem file)")
    u = _estimating_from_doc(doc.get("estimating", {}), base)
    penalty = _penalty_from_doc(doc["penalty"])
    lam = float(doc.get("lambda", 0.0))
    problem = validate_problem(EstimatingProblem(u=u, penalty=penalty, lam=lam))
    return problem, doc, base


def _config_from_args(args, doc: dict) -> SolverConfig:
    values = dict(doc.get("config", {}))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if "max_iter" in values:
        values["max_iter"] = int(values["max_iter"])
    known = set(CONFIG_KEYS) | {"record_iterates", "allow_fd_jacobian"}
    unknown = set(values) - known
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(unknown)}")
    return SolverConfig(**values)


def _initial_point(args, dim: int) -> np.ndarray:
    if getattr(args, "init", None):
        return as_coefficients(_load_vector(args.init), dim)
    return np.zeros(dim)


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

def _certificates(problem: EstimatingProblem, beta: np.ndarray, tau: float,
                  samples: int, radius: float, seed: int) -> dict:
    certs: dict = {}
    try:
        certs["fixed_point"] = {
            "tau": tau,
            "residual": fixed_point_residual(problem, beta, tau),
        }
    except UnsupportedPenaltyError:
        # nonconvex penalties have no prox; only the LQA baseline handles them
        certs["fixed_point"] = None
    if problem.lam > 0.0:
        try:
            certs["kkt"] = {"max_residual": kkt_residual(problem, beta).max_residual}
        except UnsupportedPenaltyError:
            certs["kkt"] = None
    else:
        certs["kkt"] = None
    try:
        probe = vi_probe(problem, beta, samples, radius, seed)
        certs["vi_probe"] = {
            "samples": probe.samples, "radius": probe.radius, "seed": probe.seed,
            "worst": probe.worst_value, "passed": probe.passed,
        }
    except UnsupportedPenaltyError:
        certs["vi_probe"] = None
    return certs


def _certificates_text(certs: dict) -> str:
    lines = []
    fp = certs.get("fixed_point")
    if fp is not None:
        lines.append(
            f"fixed-point residual (tau={_fmt(fp['tau'])}): {_fmt(fp['residual'])}")
    else:
        lines.append("fixed-point residual: not applicable")
    if certs.get("kkt") is not None:
        lines.append(f"kkt residual (max): {_fmt(certs['kkt']['max_residual'])}")
    else:
        lines.append("kkt residual: not applicable")
    vi = certs.get("vi_probe")
    if vi is not None:
        verdict = "pass" if vi["passed"] else "FAIL"
        lines.append(
            f"vi probe: {verdict} (samples={vi['samples']}, "
            f"radius={_fmt(vi['radius'])}, seed={vi['seed']}, "
            f"worst={_fmt(vi['worst'])})")
    else:
        lines.append("vi probe: not applicable")
    return "\n".join(lines)


def _certificate_tau(problem: EstimatingProblem,
                     report: SolverReport) -> float:
    if report.stepsize is not None:
        return report.stepsize
    L = lipschitz_upper_bound(problem.u)
    return 1.0 / L if L else 1.0


def _report_to_dict(report: SolverReport, doc: dict, certs: dict) -> dict:
    return _sanitize({
        "schema_version": SCHEMA_VERSION,
        "method": report.method,
        "status": report.status,
        "iterations": report.iterations,
        "initial_residual": report.initial_residual,
        "stepsize": report.stepsize,
        "flags": list(report.flags),
        "solution": report.solution,
        "config": asdict(report.config),
        "trace": {
            "k": [rec.k for rec in report.trace],
            "fp_residual": [rec.fp_residual for rec in report.trace],
            "step": [rec.step for rec in report.trace],
            "theta": [rec.theta for rec in report.trace],
        },
        "certificates": certs,
        "problem": doc,
    })


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    problem, doc, _ = _build_problem(args)
    config = _config_from_args(args, doc)
    init = _initial_point(args, problem.u.dim)
    report = run_solver(problem, config, init, args.method,
                        L=getattr(args, "lipschitz", None))
    tau = _certificate_tau(problem, report)
    certs = _certificates(problem, report.solution, tau,
                          args.vi_samples, args.vi_radius, args.seed)
    out = Path(args.out)
    with open(out, "w") as fh:
        json.dump(_report_to_dict(report, doc, certs), fh, indent=2)
    print(f"method: {report.method}")
    print(f"status: {report.status.value} (iterations={report.iterations})")
    for flag in report.flags:
        print(f"flag: {flag}")
    print(_certificates_text(certs))
    print(f"report written to {out}")
    if report.status in (SolverStatus.DIVERGED, SolverStatus.NUMERICAL_FAILURE):
        return 1
    return 0


# ---------------------------------------------------------------------------
# path
# ---------------------------------------------------------------------------

def _resolve_jobs(args) -> int:
    if getattr(args, "jobs", None) is not None:
        return max(1, args.jobs)
    env = os.environ.get("REE_SOLVE_JOBS")
    return max(1, int(env)) if env else 1


def cmd_path(args) -> int:
    problem, doc, _ = _build_problem(args)
    config = _config_from_args(args, doc)
    init = _initial_point(args, problem.u.dim)
    if args.lambdas:
        lams = _parse_float_list(args.lambdas)
    elif args.auto_grid:
        lmax = lambda_max(problem.u)
        if lmax <= 0.0:
            raise ValidationError("auto grid needs U(0) != 0")
        lams = list(np.geomspace(lmax, lmax / 100.0, args.auto_grid))
    else:
        raise ValidationError("give --lambdas or --auto-grid")
    warm = not args.cold
    jobs = _resolve_jobs(args)

    if warm or jobs == 1:
        entries = solve_path(problem, lams, config, method=args.method,
                             init=init, L=args.lipschitz, warm_start=warm)
    else:
        def one(lam: float):
            sub = replace(problem, lam=lam)
            return run_solver(sub, config, init.copy(), args.method,
                              L=args.lipschitz)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(one, lams))
        from .solvers import PathEntry
        entries = [PathEntry(lam, rep) for lam, rep in zip(lams, reports)]

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    coef_rows = []
    for i, entry in enumerate(entries):
        report = entry.report
        sub = replace(problem, lam=entry.lam)
        tau = _certificate_tau(sub, report)
        try:
            kkt = kkt_residual(sub, report.solution).max_residual
            kkt_text = _fmt(kkt)
        except (UnsupportedPenaltyError, ReesolveError):
            kkt_text = ""
        sub_doc = dict(doc)
        sub_doc["lambda"] = entry.lam
        certs = _certificates(sub, report.solution, tau,
                              args.vi_samples, args.vi_radius, args.seed)
        with open(out_dir / f"report_{i:03d}.json", "w") as fh:
            json.dump(_report_to_dict(report, sub_doc, certs), fh, indent=2)
        summary_rows.append(
            f"{_fmt(entry.lam)},{entry.nonzeros},{report.iterations},"
            f"{kkt_text},{report.status.value}")
        coef_rows.append(
            ",".join([_fmt(entry.lam)] + [_fmt(v) for v in report.solution]))

    summary = out_dir / "path_summary.csv"
    with open(summary, "w") as fh:
        fh.write("lambda,nonzeros,iterations,max_kkt_residual,status\n")
        fh.write("\n".join(summary_rows) + "\n")
    p = problem.u.dim
    with open(out_dir / "path_coefficients.csv", "w") as fh:
        fh.write(",".join(["lambda"] + [f"beta_{j+1}" for j in range(p)]) + "\n")
        fh.write("\n".join(coef_rows) + "\n")
    print(f"{len(entries)} lambdas solved; summary in {summary}")
    total_iter = sum(e.report.iterations for e in entries)
    print(f"total iterations: {total_iter}")
    return 0


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    problem, _, _ = _build_problem(args)
    if args.report:
        with open(args.report) as fh:
            rep = json.load(fh)
        beta = as_coefficients(rep["solution"], problem.u.dim)
        stored = rep.get("certificates", {})
        tau = float(stored.get("fixed_point", {}).get("tau", args.tau or 1.0))
        vi_stored = stored.get("vi_probe", {})
        samples = int(vi_stored.get("samples", args.vi_samples))
        radius = float(vi_stored.get("radius", args.vi_radius))
        seed = int(vi_stored.get("seed", args.seed))
        lam = rep.get("problem", {}).get("lambda")
        if lam is not None and getattr(args, "lam", None) is None:
            problem = replace(problem, lam=float(lam))
    elif args.beta:
        beta = as_coefficients(_load_vector(args.beta), problem.u.dim)
        tau = args.tau if args.tau is not None else 1.0
        samples, radius, seed = args.vi_samples, args.vi_radius, args.seed
    else:
        raise ValidationError("give --report or --beta")

    certs = _certificates(problem, beta, tau, samples, radius, seed)
    print(_certificates_text(certs))

    failures = []
    if certs.get("fixed_point") is not None:
        fp = certs["fixed_point"]["residual"]
        if fp > args.fp_tol:
            failures.append(("fixed-point", fp))
    if certs.get("kkt") is not None:
        kkt = certs["kkt"]["max_residual"]
        if kkt > args.kkt_tol:
            failures.append(("kkt", kkt))
    if certs.get("vi_probe") is not None:
        worst = certs["vi_probe"]["worst"]
        if worst < -args.vi_tol:
            failures.append(("vi-probe", worst))
    if failures:
        name, value = max(failures, key=lambda f: abs(f[1]))
        print(f"FAILED: worst violation in {name} certificate ({_fmt(value)})")
        return 1
    print("all certificates pass")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _bench_penalty(kind: str, p: int) -> PenaltySpec:
    kind = kind.replace("-", "_")
    if kind == "lasso":
        return Lasso()
    if kind == "ridge":
        return Ridge()
    if kind == "elastic_net":
        return ElasticNet(ratio=1.0)
    if kind in ("group_lasso", "sparse_group_lasso"):
        size = 5
        groups = [list(range(i, min(i + size, p))) for i in range(0, p, size)]
        part = GroupPartition(groups)
        if kind == "group_lasso":
            return GroupLasso(part)
        return SparseGroupLasso(part, alpha=0.5)
    raise ValidationError(f"unsupported bench penalty '{kind}'")


def _bench_cell(cell: dict) -> dict:
    p, n, seed = cell["p"], cell["n"], cell["seed"]
    rng = np.random.default_rng([seed, p, n])
    X = rng.standard_normal((n, p))
    k = max(1, int(round(cell.get("density", 0.1) * p)))
    beta_star = np.zeros(p)
    support = rng.choice(p, size=k, replace=False)
    beta_star[support] = rng.uniform(1.0, 2.0, size=k) * rng.choice([-1.0, 1.0], size=k)
    y = X @ beta_star + cell.get("noise", 0.1) * rng.standard_normal(n)
    u = LeastSquaresEstimating(X, y)
    penalty = _bench_penalty(cell["penalty"], p)
    if "lambda" in cell:
        lam = float(cell["lambda"])
    else:
        lam = float(cell.get("lambda_rel", 0.25)) * lambda_max(u)
    problem = EstimatingProblem(u=u, penalty=penalty, lam=lam)
    config = SolverConfig(tol=cell.get("tol", 1e-6),
                          max_iter=int(cell.get("max_iter", 5000)),
                          epsilon_lqa=cell.get("epsilon_lqa", 1e-8),
                          record_iterates=False)
    init = np.zeros(p)
    method = cell["solver"]

    best_wall = math.inf
    report = None
    error = None
    for _ in range(int(cell.get("repeats", 1))):
        start = time.perf_counter()
        try:
            report = run_solver(problem, config, init.copy(), method)
        except (ReesolveError, np.linalg.LinAlgError) as exc:
            error = exc
            break
        best_wall = min(best_wall, time.perf_counter() - start)

    row = {"p": p, "n": n, "penalty": cell["penalty"], "solver": method,
           "seed": seed, "lambda": lam}
    if error is not None or report is None:
        row.update(status=f"error:{type(error).__name__}", iterations=0,
                   wall_seconds="", per_iteration_seconds="",
                   final_residual="", flags="")
        return row
    final_res = (report.trace[-1].fp_residual if report.trace
                 else report.initial_residual)
    row.update(
        status=report.status.value,
        iterations=report.iterations,
        wall_seconds=best_wall,
        per_iteration_seconds=best_wall / max(report.iterations, 1),
        final_residual=final_res,
        flags=";".join(report.flags),
    )
    return row


def bench_rows(manifest: dict) -> list[dict]:
    """Expand a benchmark manifest into its cell matrix and run every cell.

    BLAS thread pools are pinned to one thread for the duration of the run
    (set ``"pin_blas_threads": false`` to opt out): per-cell wall times stay
    reproducible and cells do not fight over cores when run concurrently.
    """
    def listify(v):
        return v if isinstance(v, list) else [v]

    cells = []
    for p, pen, solver, seed in product(
            listify(manifest.get("p", 100)),
            listify(manifest.get("penalty", "lasso")),
            listify(manifest.get("solver", "picard")),
            listify(manifest.get("seed", 0))):
        cell = {k: v for k, v in manifest.items()
                if k not in ("p", "penalty", "solver", "seed", "schema_version",
                             "jobs")}
        cell.update(p=int(p), n=int(manifest.get("n", 100)), penalty=pen,
                    solver=solver, seed=int(seed))
        cells.append(cell)
    jobs = int(manifest.get("jobs", 1))

    def run_cells() -> list[dict]:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(_bench_cell, cells))
        return [_bench_cell(cell) for cell in cells]

    if manifest.get("pin_blas_threads", True):
        try:
            from threadpoolctl import threadpool_limits
        except ImportError:
            return run_cells()
        with threadpool_limits(limits=1):
            return run_cells()
    return run_cells()


BENCH_COLUMNS = ("p", "n", "penalty", "solver", "seed", "lambda", "status",
                 "iterations", "wall_seconds", "per_iteration_seconds",
                 "final_residual", "flags")


def cmd_bench(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    if "schema_version" not in manifest:
        raise ValidationError(
            f"manifest {args.manifest} is missing 'schema_version'")
    if getattr(args, "jobs", None) is not None or os.environ.get("REE_SOLVE_JOBS"):
        manifest["jobs"] = _resolve_jobs(args)
    rows = bench_rows(manifest)
    with open(args.out, "w") as fh:
        fh.write(",".join(BENCH_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in BENCH_COLUMNS:
                val = row[col]
                cells.append(_fmt(val) if isinstance(val, float) else str(val))
            fh.write(",".join(cells) + "\n")
    print(f"{len(rows)} cells written to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_problem_args(sub: argparse.ArgumentParser) -> None:
    g = sub.add_argument_group("problem")
    g.add_argument("--problem", help="problem JSON document")
    g.add_argument("--design", help="design matrix CSV (least squares / logistic)")
    g.add_argument("--response", help="response vector CSV")
    g.add_argument("--family", choices=["least-squares", "logistic"],
                   help="data model for --design/--response")
    g.add_argument("--matrix", help="square matrix CSV for a general linear U")
    g.add_argument("--offset", help="offset vector CSV for a general linear U")
    g.add_argument("--penalty",
                   choices=["ridge", "lasso", "elastic-net", "group-lasso",
                            "sparse-group-lasso", "ball", "scad"])
    g.add_argument("--lambda", dest="lam", type=float, help="regularization strength")
    g.add_argument("--groups", help="1-based groups, e.g. '1,2;3,4'")
    g.add_argument("--group-weights", help="comma-separated group weights")
    g.add_argument("--alpha", type=float, help="sparse group lasso mix in [0,1]")
    g.add_argument("--enet-ratio", type=float, help="elastic net quadratic ratio")
    g.add_argument("--ball-norm", choices=["l1", "l2", "box"])
    g.add_argument("--radius", type=float, help="ball radius")
    g.add_argument("--lower",
                   help="box lower bounds, comma-separated "
                        "(use --lower=-1,-1 for negative values)")
    g.add_argument("--upper", help="box upper bounds, comma-separated")
    g.add_argument("--scad-a", type=float, help="SCAD shape parameter (> 2)")
    g.add_argument("--lipschitz", type=float,
                   help="declared Lipschitz constant for U")


def _add_config_args(sub: argparse.ArgumentParser) -> None:
    g = sub.add_argument_group("solver configuration")
    g.add_argument("--tau", type=float)
    g.add_argument("--rho", type=float)
    g.add_argument("--step", type=float)
    g.add_argument("--t-bar", dest="t_bar", type=float)
    g.add_argument("--psi", type=float)
    g.add_argument("--epsilon-lqa", dest="epsilon_lqa", type=float)
    g.add_argument("--zero-threshold", dest="zero_threshold", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--tol", type=float)


def _add_probe_args(sub: argparse.ArgumentParser) -> None:
    g = sub.add_argument_group("certificates")
    g.add_argument("--seed", type=int, default=0, help="probe RNG seed")
    g.add_argument("--vi-samples", dest="vi_samples", type=int, default=1000)
    g.add_argument("--vi-radius", dest="vi_radius", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reesolve",
        description="Solve and certify regularized estimating equations.")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("solve", help="run one solver on one problem")
    _add_problem_args(sp)
    _add_config_args(sp)
    _add_probe_args(sp)
    sp.add_argument("--method", default="picard",
                    choices=["picard", "km", "gra-fixed", "gra-adaptive",
                             "lqa-newton", "lqa"])
    sp.add_argument("--init", help="initial point CSV (default: zeros)")
    sp.add_argument("--out", default="report.json", help="report JSON path")
    sp.set_defaults(func=cmd_solve)

    pp = subs.add_parser("path", help="solve over a decreasing lambda grid")
    _add_problem_args(pp)
    _add_config_args(pp)
    _add_probe_args(pp)
    pp.add_argument("--method", default="picard",
                    choices=["picard", "km", "gra-fixed", "gra-adaptive",
                             "lqa-newton", "lqa"])
    pp.add_argument("--lambdas", help="comma-separated decreasing grid")
    pp.add_argument("--auto-grid", dest="auto_grid", type=int,
                    help="log-spaced grid size from lambda_max down two decades")
    pp.add_argument("--cold", action="store_true",
                    help="cold-start every lambda (default: warm start)")
    pp.add_argument("--jobs", type=int,
                    help="parallel lambdas in cold mode (default: "
                         "REE_SOLVE_JOBS or 1)")
    pp.add_argument("--init", help="initial point CSV")
    pp.add_argument("--out-dir", dest="out_dir", default="path_out")
    pp.set_defaults(func=cmd_path)

    cp = subs.add_parser("check", help="re-certify a candidate solution")
    _add_problem_args(cp)
    _add_probe_args(cp)
    cp.add_argument("--report", help="report JSON produced by solve")
    cp.add_argument("--beta", help="raw candidate CSV")
    cp.add_argument("--tau", type=float, help="stepsize for the fixed-point check")
    cp.add_argument("--fp-tol", dest="fp_tol", type=float, default=1e-8)
    cp.add_argument("--kkt-tol", dest="kkt_tol", type=float, default=1e-8)
    cp.add_argument("--vi-tol", dest="vi_tol", type=float, default=1e-8)
    cp.set_defaults(func=cmd_check)

    bp = subs.add_parser("bench", help="run a benchmark matrix")
    bp.add_argument("--manifest", required=True, help="benchmark manifest JSON")
    bp.add_argument("--out", default="bench.csv", help="output CSV")
    bp.add_argument("--jobs", type=int,
                    help="concurrent cells (default: REE_SOLVE_JOBS or 1)")
    bp.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        # ValueError covers the package's typed errors, malformed numbers in
        # CSV/JSON inputs, and json decoding failures
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
