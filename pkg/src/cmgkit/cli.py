"""``cmgkit`` command line: load a space and germ, run a probe, write reports.

Reports go to ``--out-dir`` or ``$CMGKIT_REPORT_DIR`` (default: the working
directory) as ``<command>.json`` plus ``<command>.csv`` for osc, scan-schur
and sweep-qc.  Exit codes: 0 all checks pass, 1 a check failed, 2 parse or
config error, 3 domain error.  Wall time goes to stderr only so that reports
are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import __version__, catalog, geometry, germs, index, jets, probes, selftest, spaces
from .geometry import ChartDomainError, DegeneratePlaneError, Plane2

SCHEMA = "cmgkit.report/1"
REPORT_DIR_ENV = "CMGKIT_REPORT_DIR"
SIG_DIGITS = 12

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_DOMAIN = 0, 1, 2, 3
DOMAIN_ERRORS = (
    ChartDomainError,
    DegeneratePlaneError,
    jets.JetDomainError,
    germs.GradientFloorError,
    index.IndexInconclusive,
    ValueError,
)

INDEX_METHODS = ("auto", "winding_2d", "simplicial_3d", "jacobian_sign")
SWEEP_COLUMNS = ("param", "kappa_proxy", "k_max", "k_min", "osc", "refined")

# scalar run fields that may come from the config file or a flag
RUN_FIELDS = {
    "space": str, "n": int, "c": float, "germ": str, "point": str, "eps": float, "bump": str,
    "budget": int, "starts": int, "radius": float, "samples": int, "tol": float, "expect": str,
    "expect_osc": float, "eps_grid": str, "z": str, "center": str, "method": str,
    "tol_scale": float, "seed": int, "workers": int, "out_dir": str,
    "tol_grad": float, "tol_nondeg": float, "tol_conf": float, "tol_h": float, "tol_floor": float,
}


class ConfigError(Exception):
    """Unreadable config, unknown catalog reference or malformed value."""


@dataclass
class CheckResult:
    name: str
    value: Any
    tolerance: Any
    relation: str  # value <relation> tolerance must hold
    passed: bool


def _le(name, value, tol) -> CheckResult:
    return CheckResult(name, value, tol, "<=", bool(value <= tol))


def _eq(name, value, expected) -> CheckResult:
    return CheckResult(name, value, expected, "==", bool(value == expected))


# -- serialisation ----------------------------------------------------------


def _clean(obj):
    """JSON-ready copy with floats rounded to SIG_DIGITS significant digits."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{SIG_DIGITS}g}") + 0.0  # + 0.0 folds -0.0
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Plane2):
        return {"u": _clean(obj.u), "w": _clean(obj.w)}
    if hasattr(obj, "__dataclass_fields__"):
        return {f.name: _clean(getattr(obj, f.name)) for f in fields(obj) if f.repr}
    return obj


def _report_dir(run: dict) -> Path:
    return Path(run.get("out_dir") or os.environ.get(REPORT_DIR_ENV) or ".")


def write_report(out: Path, command: str, inputs: dict, results: dict, checks: list, error=None,
                 exit_code: int = EXIT_OK) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "inputs": inputs,
        "results": results,
        "checks": [c.__dict__ for c in checks],
        "passed": all(c.passed for c in checks) and error is None,
        "exit_code": exit_code,
    }
    if error is not None:
        doc["error"] = error
    path = out / f"{command}.json"
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")
    return path


def write_csv(out: Path, command: str, header, rows) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{command}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_clean(v) for v in row])
    return path


# -- config -----------------------------------------------------------------


def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        text = Path(path).read_text()
        cfg = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = cfg or {}
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    for key in ("spaces", "run"):
        if not isinstance(cfg.get(key, {}), dict):
            raise ConfigError(f"config section {key!r} must be a mapping")
    return cfg


def merge_run(cfg: dict, command: str, args: argparse.Namespace) -> dict:
    """Run parameters: config ``run`` section, then the per-command section, then flags."""
    run = {}
    for section in (cfg.get("run", {}), cfg.get(command, {})):
        if not isinstance(section, dict):
            raise ConfigError(f"config section for {command!r} must be a mapping")
        for key, value in section.items():
            key = key.replace("-", "_")
            if key not in RUN_FIELDS:
                raise ConfigError(f"unknown run field {key!r}")
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            try:
                run[key] = RUN_FIELDS[key](value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    for key in RUN_FIELDS:
        value = getattr(args, key, None)
        if value is not None:
            run[key] = value
    return run


def parse_vector(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{name} must be comma-separated numbers, got {text!r}") from exc


def _dimension(run: dict) -> int:
    if "n" in run:
        return run["n"]
    if "point" in run:
        return len(parse_vector(run["point"], "point"))
    if run.get("germ", "").lstrip("-") == "saddle2d":
        return 2
    return 3


def load_space(run: dict, cfg: dict, default: str = "sphere") -> spaces.Space:
    name = run.get("space", default)
    entries = cfg.get("spaces", {})
    if name in entries:
        return spaces.resolve(name, entries)
    entry = spaces.short_entry(name, n=_dimension(run), c=run.get("c", 1.0), eps=run.get("eps", 0.1),
                               bump=run.get("bump", "saddle"))
    return spaces.build(entry, entries)


def load_germ(space: spaces.Space, run: dict) -> germs.GermSpec:
    return spaces.germ_for(space, run.get("germ", "model"))


def _point(run: dict, key: str, m: geometry.MetricChart, default) -> np.ndarray:
    q = parse_vector(run[key], key) if key in run else np.asarray(default, dtype=float)
    if q.size != m.dim:
        raise ValueError(f"{key} has {q.size} coordinates, the space has dimension {m.dim}")
    m.check(q)
    return q


def _tolerances(run: dict) -> germs.Tolerances:
    base = germs.Tolerances()
    return germs.Tolerances(**{f.name: run.get(f"tol_{f.name}", getattr(base, f.name)) for f in fields(base)})


def _space_inputs(space: spaces.Space) -> dict:
    return {"name": space.metric.name, "kind": space.entry.kind, "params": space.entry.params,
            "dim": space.metric.dim}


# -- commands ---------------------------------------------------------------
# each returns (inputs, results, checks, csv) with csv = (header, rows) or None


def cmd_verify_cmg(run, cfg):
    space = load_space(run, cfg)
    f = load_germ(space, run)
    tols = _tolerances(run)
    sampling = germs.Neighborhood()
    v = germs.verify_cmg(space.metric, f, sampling, tols)
    expect = run.get("expect", "cmg")
    if expect not in ("cmg", "not-cmg"):
        raise ConfigError("--expect must be 'cmg' or 'not-cmg'")
    inputs = {"space": _space_inputs(space), "germ": f.label, "base": f.base, "expect": expect,
              "sampling": sampling, "tolerances": tols}
    results = {"verdict": v, "criteria": {
        "grad_norm_at_p": {"value": v.grad_norm_at_p, "tolerance": tols.grad, "relation": "<= (x germ scale)"},
        "hessian_min_abs_eigenvalue": {"value": v.hessian_min_abs_eigenvalue, "tolerance": tols.nondeg,
                                       "relation": ">="},
        "defect_sup": {"value": v.defect_sup, "tolerance": tols.conf, "relation": "<="},
        "abs_h_at_p": {"value": abs(v.h_at_p), "tolerance": tols.h, "relation": ">="},
    }}
    checks = [_eq("is_cmg", v.is_cmg, expect == "cmg"), _eq("neighbourhood reliable", v.reliable, True)]
    return inputs, results, checks, None


def cmd_curvature(run, cfg):
    space = load_space(run, cfg)
    m = space.metric
    f = load_germ(space, run)
    n = m.dim
    default_q = np.asarray(f.base) + 0.1 * m.scale * np.ones(n) / math.sqrt(n)
    q = _point(run, "point", m, default_q)
    z = parse_vector(run["z"], "z") if "z" in run else np.eye(n)[n - 1]
    if z.size != n:
        raise ValueError(f"z has {z.size} components, the space has dimension {n}")
    tols = _tolerances(run)
    tol = run.get("tol", 1e-7)
    grad_f = geometry.gradient(m, f, q[None, :])[0]
    plane = Plane2.from_vectors(m, q, grad_f, z)
    k_sec = geometry.sectional(m, plane)
    k_longo = germs.longo_curvature(m, f, q, z, floor=tols.floor)
    verdict = germs.verify_cmg(m, f, tols=tols)
    results = {"sectional": k_sec, "longo_curvature": k_longo, "is_cmg": verdict.is_cmg, "plane": plane}
    checks = [_le("|longo_curvature - sectional|", abs(k_longo - k_sec), tol)]
    if verdict.is_cmg:
        k_germ = germs.curvature_via_germ(m, f, q, z, floor=tols.floor)
        results["curvature_via_germ"] = k_germ
        checks.append(_le("|curvature_via_germ - sectional|", abs(k_germ - k_sec), tol))
    if n == 2:
        results["gaussian_curvature"] = probes.gaussian_curvature(m, q)
        results["grad_K"] = probes.curvature_gradient(m, q)
    inputs = {"space": _space_inputs(space), "germ": f.label, "point": q, "z": z, "tol": tol}
    return inputs, results, checks, None


def cmd_osc(run, cfg):
    space = load_space(run, cfg)
    m = space.metric
    p = _point(run, "point", m, np.zeros(m.dim))
    budget, starts = run.get("budget", 20000), run.get("starts", 32)
    rep = probes.osc_k(m, p, budget=budget, starts=starts)
    witness_tol = 1e-10
    checks = [
        _le("osc - (k_max - k_min)", abs(rep.osc - (rep.k_max - rep.k_min)), 0.0),
        _eq("witness planes reproduce k_max, k_min", probes.check_witness(m, rep, witness_tol), True),
    ]
    if "expect_osc" in run:
        checks.append(_le("|osc - expect_osc|", abs(rep.osc - run["expect_osc"]), run.get("tol", 1e-6)))
    inputs = {"space": _space_inputs(space), "point": p, "budget": budget, "starts": starts,
              "expect_osc": run.get("expect_osc"), "witness_tol": witness_tol}
    header = [f"x{i}" for i in range(m.dim)] + ["k_max", "k_min", "osc", "refined", "samples"]
    rows = [list(p) + [rep.k_max, rep.k_min, rep.osc, rep.refined, rep.samples]]
    return inputs, {"report": rep}, checks, (header, rows)


def cmd_index(run, cfg):
    space = load_space(run, cfg, default="euclidean")
    m = space.metric
    f = load_germ(space, run)
    method = run.get("method", "auto")
    if method not in INDEX_METHODS:
        raise ConfigError(f"unknown index method {method!r}")
    res = index.index_of_gradient(m, f, eps=run.get("radius"), method=method)
    verdict = germs.verify_cmg(m, f, tols=_tolerances(run))
    k = verdict.morse_index
    expected = int(run["expect"]) if "expect" in run else (-1) ** k
    checks = [_eq("index == expected", res.index, expected)]
    if res.jacobian_index is not None:
        checks.append(_eq("degree == sign det Jacobian", res.index, res.jacobian_index))
    inputs = {"space": _space_inputs(space), "germ": f.label, "radius": res.radius, "method": method,
              "expect": expected}
    return inputs, {"index": res, "morse_index": k}, checks, None


def cmd_scan_schur(run, cfg):
    space = load_space(run, cfg)
    m = space.metric
    center = _point(run, "center", m, np.zeros(m.dim))
    region = probes.Region(tuple(center), run.get("radius", 0.3 * m.scale), run.get("samples", 200))
    tol = run.get("tol", 1e-6)
    budget, starts = run.get("budget", 4000), run.get("starts", 8)
    v = probes.schur_scan(m, region, tol=tol, budget=budget, starts=starts, workers=run.get("workers", 1))
    expect = run.get("expect", "any")
    if expect not in ("any", "constant", "nonconstant"):
        raise ConfigError("--expect must be 'any', 'constant' or 'nonconstant'")
    results = {"constant": v.constant, "value": v.value, "reason": v.reason, "max_osc": v.max_osc,
               "spread": v.spread, "samples": v.samples, "skipped": v.skipped, "witness": v.witness,
               "tol": tol}
    checks = []
    if expect != "any":
        checks.append(_eq("verdict", "constant" if v.constant else "nonconstant", expect))
    if v.witness is not None:
        checks.append(_eq("witness planes reproduce k_max, k_min", probes.check_witness(m, v.witness), True))
    inputs = {"space": _space_inputs(space), "region": region, "tol": tol, "budget": budget, "starts": starts,
              "expect": expect}
    header = ["sample"] + [f"x{i}" for i in range(m.dim)] + ["k_max", "k_min", "osc", "refined"]
    rows = [[i] + list(r.point) + [r.k_max, r.k_min, r.osc, r.refined] for i, r in enumerate(v.reports)]
    return inputs, results, checks, (header, rows)


def cmd_sweep_qc(run, cfg):
    space = load_space(run, cfg)
    f = load_germ(space, run)
    grid = sorted(set(parse_vector(run.get("eps_grid", "0,0.05,0.1,0.2"), "eps_grid")))
    bump = run.get("bump", "saddle")
    if bump not in catalog.BUMPS:
        raise ConfigError(f"unknown bump {bump!r}")
    budget, starts = run.get("budget", 20000), run.get("starts", 32)
    base = space.metric
    rows = probes.quasiconformal_sweep(lambda e: (catalog.conformal_perturbation(base, e, bump), f), grid,
                                       budget=budget, starts=starts, workers=run.get("workers", 1))
    checks = []
    for r in rows:
        if r.param == 0.0:
            checks.append(_le("eps = 0: kappa_proxy - 1", r.kappa_proxy - 1.0, 1e-7))
            checks.append(_le("eps = 0: osc", r.osc, 1e-6))
        else:
            checks.append(CheckResult(f"eps = {r.param:g}: defect_sup", r.defect_sup, 0.0, ">", r.defect_sup > 0))
    inputs = {"space": _space_inputs(space), "germ": f.label, "bump": bump, "eps_grid": grid,
              "budget": budget, "starts": starts}
    results = {"kappa_definition": probes.KAPPA_DEFINITION, "rows": rows}
    return inputs, results, checks, (SWEEP_COLUMNS, [[getattr(r, c) for c in SWEEP_COLUMNS] for r in rows])


def cmd_selftest(run, cfg):
    tol_scale = run.get("tol_scale", 1.0)
    seed = run.get("seed", 20240)
    raw = selftest.run_selftest(tol_scale=tol_scale, workers=run.get("workers", 1), seed=seed)
    matrix = {}
    for key, text in selftest.STATEMENTS.items():
        mine = [c for c in raw if c.statement == key]
        matrix[key] = {"statement": text, "passed": all(c.passed for c in mine), "checks": len(mine)}
    checks = [CheckResult(f"{c.statement}: {c.name}", c.value, c.tolerance, c.relation, c.passed) for c in raw]
    inputs = {"tol_scale": tol_scale, "seed": seed}
    return inputs, {"matrix": matrix}, checks, None


COMMANDS = {
    "verify-cmg": cmd_verify_cmg,
    "curvature": cmd_curvature,
    "osc": cmd_osc,
    "index": cmd_index,
    "scan-schur": cmd_scan_schur,
    "sweep-qc": cmd_sweep_qc,
    "selftest": cmd_selftest,
}


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON file with 'spaces' entries and a 'run' section")
    common.add_argument("--space", help="catalog entry name or shorthand (sphere, product:s2xs2, ...)")
    common.add_argument("--n", type=int, help="dimension for model spaces")
    common.add_argument("--c", type=float, help="curvature parameter of model spaces")
    common.add_argument("--germ", help="model | saddle2d | morse:k, '-' prefix negates")
    common.add_argument("--point", help="comma-separated chart point")
    common.add_argument("--eps", type=float, help="perturbation size for perturbed-sphere")
    common.add_argument("--bump", help="conformal bump profile (saddle, gauss)")
    common.add_argument("--out-dir", dest="out_dir", help=f"report directory (default ${REPORT_DIR_ENV} or .)")
    common.add_argument("--workers", type=int, help="worker threads (default: available CPUs)")
    common.add_argument("--budget", type=int, help="osc_k sample budget")
    common.add_argument("--starts", type=int, help="osc_k multistart count")
    common.add_argument("--seed", type=int, help="random seed (selftest)")
    for name in ("grad", "nondeg", "conf", "h", "floor"):
        common.add_argument(f"--tol-{name}", dest=f"tol_{name}", type=float)

    parser = argparse.ArgumentParser(prog="cmgkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cmgkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-cmg", parents=[common], help="is the germ a conformal Morse germ?")
    p.add_argument("--expect", help="cmg (default) or not-cmg")
    p = sub.add_parser("curvature", parents=[common], help="sectional curvature three ways")
    p.add_argument("--z", help="second plane vector (comma-separated)")
    p.add_argument("--tol", type=float)
    p = sub.add_parser("osc", parents=[common], help="oscillation of sectional curvature at a point")
    p.add_argument("--expect-osc", dest="expect_osc", type=float)
    p.add_argument("--tol", type=float)
    p = sub.add_parser("index", parents=[common], help="Poincare-Hopf index of grad f at the base")
    p.add_argument("--radius", type=float)
    p.add_argument("--method", help=" | ".join(INDEX_METHODS))
    p.add_argument("--expect", help="expected index (default (-1)^morse_index)")
    p = sub.add_parser("scan-schur", parents=[common], help="constant-curvature scan over a chart ball")
    p.add_argument("--center")
    p.add_argument("--radius", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--expect", help="any | constant | nonconstant")
    p = sub.add_parser("sweep-qc", parents=[common], help="defect vs oscillation along a perturbation")
    p.add_argument("--eps-grid", dest="eps_grid", help="comma-separated eps values")
    p = sub.add_parser("selftest", parents=[common], help="full invariant suite")
    p.add_argument("--tol-scale", dest="tol_scale", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    t0 = time.perf_counter()
    run: dict = {"out_dir": args.out_dir} if args.out_dir else {}
    inputs: dict = {}
    try:
        cfg = load_config(args.config)
        run = merge_run(cfg, command, args)
        run.setdefault("workers", os.cpu_count() or 1)
        inputs, results, checks, table = COMMANDS[command](run, cfg)
    except (ConfigError, spaces.UnknownEntryError) as exc:
        return _fail(run, command, inputs, exc, EXIT_PARSE)
    except DOMAIN_ERRORS as exc:
        return _fail(run, command, inputs, exc, EXIT_DOMAIN)
    code = EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK
    out = _report_dir(run)
    path = write_report(out, command, inputs, results, checks, exit_code=code)
    if table is not None:
        write_csv(out, command, *table)
    for c in checks:
        if not c.passed:
            print(f"FAIL {c.name}: {c.value} {c.relation} {c.tolerance} does not hold", file=sys.stderr)
    print(f"{command}: {'pass' if code == EXIT_OK else 'FAIL'} -> {path} "
          f"({time.perf_counter() - t0:.2f} s)", file=sys.stderr)
    return code


def _fail(run, command, inputs, exc, code) -> int:
    error = {"type": type(exc).__name__, "message": str(exc)}
    try:
        write_report(_report_dir(run), command, inputs, {}, [], error=error, exit_code=code)
    except OSError:
        pass
    print(f"cmgkit {command}: {error['type']}: {error['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
