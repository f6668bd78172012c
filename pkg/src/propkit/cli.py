"""Batch front-end for propkit.

Usage:
    propkit kernel --request req.json --out results/
    propkit trajectory --request req.json --out results/
    propkit potential --request req.json --out results/
    propkit flux --request req.json --out results/
    propkit green --request req.json --out results/
    propkit validate --seed 7 --out results/

A request is a JSON object with the keys ``field``, ``particle``,
``evaluation``, ``task``, ``numerics`` and ``output``.  Exit codes: 0 on
success, 1 when ``validate`` finds a failing check, 2 for an invalid request
and 3 for a numerical failure (the library message is reported verbatim).
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import fields as fl
from . import gauge as gg
from . import kernels as kr
from . import trajectories as tr
from .errors import DomainError, PropkitError
from .quadrature import default_tolerance

log = logging.getLogger("propkit")

TASKS = ("kernel", "trajectory", "potential", "flux", "green", "validate")

_NUM = {"type": "number"}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}
_VEC4 = {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4}
_RANGE = {
    "type": "object",
    "properties": {"start": _NUM, "stop": _NUM, "count": {"type": "integer", "minimum": 0}},
    "required": ["start", "stop", "count"],
    "additionalProperties": False,
}

REQUEST_SCHEMA = {
    "type": "object",
    "required": ["task"],
    "additionalProperties": False,
    "properties": {
        "task": {"enum": list(TASKS)},
        "field": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["free", "constant", "crossed", "planewave", "combined"]},
                "E": _VEC3,
                "B": _VEC3,
                "E0": _NUM,
                "wave": {
                    "type": "object",
                    "required": ["profile"],
                    "additionalProperties": False,
                    "properties": {
                        "k": {"oneOf": [_VEC4, {"enum": ["principal+", "principal-"]}]},
                        "eps": _VEC4,
                        "profile": {
                            "type": "object",
                            "required": ["kind"],
                            "additionalProperties": False,
                            "properties": {
                                "kind": {"enum": ["linear", "sinusoidal", "gaussian-pulse", "tabulated"]},
                                "E0": _NUM,
                                "omega": _NUM,
                                "phase": _NUM,
                                "width": _NUM,
                                "csv": {"type": "string"},
                                "phi": {"type": "array", "items": _NUM},
                                "fprime": {"type": "array", "items": _NUM},
                            },
                        },
                    },
                },
            },
        },
        "particle": {
            "type": "object",
            "required": ["m", "e"],
            "additionalProperties": False,
            "properties": {"m": {"type": "number", "exclusiveMinimum": 0}, "e": _NUM,
                           "alpha": {"type": ["number", "null"], "exclusiveMinimum": 0}},
        },
        "evaluation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "x": _VEC4,
                "xprime": _VEC4,
                "tau": {"type": "number", "exclusiveMinimum": 0},
                "tau_grid": _RANGE,
                "grid": {
                    "type": "object",
                    "required": ["axis", "start", "stop", "count"],
                    "additionalProperties": False,
                    "properties": {"axis": {"enum": [1, 2, 3]}, "start": _NUM, "stop": _NUM,
                                   "count": {"type": "integer", "minimum": 0}},
                },
                "samples": {"type": "integer", "minimum": 2},
                "method": {"enum": ["closed-form", "shooting"]},
                "points": {"type": "array", "items": _VEC4},
                "gauge": {"enum": ["classical-path", "straight-line"]},
                "along": {"enum": ["classical", "straight"]},
            },
        },
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "fd_step": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "eps_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "tau_max": {"type": "number", "exclusiveMinimum": 0},
                "instances": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": "string", "minLength": 1}, "format": {"enum": ["json", "csv", "both"]}},
        },
    },
}

_NUMERIC_DEFAULTS = {"tol": None, "fd_step": None, "eps_list": [0.004, 0.002, 0.001], "tau_max": 40.0, "instances": 2}


class RequestError(Exception):
    """Invalid request; reported with exit code 2."""


def _locate(text: str, path) -> int:
    """Best-effort line number of the last key of ``path`` in the request text."""
    keys = [k for k in path if isinstance(k, str)]
    for key in reversed(keys):
        needle = json.dumps(key) + ":"
        for n, line in enumerate(text.splitlines(), 1):
            if needle in line.replace('" :', '":'):
                return n
    return 1


def parse_request(text: str, source: str = "<request>") -> dict:
    """Parse, schema-check and normalize a request; raises ``RequestError``."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RequestError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(REQUEST_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        where = ".".join(map(str, err.absolute_path)) or "<root>"
        raise RequestError(f"{source}:{_locate(text, err.absolute_path)}: field '{where}': {err.message}")
    return normalize_request(raw)


def normalize_request(raw: dict) -> dict:
    """Fill defaults and check cross-field constraints; idempotent."""
    req = copy.deepcopy(raw)
    task = req["task"]
    req.setdefault("field", {"type": "free"})
    req.setdefault("particle", {"m": 1.0, "e": -1.0})
    req["particle"].setdefault("alpha", None)
    req.setdefault("evaluation", {})
    num = req.setdefault("numerics", {})
    for k, v in _NUMERIC_DEFAULTS.items():
        num.setdefault(k, v)
    out = req.setdefault("output", {})
    out.setdefault("path", task)
    out.setdefault("format", "both" if task in ("kernel", "trajectory") else "json")

    fld, ev = req["field"], req["evaluation"]
    kind = fld["type"]
    need = {"constant": ("E", "B"), "crossed": ("E0",), "planewave": ("wave",), "combined": ("E", "B", "wave")}
    for key in need.get(kind, ()):
        if key not in fld:
            raise RequestError(f"field '{'field.' + key}': required for field type '{kind}'")
    if task == "validate":
        return req
    for key in ("x", "xprime"):
        if key not in ev:
            raise RequestError(f"field 'evaluation.{key}': required for task '{task}'")
    if task != "green":
        if ("tau" in ev) == ("tau_grid" in ev):
            raise RequestError("field 'evaluation.tau': give exactly one of tau or tau_grid")
        if "tau_grid" in ev and ev["tau_grid"]["count"] > 0 and min(ev["tau_grid"]["start"], ev["tau_grid"]["stop"]) <= 0:
            raise RequestError("field 'evaluation.tau_grid': tau must be positive")
    if task != "kernel" and ("tau_grid" in ev or "grid" in ev):
        raise RequestError(f"field 'evaluation': sweeps are only supported by the kernel task, not '{task}'")
    if task in ("potential", "flux") and kind == "free":
        raise RequestError(f"field 'field.type': task '{task}' needs a nonzero field")
    if task == "trajectory":
        ev.setdefault("samples", 200)
        ev.setdefault("method", "closed-form")
    if task in ("potential", "flux"):
        ev.setdefault("gauge", "classical-path")
    if task == "potential":
        ev.setdefault("points", [ev["x"]])
    if task == "flux":
        ev.setdefault("along", "classical")
    if task != "kernel" and out["format"] == "csv" and task != "trajectory":
        raise RequestError(f"field 'output.format': task '{task}' has no CSV output")
    if out["format"] != "json" and task == "kernel" and "tau_grid" in ev and "grid" in ev:
        raise RequestError("field 'output.format': plot data needs a 1-D sweep; set format to json")
    return req


def dump_request(req: dict) -> str:
    """Canonical serialization (sorted keys, two-space indent)."""
    return json.dumps(req, sort_keys=True, indent=2) + "\n"


def request_hash(req: dict) -> str:
    return hashlib.sha256(dump_request(req).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# request -> library objects


def build_particle(block: dict) -> fl.ParticleParams:
    return fl.ParticleParams(float(block["m"]), float(block["e"]), block.get("alpha"))


def _build_profile(wave: dict, F0: fl.FieldTensor | None, base: Path) -> fl.PlaneWaveProfile:
    k = wave.get("k", [1.0, 0.0, 0.0, 1.0])
    if isinstance(k, str):
        if F0 is None:
            raise DomainError("principal null directions need a constant background field")
        k = fl.principal_null_directions(F0)[0 if k == "principal+" else 1]
    k = np.asarray(k, dtype=float)
    eps = wave.get("eps")
    eps = fl.lightcone_basis(k, fl._any_transverse(k)).eps if eps is None else np.asarray(eps, dtype=float)
    pr = wave["profile"]
    kind = pr["kind"]
    if kind == "linear":
        return fl.linear_profile(k, eps, pr.get("E0", 1.0))
    if kind == "sinusoidal":
        return fl.sinusoidal_profile(k, eps, pr.get("E0", 1.0), pr.get("omega", 1.0), pr.get("phase", 0.0))
    if kind == "gaussian-pulse":
        return fl.gaussian_pulse_profile(k, eps, pr.get("E0", 1.0), pr.get("width", 1.0), pr.get("omega", 1.0))
    if "csv" in pr:
        return fl.profile_from_csv(k, eps, base / pr["csv"])
    if "phi" not in pr or "fprime" not in pr:
        raise DomainError("tabulated profile needs 'csv' or both 'phi' and 'fprime'")
    return fl.tabulated_profile(k, eps, pr["phi"], pr["fprime"])


def build_field(block: dict, base: Path = Path(".")):
    """Field configuration for a request ``field`` block (``None`` for the free particle)."""
    kind = block["type"]
    if kind == "free":
        return None
    if kind == "crossed":
        return fl.ConstantUniform(fl.crossed_field(block["E0"]))
    F0 = fl.constant_from_EB(block["E"], block["B"]) if "E" in block else None
    if kind == "constant":
        return fl.ConstantUniform(F0)
    prof = _build_profile(block["wave"], F0, base)
    if kind == "planewave":
        return fl.PlaneWave.from_profile(prof)
    return fl.Combined.build(F0, prof)


# ---------------------------------------------------------------------------
# serialization


def cplx(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return cplx(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def atomic_write(path: Path, text: str) -> None:
    """Write ``text`` to a temporary file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)  # RFC-4180: CRLF line ends, minimal quoting
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def unwrapped_phase(K: kr.KernelResult) -> float:
    """``arg K`` continued through the tracked prefactor branch instead of wrapped to ``(-pi, pi]``."""
    half_arg = 0.5 * (float(np.angle(K.prefactor_ratio**2)) + 2.0 * math.pi * K.branch_index)
    return float(K.phase_exponent.imag) + half_arg


PLOT_HEADER = ("parameter", "re", "im", "abs", "phase")


def emit_plotdata(result: dict, axis: str | None = None) -> str:
    """CSV ``parameter,re,im,abs,phase`` for a 1-D kernel sweep (failed points are skipped)."""
    sweep = result.get("sweep", {})
    axes, shape = sweep.get("axes", []), sweep.get("shape", [])
    if len(shape) != 1:
        raise DomainError(f"plot data needs a 1-D sweep, result has shape {shape}")
    axis = axes[0] if axis is None else axis
    if axis not in axes:
        raise DomainError(f"axis '{axis}' is not a sweep axis (have {axes})")
    rows = []
    for pt in result["points"]:
        if "error" in pt:
            continue
        amp = complex(pt["amplitude"]["re"], pt["amplitude"]["im"])
        rows.append((pt["parameters"][axis], amp.real, amp.imag, abs(amp), pt["phase"]))
    return _write_csv(rows, PLOT_HEADER)


TRAJECTORY_HEADER = ("sigma", "y0", "y1", "y2", "y3", "dy0", "dy1", "dy2", "dy3")


def trajectory_csv(path: tr.WorldlinePath, samples: int) -> str:
    s = np.linspace(0.0, path.tau, samples)
    return _write_csv(np.column_stack([s, path.y(s), path.ydot(s)]), TRAJECTORY_HEADER)


# ---------------------------------------------------------------------------
# tasks


def _linspace(r: dict) -> np.ndarray:
    return np.linspace(r["start"], r["stop"], r["count"])


def _sweep(ev: dict):
    x0 = np.asarray(ev["x"], dtype=float)
    taus, axes = ([ev["tau"]], []) if "tau" in ev else (_linspace(ev["tau_grid"]).tolist(), ["tau"])
    if "grid" in ev:
        g = ev["grid"]
        coords = _linspace(g).tolist()
        axes.append(f"x{g['axis']}")
    else:
        g, coords = None, [None]
    points = []
    for t in taus:
        for c in coords:
            x = x0.copy()
            if g is not None:
                x[g["axis"]] = c
            params = {"tau": float(t)}
            if g is not None:
                params[f"x{g['axis']}"] = float(c)
            points.append((params, x))
    shape = ([len(taus)] if "tau_grid" in ev else []) + ([len(coords)] if g is not None else [])
    if not shape:
        axes, shape = ["tau"], [1]
    return points, axes, shape


def _error_payload(exc: Exception) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    for key in ("eigenvalue", "critical_tau", "residual"):
        val = getattr(exc, key, None)
        if val is not None:
            out[key] = _jsonable(val)
    return out


def _kernel_kw(cfg, num: dict) -> dict:
    tol = num["tol"] if num["tol"] is not None else default_tolerance(1e-10)
    if isinstance(cfg, fl.PlaneWave):
        return {"tol": tol}
    if isinstance(cfg, fl.Combined):
        return {"tol": min(tol, 1e-13), "fd_step": num["fd_step"]}
    return {}


def task_kernel(req, cfg, p, threads: int) -> tuple[dict, bool]:
    ev, num = req["evaluation"], req["numerics"]
    xp = np.asarray(ev["xprime"], dtype=float)
    points, axes, shape = _sweep(ev)
    crossed = req["field"]["type"] == "crossed"
    kw = _kernel_kw(cfg, num)

    def one(item):
        params, x = item
        try:
            if crossed:
                K = kr.kernel_crossed(cfg.F0, p, x, xp, params["tau"])
            else:
                K = kr.kernel_for(cfg, p, x, xp, params["tau"], **kw)
        except PropkitError as exc:
            log.info("point %s failed: %s", params, exc)
            return {"parameters": params, "x": x.tolist(), "error": _error_payload(exc)}
        return {
            "parameters": params,
            "x": x.tolist(),
            "amplitude": cplx(K.amplitude),
            "prefactor": cplx(K.prefactor),
            "phase_exponent": cplx(K.phase_exponent),
            "branch_index": K.branch_index,
            "phase": unwrapped_phase(K),
            "config_tag": K.config_tag,
            "gauge": K.gauge,
        }

    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, points))  # map keeps grid order
    else:
        results = [one(item) for item in points]
    failed = [r for r in results if "error" in r]
    diag = {"failed_points": len(failed)}
    if failed:
        diag["first_failure"] = failed[0]["error"]
    return {"sweep": {"axes": axes, "shape": shape}, "points": results, "diagnostics": diag}, not failed


def _path(req, cfg, p):
    ev, num = req["evaluation"], req["numerics"]
    x, xp, tau = np.asarray(ev["x"], float), np.asarray(ev["xprime"], float), float(ev["tau"])
    if ev.get("method") == "shooting":
        if cfg is None:
            cfg = fl.ConstantUniform(fl.FieldTensor.zero())
        return tr.shoot_bvp(cfg, p, x, xp, tau)
    if cfg is None:
        return tr.path_constant(fl.FieldTensor.zero(), p, x, xp, tau)
    tol = num["tol"] if num["tol"] is not None else None
    return kr.closed_form_path(cfg, p, x, xp, tau, tol=tol)


def task_trajectory(req, cfg, p, threads: int) -> tuple[dict, bool]:
    path = _path(req, cfg, p)
    check_cfg = cfg if cfg is not None else fl.ConstantUniform(fl.FieldTensor.zero())
    diag = {
        "eom_residual": tr.eom_residual(path, check_cfg, p),
        "endpoint_error": float(max(np.abs(path.y(0.0) - path.x_start).max(), np.abs(path.y(path.tau) - path.x_end).max())),
        "provenance": path.provenance,
    }
    diag.update({k: v for k, v in path.diagnostics.items() if isinstance(v, (int, float, str))})
    action = tr.classical_action(path, p)
    return {"tau": path.tau, "samples": req["evaluation"]["samples"], "action": cplx(action.total),
            "diagnostics": diag, "_path": path}, True


def _gauge_family(req, cfg, p):
    ev = req["evaluation"]
    xp = np.asarray(ev["xprime"], dtype=float)
    if ev["gauge"] == "straight-line":
        return gg.StraightLine(xp)
    return gg.ClassicalPath(cfg, p, xp, float(ev["tau"]))


def _tol(num):
    return num["tol"] if num["tol"] is not None else default_tolerance(1e-10)


def task_potential(req, cfg, p, threads: int) -> tuple[dict, bool]:
    fam = _gauge_family(req, cfg, p)
    tol = _tol(req["numerics"])
    pts = [np.asarray(v, dtype=float) for v in req["evaluation"]["points"]]

    def one(x):
        return gg.potential_from_path(cfg, fam, x, tol=tol)

    if threads > 1 and len(pts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(one, pts))
    else:
        vals = [one(x) for x in pts]
    return {"gauge": req["evaluation"]["gauge"],
            "points": [{"x": x.tolist(), "A_cov": a.tolist()} for x, a in zip(pts, vals)]}, True


def task_flux(req, cfg, p, threads: int) -> tuple[dict, bool]:
    ev = req["evaluation"]
    x, xp, tau = np.asarray(ev["x"], float), np.asarray(ev["xprime"], float), float(ev["tau"])
    tol = _tol(req["numerics"])
    classical = kr.closed_form_path(cfg, p, x, xp, tau)
    straight = gg.straight_path(xp, x)
    along = classical if ev["along"] == "classical" else straight
    fam = _gauge_family(req, cfg, p)
    return {
        "gauge": ev["gauge"],
        "along": ev["along"],
        "line_integral": gg.flux_line(cfg, fam, along, tol=tol),
        "flux_classical_vs_straight": gg.flux_surface(cfg, (classical, straight), tol=tol),
    }, True


def task_green(req, cfg, p, threads: int) -> tuple[dict, bool]:
    ev, num = req["evaluation"], req["numerics"]
    G = kr.greens_function(cfg, p, ev["x"], ev["xprime"], eps_list=tuple(num["eps_list"]),
                           tau_max=num["tau_max"], tol=num["tol"] if num["tol"] is not None else 1e-8)
    return {
        "value": cplx(G.value),
        "epsilon_used": G.epsilon_used,
        "tau_cutoff": G.tau_cutoff,
        "quadrature_error_estimate": G.quadrature_error_estimate,
        "per_epsilon": [{"epsilon": e, "value": cplx(v)} for e, v in G.per_epsilon],
    }, True


RUNNERS = {"kernel": task_kernel, "trajectory": task_trajectory, "potential": task_potential,
           "flux": task_flux, "green": task_green}


# ---------------------------------------------------------------------------
# entry point


def run_validate(req: dict | None, out: Path, seed: int) -> int:
    from .validation import report, run_suite

    instances = (req or {}).get("numerics", {}).get("instances", _NUMERIC_DEFAULTS["instances"])
    t0 = time.perf_counter()
    checks = run_suite(seed, instances, log=log.info)
    rep = report(checks, seed, instances)
    # timings live in their own file so the report is byte-stable across runs
    atomic_write(out / "validate_report.json", json.dumps(rep, indent=2) + "\n")
    atomic_write(out / "validate_timings.json", json.dumps({"wall_seconds": time.perf_counter() - t0}, indent=2) + "\n")
    for c in checks:
        if not c.passed:
            print(f"FAIL {c.name}: {c.value!r} > {c.threshold!r}", file=sys.stderr)
    print(f"validate: {rep['n_checks'] - rep['n_failed']}/{rep['n_checks']} checks passed")
    return 0 if rep["passed"] else 1


def run_task(req: dict, out: Path, threads: int = 1, base: Path = Path(".")) -> int:
    """Run a normalized request and write its outputs under ``out``."""
    task = req["task"]
    stem = out / req["output"]["path"]
    record = {"request_hash": request_hash(req), "task": task}
    t0 = time.perf_counter()
    try:
        cfg = build_field(req["field"], base)
        p = build_particle(req["particle"])
        body, ok = RUNNERS[task](req, cfg, p, threads)
    except PropkitError as exc:
        # the library message goes out unchanged
        print(f"error: {exc}", file=sys.stderr)
        record["error"] = _error_payload(exc)
        record["timings"] = {"wall_seconds": time.perf_counter() - t0}
        atomic_write(stem.with_suffix(".json"), json.dumps(_jsonable(record), indent=2) + "\n")
        return 3
    path = body.pop("_path", None)
    record.update(body)
    record["timings"] = {"wall_seconds": time.perf_counter() - t0}
    fmt = req["output"]["format"]
    if fmt in ("json", "both"):
        atomic_write(stem.with_suffix(".json"), json.dumps(_jsonable(record), indent=2) + "\n")
    if fmt in ("csv", "both"):
        if task == "trajectory":
            atomic_write(stem.with_suffix(".csv"), trajectory_csv(path, req["evaluation"]["samples"]))
        elif task == "kernel":
            atomic_write(stem.with_suffix(".csv"), emit_plotdata(_jsonable(record)))
    if not ok:
        print(f"error: {record['diagnostics']['first_failure']['message']}", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="propkit", description="Quasiclassical propagators in external fields.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in TASKS:
        sp = sub.add_parser(name, help=f"run the {name} task")
        sp.add_argument("--request", type=Path, required=name != "validate", help="JSON request file")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for grid points")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized validation instances")
        sp.add_argument("--verbose", "-v", action="store_true")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    req = None
    if args.request is not None:
        try:
            text = Path(args.request).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read request: {exc}", file=sys.stderr)
            return 2
        try:
            req = parse_request(text, str(args.request))
            if req["task"] != args.command:
                raise RequestError(f"{args.request}: field 'task': request is for '{req['task']}', "
                                   f"subcommand is '{args.command}'")
        except RequestError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    if args.command == "validate":
        return run_validate(req, args.out, args.seed)
    base = Path(args.request).resolve().parent
    return run_task(req, args.out, args.threads, base)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
