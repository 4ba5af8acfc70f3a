"""Experiment configuration, dispatch, verdicts and result persistence.

A run takes a JSON configuration, validates it against a per-kind schema
(unknown keys are rejected), calls the owning module, writes CSV tables and a
JSON manifest, and returns an exit status:

    0  every enforced claim check passed
    1  at least one enforced claim check failed
    2  invalid configuration (nothing written)
    3  runtime error (partial tables flushed, manifest marked FAILED)
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
import time
import traceback
from dataclasses import dataclass, field
from importlib import metadata
from typing import Any, Callable

import jsonschema
import numpy as np

from . import fields as fields_mod
from .errors import ConfigError
from .exponents import TABLE
from .fields import SpectralField, dump_field, smooth_random_field
from .fitting import PowerLawFit, Verdict, compare_to_table, fit_power_law
from .geometry import geometric_bound_sweep, snap_levels
from .lattice import AnnulusCount, TorusGeometry, counts_to_rows, form_from_torus, sup_annulus_count
from .nls import (NormTrace, SimulationConfig, growth_fit, load_checkpoint, picard_iteration,
                  record_state, run_simulation, trim_trace)
from .strichartz import QuadratureSpec, maximize_bilinear, maximize_ratio

SCHEMA_VERSION = 1
KINDS = ("count-sweep", "geometry-sweep", "strichartz-sweep", "bilinear-sweep", "simulate", "picard")
EXIT_PASS, EXIT_CLAIM_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

TOLERANCE_NOTE = ("Slope tolerances are an artifact policy: the claimed bounds hold up to "
                  "unquantified constants and arbitrarily small exponent losses.")

# -- schemas --------------------------------------------------------------------

_pos_int = {"type": "integer", "minimum": 1}
_nonneg_int = {"type": "integer", "minimum": 0}
_pos_num = {"type": "number", "exclusiveMinimum": 0}
_alpha = {"type": "array", "minItems": 1, "maxItems": 10,
          "items": {"type": "number", "minimum": 0.5, "maximum": 2.0}}
_common = {
    "kind": {"enum": list(KINDS)},
    "alpha": _alpha,
    "seed": _nonneg_int,
    "tolerance": {"type": "number", "minimum": 0},
}
_quadrature = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"t_end": _pos_num, "n_time": {"type": "integer", "minimum": 2}},
}
_maximize = {
    "trials": _pos_int,
    "max_iters": _pos_int,
    "screen": {"oneOf": [{"type": "null"},
                         {"type": "array", "items": _pos_int, "minItems": 2, "maxItems": 2}]},
    "precision": {"enum": ["double", "single"]},
    "quadrature": _quadrature,
}


def _schema(props: dict, required: list[str]) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {**_common, **props},
        "required": ["alpha", *required],
    }


SCHEMAS: dict[str, dict] = {
    "count-sweep": _schema({
        "N": {"type": "array", "items": _pos_int, "minItems": 2},
        "width": _pos_num,
        "mode": {"enum": ["full", "orthant"]},
    }, ["N"]),
    "geometry-sweep": _schema({
        "X": {"oneOf": [
            {"type": "array", "items": _pos_num, "minItems": 2},
            {"type": "object", "additionalProperties": False, "required": ["min", "max", "count"],
             "properties": {"min": _pos_num, "max": _pos_num, "count": {"type": "integer", "minimum": 2}}},
        ]},
        "width": _pos_num,
        "snap": {"type": "boolean"},
    }, ["X"]),
    "strichartz-sweep": _schema({
        "N": {"type": "array", "items": _pos_int, "minItems": 2},
        "method": {"enum": ["lbfgs", "fixed-point"]},
        **_maximize,
    }, ["N"]),
    "bilinear-sweep": _schema({
        "N1": {"type": "array", "items": _pos_int, "minItems": 2},
        "N2_factor": _pos_int,
        **_maximize,
    }, ["N1"]),
    "simulate": _schema({
        "N": _pos_int,
        "dt": _pos_num,
        "t_end": _pos_num,
        "record_stride": _pos_int,
        "sobolev_orders": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "h1_norm": _pos_num,
        "focusing": {"type": "boolean"},
        "growth": {"type": "object", "additionalProperties": False, "required": ["s", "t_min"],
                   "properties": {"s": {"type": "number", "minimum": 0}, "t_min": _pos_num}},
        "checkpoint_every": _nonneg_int,
        "resume": {"type": "boolean"},
    }, ["N", "dt", "t_end"]),
    "picard": _schema({
        "N": _pos_int,
        "T": _pos_num,
        "iters": {"type": "integer", "minimum": 2},
        "n_time": {"type": "integer", "minimum": 2},
        "h1_norm": {"type": "number", "minimum": 0},
        "precision_bits": {"oneOf": [{"type": "null"}, {"type": "integer", "minimum": 53}]},
        "contraction_bound": _pos_num,
    }, ["N", "T", "iters"]),
}

DEFAULTS: dict[str, dict] = {
    "count-sweep": {"width": 1.0, "mode": "full", "tolerance": 0.1},
    "geometry-sweep": {"width": 1.0, "snap": True, "tolerance": 0.05},
    "strichartz-sweep": {"trials": 16, "max_iters": 50, "screen": None, "precision": "double",
                         "method": "lbfgs", "quadrature": {}, "tolerance": 0.1},
    "bilinear-sweep": {"N2_factor": 4, "trials": 8, "max_iters": 50, "screen": None,
                       "precision": "double", "quadrature": {}, "tolerance": 0.1},
    "simulate": {"record_stride": 1, "sobolev_orders": [1.0, 2.0], "h1_norm": 1.0, "focusing": False,
                 "checkpoint_every": 0, "resume": False},
    "picard": {"n_time": 101, "h1_norm": 0.1, "precision_bits": 160, "contraction_bound": 0.5},
}


@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    seed: int = 0

    @property
    def geometry(self) -> TorusGeometry:
        return TorusGeometry(tuple(self.params["alpha"]))

    def echo(self) -> dict:
        return {"kind": self.kind, **self.params, "seed": self.seed}


def validate_config(raw: Any, kind: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Schema-check ``raw`` and fill defaults.  Raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    k = raw.get("kind", kind)
    if k is None:
        raise ConfigError("configuration has no 'kind' and none was given")
    if k not in SCHEMAS:
        raise ConfigError(f"unknown kind {k!r}; expected one of {', '.join(KINDS)}")
    if kind is not None and raw.get("kind", kind) != kind:
        raise ConfigError(f"config kind {raw['kind']!r} does not match subcommand {kind!r}")
    try:
        jsonschema.validate(raw, SCHEMAS[k])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    params = copy.deepcopy(DEFAULTS[k])
    params.update({key: copy.deepcopy(v) for key, v in raw.items() if key not in ("kind", "seed")})
    use_seed = int(seed if seed is not None else raw.get("seed", 0))
    cfg = ExperimentConfig(k, params, use_seed)
    try:
        cfg.geometry
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if k == "geometry-sweep" and isinstance(params["X"], dict) and params["X"]["max"] < params["X"]["min"]:
        raise ConfigError("X: max must not be below min")
    if k in ("strichartz-sweep", "bilinear-sweep") and params["screen"] is not None:
        if params["screen"][0] > params["max_iters"]:
            raise ConfigError("screen: evaluations per restart exceed max_iters")
    return cfg


def load_config(path: str | os.PathLike, kind: str | None = None, seed: int | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return validate_config(raw, kind, seed)


# -- run context ------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class Check:
    name: str
    passed: bool
    enforced: bool
    detail: str
    verdict: Verdict | None = None

    def as_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "enforced": self.enforced, "detail": self.detail}
        if self.verdict is not None:
            v = self.verdict
            out.update(slope=v.slope, claim=v.claim, tolerance=v.tolerance, direction=v.direction)
        return out


@dataclass
class RunContext:
    out_dir: str
    config: ExperimentConfig
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    binaries: list[str] = field(default_factory=list)
    fits: dict[str, dict] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    notes: dict[str, Any] = field(default_factory=dict)

    def table(self, name: str, header: list[str]) -> list[list]:
        rows: list[list] = []
        self.tables[name] = (header, rows)
        return rows

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def add_fit(self, name: str, fit: PowerLawFit):
        self.fits[name] = {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual,
                           "samples": [[float(x), float(y)] for x, y in fit.samples]}

    def claim(self, name: str, fit: PowerLawFit | float, claim, tolerance: float, direction: str,
              enforced: bool = True) -> Verdict:
        v = compare_to_table(fit, float(claim), tolerance, direction)
        self.checks.append(Check(name, v.passed, enforced, v.describe(), v))
        return v

    def flush_tables(self):
        for name, (header, rows) in self.tables.items():
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
            with open(self.path(name), "w", newline="") as fh:
                fh.write(buf.getvalue())


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# -- runners --------------------------------------------------------------------

def _run_count(ctx: RunContext):
    p = ctx.config.params
    g = ctx.config.geometry
    Q = form_from_torus(g)
    rows = ctx.table("counts.csv", ["d", *[f"theta{j + 1}" for j in range(g.d)], "N", "ell", "width", "count"])
    samples, results = [], []
    for N in sorted(set(p["N"])):
        res = sup_annulus_count(Q, N, p["width"], mode=p["mode"])
        results.append(AnnulusCount(N, res.ell_star, res.count, p["width"]))
        samples.append((N, res.count))
    rows.extend(counts_to_rows(Q, results))
    fit = fit_power_law(samples)
    ctx.add_fit("count_vs_N", fit)
    ctx.claim("sup annulus count exponent", fit, TABLE.count(g.d), p["tolerance"], "upper")


def _x_grid(spec) -> list[float]:
    if isinstance(spec, dict):
        return np.geomspace(spec["min"], spec["max"], spec["count"]).tolist()
    return [float(x) for x in spec]


def _run_geometry(ctx: RunContext):
    p = ctx.config.params
    g = ctx.config.geometry
    Q = form_from_torus(g)
    targets = _x_grid(p["X"])
    targets = sorted(targets)
    levels = snap_levels(Q, targets, p["width"], distinct=True) if p["snap"] else targets
    rows = ctx.table("geometry.csv", ["target", "X", "n_points", "D", "ratio", "envelope", "max_collinear",
                                      "within_sqrt_x"])
    sweep = geometric_bound_sweep(Q, sorted(set(levels)), p["width"])
    ctx.notes["levels_requested"] = len(targets)
    ctx.notes["levels_used"] = len(sweep.samples)
    env = np.minimum.accumulate(np.array([s.D for s in sweep.samples])[::-1])[::-1]
    first_target = {}
    for t, lv in zip(targets, levels):
        first_target.setdefault(lv, t)
    for s, e in zip(sweep.samples, env):
        rows.append([first_target.get(s.X, s.X), s.X, s.n_points, s.D, s.ratio, e, s.max_collinear,
                     s.within_sqrt_x])
    ctx.notes["skipped"] = [[x, why] for x, why in sweep.skipped]
    ctx.notes["flagged_above_sqrt_x"] = [s.X for s in sweep.flagged]
    ctx.notes["min_ratio"] = sweep.min_ratio
    ctx.checks.append(Check("D(X)/X^e bounded below", sweep.min_ratio > 0, True,
                            f"min ratio {sweep.min_ratio:.4g} over {len(sweep.samples)} levels"))
    if sweep.fit is not None:
        ctx.add_fit("envelope_vs_X", sweep.fit)
        ctx.claim("lower-envelope diameter exponent", sweep.fit, TABLE.geometric(g.d), p["tolerance"], "lower")


def _quad(p) -> QuadratureSpec:
    q = p.get("quadrature") or {}
    return QuadratureSpec(t_end=q.get("t_end", 1.0), n_time=q.get("n_time"))


def _run_strichartz(ctx: RunContext):
    p = ctx.config.params
    g = ctx.config.geometry
    rows = ctx.table("strichartz.csv", ["N", "best_ratio", "trials", "converged_trials", "evaluations",
                                        "n_time", "grid"])
    samples = []
    for N in sorted(set(p["N"])):
        res = maximize_ratio(N, g, p["trials"], p["max_iters"], ctx.config.seed, _quad(p),
                             precision=p["precision"], method=p["method"],
                             screen=tuple(p["screen"]) if p["screen"] else None)
        rows.append([N, res.best_ratio, p["trials"], sum(res.converged), res.evaluations,
                     res.quadrature.n_time, "x".join(map(str, res.quadrature.spatial_grid))])
        name = f"argmax_N{N}.tdlf"
        dump_field(ctx.path(name), res.argmax)
        ctx.binaries.append(name)
        samples.append((N, res.best_ratio))
    fit = fit_power_law(samples)
    ctx.add_fit("ratio_vs_N", fit)
    ctx.claim("L4 Strichartz ratio exponent", fit, TABLE.s0(g.d), p["tolerance"], "upper")


def _run_bilinear(ctx: RunContext):
    p = ctx.config.params
    g = ctx.config.geometry
    rows = ctx.table("bilinear.csv", ["N1", "N2", "best_ratio", "trials", "converged_trials", "evaluations",
                                      "n_time", "grid"])
    samples = []
    for N1 in sorted(set(p["N1"])):
        N2 = p["N2_factor"] * N1
        res = maximize_bilinear(N1, N2, g, p["trials"], p["max_iters"], ctx.config.seed, _quad(p),
                                precision=p["precision"],
                                screen=tuple(p["screen"]) if p["screen"] else None)
        rows.append([N1, N2, res.best_ratio, p["trials"], sum(res.converged), res.evaluations,
                     res.quadrature.n_time, "x".join(map(str, res.quadrature.spatial_grid))])
        samples.append((N1, res.best_ratio))
    fit = fit_power_law(samples)
    ctx.add_fit("ratio_vs_N1", fit)
    ctx.claim("bilinear ratio exponent in min(N1, N2)", fit, TABLE.s0(g.d), p["tolerance"], "upper")


def _run_simulate(ctx: RunContext):
    p = ctx.config.params
    g = ctx.config.geometry
    orders = {float(s) for s in p["sobolev_orders"]}
    if "growth" in p:
        orders.add(float(p["growth"]["s"]))
    orders = sorted(orders)
    cfg = SimulationConfig(g, p["N"], p["dt"], p["t_end"], p["record_stride"], tuple(orders),
                           ctx.config.seed, -1.0 if p["focusing"] else 1.0)
    trace_path, ckpt = ctx.path("trace.csv"), ctx.path("checkpoint.tdlf")
    trace = None
    if p["resume"] and os.path.exists(ckpt):
        state = load_checkpoint(ckpt)
        if os.path.exists(trace_path):
            trace = NormTrace.from_csv(trace_path)
            trim_trace(trace, state.time, cfg)
        start = state
    else:
        start = smooth_random_field(g, p["N"], np.random.default_rng(ctx.config.seed), p["h1_norm"])
    if trace is None:
        trace = NormTrace(g.d, cfg.sobolev_orders)
        if isinstance(start, SpectralField):
            record_state(trace, 0.0, start, cfg.sigma)
    # the live row list is registered so a failure still flushes what was recorded
    ctx.tables["trace.csv"] = (trace.header, trace.rows)
    ctx.binaries.append("checkpoint.tdlf")
    res = run_simulation(cfg, start, trace=trace, checkpoint_path=ckpt, checkpoint_every=p["checkpoint_every"])
    tr = res.trace
    mass = tr.column("mass")
    drift = float(np.max(np.abs(mass - mass[0])) / mass[0]) if mass[0] > 0 else 0.0
    ctx.notes["mass_relative_drift"] = drift
    ctx.checks.append(Check("mass conservation", drift <= 1e-10, True, f"relative drift {drift:.3e}"))
    if "growth" in p:
        s, t_min = float(p["growth"]["s"]), float(p["growth"]["t_min"])
        fit = growth_fit(tr, s, t_min)
        ctx.add_fit(f"Hs_{s:g}_vs_t", fit)
        if g.d in (2, 3):
            # consistency only: the bound is asymptotic, so an excess is flagged, not failed
            ctx.claim(f"H^{s:g} growth exponent (flag only)", fit, TABLE.sobolev_growth(g.d, s), 0.0,
                      "upper", enforced=False)


def _run_picard(ctx: RunContext):
    p = ctx.config.params
    g = ctx.config.geometry
    u0 = smooth_random_field(g, p["N"], np.random.default_rng(ctx.config.seed), p["h1_norm"])
    deltas = picard_iteration(u0, p["T"], p["iters"], p["n_time"], precision_bits=p["precision_bits"])
    rows = ctx.table("picard.csv", ["k", "delta", "ratio"])
    ratios = []
    for k, dlt in enumerate(deltas):
        r = deltas[k] / deltas[k - 1] if k > 0 and deltas[k - 1] > 0 else float("nan")
        rows.append([k, float(dlt), r])
        if k > 0:
            ratios.append(r)
    bound = p["contraction_bound"]
    finite = [r for r in ratios if not math.isnan(r)]
    ok = all(r < bound for r in finite)
    ctx.checks.append(Check("Picard contraction", ok, True,
                            f"max delta ratio {max(finite) if finite else float('nan'):.3e} vs bound {bound}"))


RUNNERS: dict[str, Callable[[RunContext], None]] = {
    "count-sweep": _run_count,
    "geometry-sweep": _run_geometry,
    "strichartz-sweep": _run_strichartz,
    "bilinear-sweep": _run_bilinear,
    "simulate": _run_simulate,
    "picard": _run_picard,
}


@dataclass
class RunOutcome:
    exit_code: int
    manifest_path: str
    manifest: dict


def run_experiment(config: ExperimentConfig, out_dir: str | os.PathLike, threads: int | None = None) -> RunOutcome:
    """Execute ``config``, writing tables, binaries and ``manifest.json`` into ``out_dir``."""
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    if threads is not None:
        fields_mod.FFT_WORKERS = int(threads)
    ctx = RunContext(out_dir, config)
    t0 = time.perf_counter()
    status, error = "OK", None
    try:
        RUNNERS[config.kind](ctx)
    except Exception as exc:  # surfaced through the manifest and exit code 3
        status = "FAILED"
        error = {"type": type(exc).__name__, "message": str(exc),
                 "traceback": traceback.format_exc(limit=5)}
        if getattr(exc, "time", None) is not None:
            error["time"] = exc.time
    wall = time.perf_counter() - t0
    ctx.flush_tables()
    outputs = []
    for name in sorted(set(ctx.tables) | set(ctx.binaries)):
        path = ctx.path(name)
        if os.path.exists(path):
            outputs.append({"path": name, "sha256": _sha256(path), "bytes": os.path.getsize(path)})
    enforced = [c for c in ctx.checks if c.enforced]
    if status == "FAILED":
        code = EXIT_RUNTIME
    elif all(c.passed for c in enforced):
        code = EXIT_PASS
    else:
        code = EXIT_CLAIM_FAIL
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "status": status,
        "kind": config.kind,
        "config": config.echo(),
        "code_version": code_version(),
        "seed": config.seed,
        "threads": threads,
        "wall_time_s": wall,
        "fits": ctx.fits,
        "checks": [c.as_dict() for c in ctx.checks],
        "tolerance_note": TOLERANCE_NOTE,
        "notes": ctx.notes,
        "outputs": outputs,
        "exit_code": code,
    }
    if error is not None:
        manifest["error"] = error
    mpath = ctx.path("manifest.json")
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return RunOutcome(code, mpath, manifest)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")
