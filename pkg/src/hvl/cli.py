"""Config-driven command line front end.

Subcommands: ``hvl solve|check|scan|fh|oracle --config <path> [--out <path>]
[--format json|csv] [--tolerance <x>] [--disable-extra-term]``.

Configs are JSON, or a flat comment-permitting ``key.path = value`` text
format that maps onto the same tree (numeric path components index lists).
The tree is validated against the published schema below before any
computation; unknown keys are rejected.

Reports are written atomically (temp file + rename) with every float at 17
significant digits and sorted keys, so identical configs produce
byte-identical files.  Exit codes: 0 success, 1 config error, 2 solver
error, 3 at least one identity check failed (reports still written),
4 parameter-derivative refusal.

``HVL_THREADS`` caps scan parallelism (process pool; rows stay ordered).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import jsonschema

from . import fh as fhmod
from . import identities as ident
from . import oracles
from .errors import (
    ClassificationError,
    ConfigError,
    DivergenceError,
    FHRefusalError,
    HvlError,
    PreconditionError,
    SolverError,
)
from .model import (
    Coulomb,
    InverseSquare,
    KleinGordonOneBody,
    KleinGordonTwoBody,
    PowerLaw,
    RadialProblem,
    Schroedinger,
    SumPotential,
    classify_singularity,
)
from .observables import fit_origin
from .solver import (
    BoundaryCondition,
    Grid,
    SolverSettings,
    default_grid,
    find_bracket,
    solve_bound_state,
    solve_kg_masslessness,
)

REPORT_SCHEMA_ID = "hvl-report/1"

_POTENTIAL_TERM = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "coulomb"},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "sign": {"enum": ["attractive", "repulsive"]},
            },
            "required": ["kind", "alpha"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "power-law"},
                "v0": {"type": "number"},
                "n": {"type": "number"},
            },
            "required": ["kind", "v0", "n"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "inverse-square"},
                "v0": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "v0"],
            "additionalProperties": False,
        },
    ],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "problem": {
            "type": "object",
            "properties": {
                "equation": {"enum": ["schrodinger", "kg-one-body",
                                      "kg-two-body"]},
                "mass": {"type": "number", "exclusiveMinimum": 0},
                "l": {"type": "integer", "minimum": 0},
                "potential": {"type": "array", "items": _POTENTIAL_TERM,
                              "minItems": 1},
            },
            "required": ["equation", "mass", "potential"],
            "additionalProperties": False,
        },
        "bc": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["auto", "regular", "singular",
                                  "singular-log", "standard-only"]},
                "tau": {"anyOf": [{"type": "number"}, {"const": "inf"}]},
                "P": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "r_min": {"type": "number", "exclusiveMinimum": 0},
                "r_switch": {"type": "number", "exclusiveMinimum": 0},
                "r_max": {"type": "number", "exclusiveMinimum": 0},
                "n_geometric": {"type": "integer", "minimum": 16},
                "n_uniform": {"type": "integer", "minimum": 16},
                "nodes": {"type": "integer", "minimum": 0},
                "bracket": {"type": "array", "items": {"type": "number"},
                            "minItems": 2, "maxItems": 2},
                "bracket_scan": {"type": "array", "items": {"type": "number"},
                                 "minItems": 2, "maxItems": 2},
                "eig_tol": {"type": "number", "exclusiveMinimum": 0},
                "massless_probe": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"enum": ["virial", "kg-virial", "origin",
                                      "hypervirial-power",
                                      "hypervirial-general", "kramer",
                                      "oscillator-recurrence"]},
                    "tolerance": {"type": "number", "exclusiveMinimum": 0},
                    "q": {"type": "number"},
                    "s": {"type": "number"},
                },
                "required": ["name"],
                "additionalProperties": False,
            },
        },
        "fh": {
            "type": "object",
            "properties": {
                "parameter": {"enum": ["m", "coupling", "omega", "l", "tau"]},
                "component": {"type": "integer", "minimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["parameter"],
            "additionalProperties": False,
        },
        "scan": {
            "type": "object",
            "properties": {
                "parameter": {"enum": ["m", "coupling", "omega", "tau"]},
                "component": {"type": "integer", "minimum": 0},
                "values": {"type": "array", "items": {"type": "number"},
                           "minItems": 1},
                "start": {"type": "number"},
                "stop": {"type": "number"},
                "steps": {"type": "integer", "minimum": 1},
            },
            "required": ["parameter"],
            "additionalProperties": False,
        },
        "oracle": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["hydrogen", "oscillator", "inverse-square",
                                  "massless-kg"]},
                "n": {"type": "integer", "minimum": 1},
                "nr": {"type": "integer", "minimum": 0},
                "l": {"type": "integer", "minimum": 0},
                "mass": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "omega": {"type": "number", "exclusiveMinimum": 0},
                "P": {"type": "number"},
                "kappa": {"type": "number", "exclusiveMinimum": 0},
                "attractive": {"type": "boolean"},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "path": {"type": "string"},
                "format": {"enum": ["json", "csv"]},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


# ---------------------------------------------------------------------------
# config loading

def _parse_scalar(text):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text  # bare word -> string


def _assign(tree, path, value):
    head, *rest = path
    key = int(head) if head.isdigit() else head
    if not rest:
        container_set(tree, key, value)
        return
    child_is_index = rest[0].isdigit()
    existing = container_get(tree, key)
    if existing is None:
        existing = [] if child_is_index else {}
        container_set(tree, key, existing)
    _assign(existing, rest, value)


def container_get(c, key):
    if isinstance(c, list):
        return c[key] if key < len(c) else None
    return c.get(key)


def container_set(c, key, value):
    if isinstance(c, list):
        while len(c) <= key:
            c.append(None)
        c[key] = value
    else:
        c[key] = value


def parse_flat_config(text):
    tree: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key.path = value'")
        key, val = line.split("=", 1)
        path = [p.strip() for p in key.strip().split(".")]
        if not all(path):
            raise ConfigError(f"line {lineno}: malformed key {key!r}")
        _assign(tree, path, _parse_scalar(val))
    return tree


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fp:
            text = fp.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            tree = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    else:
        tree = parse_flat_config(text)
    try:
        jsonschema.validate(tree, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message} "
                          f"(at {'/'.join(str(p) for p in exc.absolute_path)})"
                          ) from exc
    return tree


# ---------------------------------------------------------------------------
# building runtime objects

def build_potential(terms):
    built = []
    for t in terms:
        if t["kind"] == "coulomb":
            built.append(Coulomb(t["alpha"],
                                 t.get("sign", "attractive") == "attractive"))
        elif t["kind"] == "power-law":
            built.append(PowerLaw(t["v0"], t["n"]))
        else:
            built.append(InverseSquare(t["v0"]))
    return built[0] if len(built) == 1 else SumPotential(built)


def build_problem(cfg):
    p = cfg["problem"]
    eq = {"schrodinger": Schroedinger,
          "kg-one-body": KleinGordonOneBody,
          "kg-two-body": KleinGordonTwoBody}[p["equation"]](p["mass"])
    return RadialProblem(eq, build_potential(p["potential"]), p.get("l", 0))


def build_bc(cfg, problem):
    bcfg = cfg.get("bc", {})
    tau = bcfg.get("tau", 0.0)
    if tau == "inf":
        tau = math.inf
    cls = classify_singularity(problem)
    kind = bcfg.get("kind", "auto")
    if kind == "auto":
        bc = BoundaryCondition.from_classification(cls, problem.l, tau=tau)
    elif kind == "regular":
        bc = BoundaryCondition.regular(problem.l)
    elif kind == "singular":
        bc = BoundaryCondition.singular(bcfg.get("P", cls.P), tau)
    elif kind == "singular-log":
        bc = BoundaryCondition.singular_log(tau)
    else:
        bc = BoundaryCondition.standard_only(bcfg.get("P", cls.P))
    if "P" in bcfg and bc.kind in ("singular", "standard-only"):
        bc = BoundaryCondition(bc.kind, s=bc.s, P=bcfg["P"], tau=bc.tau)
    return bc


def build_grid(cfg, problem, bracket, settings):
    s = cfg.get("solver", {})
    explicit = all(k in s for k in ("r_max",))
    kwargs = dict(r_min=s.get("r_min", 1e-6), r_switch=s.get("r_switch", 1.0),
                  n_geometric=s.get("n_geometric", 2000),
                  n_uniform=s.get("n_uniform", 6000))
    if explicit:
        return Grid(r_max=s["r_max"], **kwargs)
    return default_grid(problem, bracket, settings, **kwargs)


def build_settings(cfg):
    s = cfg.get("solver", {})
    return SolverSettings(eig_tol=s.get("eig_tol", 1e-10))


def resolve_bracket(cfg, problem, bc, settings):
    s = cfg.get("solver", {})
    nodes = s.get("nodes", 0)
    if "bracket" in s:
        return tuple(s["bracket"]), nodes
    if "bracket_scan" in s:
        lo, hi = s["bracket_scan"]
        return find_bracket(problem, bc, nodes, lo, hi,
                            settings=settings), nodes
    raise ConfigError("solver.bracket or solver.bracket_scan is required")


# ---------------------------------------------------------------------------
# deterministic serialisation

def _fmt_float(x):
    if x != x:
        return '"nan"'
    if x == math.inf:
        return '"inf"'
    if x == -math.inf:
        return '"-inf"'
    return format(float(x), ".17g")


def emit_json(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [f'{pad}  {json.dumps(str(k))}: {emit_json(v, indent + 1)}'
                for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rows = [f"{pad}  {emit_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if obj is None:
        return "null"
    return json.dumps(obj)


def emit_csv(rows):
    if not rows:
        return ""
    cols = sorted({k for row in rows for k in row})
    out = [",".join(cols)]
    for row in rows:
        cells = []
        for c in cols:
            v = row.get(c, "")
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                cells.append(format(v, ".17g"))
            else:
                cells.append(str(v))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hvl-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(path, payload, fmt):
    if fmt == "csv":
        rows = payload.get("rows") or payload.get("reports") or [payload]
        write_atomic(path, emit_csv(rows))
    else:
        write_atomic(path, emit_json(payload) + "\n")


# ---------------------------------------------------------------------------
# command bodies

def _state_payload(state, thin_to=200):
    fit = state.origin_fit()
    n = len(state.grid.r)
    step = max(1, n // thin_to)
    idx = list(range(0, n, step))
    return {
        "eigenvalue": float(state.eigenvalue),
        "nodes": int(state.nodes),
        "norm_check": float(state.norm_check),
        "bc": {"kind": state.bc.kind, "P": float(state.bc.P),
               "tau": float(state.bc.tau), "s": int(state.bc.s)},
        "origin_fit": {
            "kind": fit.kind,
            "a_st": float(fit.a_st),
            "a_add": float(fit.a_add),
            "window": [float(fit.fit_window[0]), float(fit.fit_window[1])],
            "residual": float(fit.residual),
        },
        "samples": {
            "r": [float(state.grid.r[i]) for i in idx],
            "R": [float(state.R[i]) for i in idx],
        },
    }


def _solve_from_config(cfg):
    problem = build_problem(cfg)
    bc = build_bc(cfg, problem)
    settings = build_settings(cfg)
    bracket, nodes = resolve_bracket(cfg, problem, bc, settings)
    grid = build_grid(cfg, problem, bracket, settings)
    state = solve_bound_state(problem, bc, nodes, bracket, grid=grid,
                              settings=settings)
    return problem, bc, state


def cmd_solve(cfg, out, fmt):
    problem = build_problem(cfg)
    s = cfg.get("solver", {})
    if s.get("massless_probe"):
        bcfg = cfg.get("bc", {})
        tau = bcfg.get("tau", 0.0)
        if tau == "inf":
            tau = math.inf
        mass_found = solve_kg_masslessness(problem, problem.l, tau)
        payload = {"schema": REPORT_SCHEMA_ID, "kind": "solve",
                   "massless_probe": True, "eigenvalue": float(mass_found)}
        write_report(out, payload, fmt)
        return 0
    _, _, state = _solve_from_config(cfg)
    payload = {"schema": REPORT_SCHEMA_ID, "kind": "solve"}
    payload.update(_state_payload(state))
    write_report(out, payload, fmt)
    return 0


def _run_check(state, spec_entry, tol_override, disable_extra):
    name = spec_entry["name"]
    tol = tol_override or spec_entry.get("tolerance")
    problem = state.problem

    def t(default):
        return tol if tol is not None else default

    if name == "virial":
        return [ident.virial(state, tolerance=t(1e-6),
                             include_extra_term=not disable_extra)]
    if name == "kg-virial":
        return [ident.kg_virial(state, tolerance=t(1e-3))]
    if name == "origin":
        return ident.origin_relations(state, tolerance=t(1e-4))
    if name == "hypervirial-power":
        return [ident.hypervirial_power(state, spec_entry["q"],
                                        tolerance=t(1e-5))]
    if name == "hypervirial-general":
        return [ident.hypervirial_general(
            state, ident.ProbeFunction.power(spec_entry["q"]),
            tolerance=t(1e-5))]
    eq = problem.equation
    if name == "kramer":
        term = problem.potential
        if not isinstance(term, Coulomb):
            raise ConfigError("kramer check needs a pure coulomb potential")
        rel = ident.kramer_relation(spec_entry["s"], eq.mass, term.alpha,
                                    problem.l)
        return [rel.check(state, tolerance=t(1e-5))]
    if name == "oscillator-recurrence":
        term = problem.potential
        if not (isinstance(term, PowerLaw) and term.n == 2.0):
            raise ConfigError("oscillator check needs a quadratic potential")
        omega = math.sqrt(2.0 * term.v0 / eq.mass)
        rel = ident.oscillator_relation(spec_entry["s"], eq.mass, omega,
                                        problem.l)
        return [rel.check(state, tolerance=t(1e-5))]
    raise ConfigError(f"unknown check {name!r}")


def cmd_check(cfg, out, fmt, tol_override=None, disable_extra=False):
    checks = cfg.get("checks") or []
    if not checks:
        raise ConfigError("checks list is empty")
    _, _, state = _solve_from_config(cfg)
    reports = []
    for entry in checks:
        reports.extend(_run_check(state, entry, tol_override, disable_extra))
    payload = {
        "schema": REPORT_SCHEMA_ID,
        "kind": "check",
        "eigenvalue": float(state.eigenvalue),
        "reports": [r.as_dict() for r in reports],
        "all_pass": all(r.passed for r in reports),
    }
    write_report(out, payload, fmt)
    return 0 if payload["all_pass"] else 3


def _scan_row(cfg, parameter, component, value):
    row = {"value": float(value)}
    try:
        problem = build_problem(cfg)
        settings = build_settings(cfg)
        if parameter == "tau":
            local = dict(cfg)
            local["bc"] = dict(cfg.get("bc", {}))
            local["bc"]["tau"] = value
            problem2, bc = problem, build_bc(local, problem)
        else:
            handle = fhmod.ParameterHandle(parameter, component)
            problem2 = handle.apply(problem, value)
            row["classification"] = classify_singularity(problem2).kind
            bc = build_bc(cfg, problem2)
        bracket, nodes = resolve_bracket(cfg, problem2, bc, settings)
        grid = build_grid(cfg, problem2, bracket, settings)
        state = solve_bound_state(problem2, bc, nodes, bracket, grid=grid,
                                  settings=settings)
        fit = state.origin_fit()
        row.update({
            "eigenvalue": float(state.eigenvalue),
            "nodes": int(state.nodes),
            "a_st": float(fit.a_st),
            "a_add": float(fit.a_add),
            "classification": classify_singularity(problem2).kind,
        })
        if isinstance(problem2.equation, Schroedinger):
            rep = ident.virial(state)
            extra = 0.0
            if fit.kind == "singular":
                extra = fit.P ** 2 / problem2.equation.mass * fit.a_st * fit.a_add
            elif fit.kind == "singular-log":
                extra = -fit.a_add ** 2 / (4.0 * problem2.equation.mass)
            row["virial_residual"] = float(rep.residual)
            row["mixing_term"] = float(extra)
        return row
    except HvlError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row


def cmd_scan(cfg, out, fmt):
    scfg = cfg.get("scan")
    if not scfg:
        raise ConfigError("scan block is required")
    parameter = scfg["parameter"]
    component = scfg.get("component", 0)
    if "values" in scfg:
        values = [float(v) for v in scfg["values"]]
    else:
        try:
            start, stop, steps = scfg["start"], scfg["stop"], scfg["steps"]
        except KeyError as exc:
            raise ConfigError("scan needs values or start/stop/steps") from exc
        if steps == 1:
            values = [float(start)]
        else:
            values = [start + (stop - start) * i / (steps - 1)
                      for i in range(steps)]
    threads = int(os.environ.get("HVL_THREADS", "1") or "1")
    if threads > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_scan_row, [cfg] * len(values),
                                 [parameter] * len(values),
                                 [component] * len(values), values))
    else:
        rows = [_scan_row(cfg, parameter, component, v) for v in values]
    payload = {"schema": REPORT_SCHEMA_ID, "kind": "scan",
               "parameter": parameter, "rows": rows}
    write_report(out, payload, fmt)
    return 0


def cmd_fh(cfg, out, fmt, tol_override=None):
    fcfg = cfg.get("fh")
    if not fcfg:
        raise ConfigError("fh block is required")
    problem = build_problem(cfg)
    bc = build_bc(cfg, problem)
    settings = build_settings(cfg)
    bracket, nodes = resolve_bracket(cfg, problem, bc, settings)
    handle = fhmod.ParameterHandle(fcfg["parameter"], fcfg.get("component", 0))
    h = fcfg.get("step")
    tol = tol_override or fcfg.get("tolerance")
    grid = build_grid(cfg, problem, bracket, settings)
    if isinstance(problem.equation, KleinGordonOneBody):
        rep = fhmod.fh_kg_onebody(problem, bc, nodes, handle, bracket, h=h,
                                  grid=grid, tolerance=tol or 1e-3,
                                  settings=settings)
    elif isinstance(problem.equation, KleinGordonTwoBody):
        raise PreconditionError(
            "no parameter-derivative identity is implemented for the "
            "two-body equation")
    elif bc.kind == "regular":
        state = solve_bound_state(problem, bc, nodes, bracket, grid=grid,
                                  settings=settings)
        rep = fhmod.fh_regular(state, handle, bracket=bracket, h=h,
                               tolerance=tol or 1e-5, settings=settings)
    else:
        rep = fhmod.fh_singular_schrodinger(problem, bc, nodes, handle,
                                            bracket=bracket, h=h, grid=grid,
                                            tolerance=tol or 1e-3,
                                            settings=settings)
    payload = {"schema": REPORT_SCHEMA_ID, "kind": "fh",
               "report": rep.as_dict()}
    write_report(out, payload, fmt)
    return 0 if rep.passed else 3


def cmd_oracle(cfg, out, fmt):
    ocfg = cfg.get("oracle")
    if not ocfg:
        raise ConfigError("oracle block is required")
    kind = ocfg["kind"]
    if kind == "hydrogen":
        state = oracles.hydrogen_state(ocfg.get("n", 1), ocfg.get("l", 0),
                                       ocfg.get("mass", 1.0),
                                       ocfg.get("alpha", 1.0))
    elif kind == "oscillator":
        state = oracles.oscillator_state(ocfg.get("nr", 0), ocfg.get("l", 0),
                                         ocfg.get("mass", 1.0),
                                         ocfg.get("omega", 1.0))
    elif kind == "inverse-square":
        state = oracles.inverse_square_state(ocfg.get("P", 0.2),
                                             ocfg.get("kappa", 1.0),
                                             ocfg.get("mass", 1.0))
    else:
        state = oracles.massless_kg_state(ocfg.get("P", 0.2),
                                          ocfg.get("mass", 1.0),
                                          ocfg.get("attractive", True))
    payload = {"schema": REPORT_SCHEMA_ID, "kind": "oracle",
               "provenance": state.provenance}
    payload.update(_state_payload(state))
    write_report(out, payload, fmt)
    return 0


# ---------------------------------------------------------------------------
# entry point

def _error_payload(exc):
    kind = {
        "SupercriticalError": "supercritical",
        "NoEigenvalueError": "no-eigenvalue",
        "NodeCountError": "node-count",
        "ClassificationError": "classification",
        "DivergenceError": "divergence",
        "PreconditionError": "precondition",
        "StepTooLargeError": "step-too-large",
        "SolverError": "solver",
        "FHRefusalError": "fh-refusal",
    }.get(type(exc).__name__, "error")
    return {"schema": REPORT_SCHEMA_ID, "kind": "error",
            "error": {"type": kind, "message": str(exc)}}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hvl",
        description="Radial bound states and identity checks for regular "
                    "and singular potentials.")
    parser.add_argument("command",
                        choices=["solve", "check", "scan", "fh", "oracle"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=["json", "csv"], default=None)
    parser.add_argument("--tolerance", type=float, default=None)
    parser.add_argument("--disable-extra-term", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    out_cfg = cfg.get("output", {})
    out = args.out or out_cfg.get("path") or f"hvl-{args.command}.json"
    fmt = args.format or out_cfg.get("format", "json")

    try:
        if args.command == "solve":
            return cmd_solve(cfg, out, fmt)
        if args.command == "check":
            return cmd_check(cfg, out, fmt, args.tolerance,
                             args.disable_extra_term)
        if args.command == "scan":
            return cmd_scan(cfg, out, fmt)
        if args.command == "fh":
            return cmd_fh(cfg, out, fmt, args.tolerance)
        return cmd_oracle(cfg, out, fmt)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FHRefusalError as exc:
        write_report(out, _error_payload(exc), "json")
        print(f"refused: {exc}", file=sys.stderr)
        return 4
    except (SolverError, ClassificationError, DivergenceError,
            PreconditionError) as exc:
        write_report(out, _error_payload(exc), "json")
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
