"""Batch harness: config parsing, dispatch, CSV/JSON artifacts.

Configs are line-oriented `key = value` files under [section] headers with
the sections [problem], [functions], [numerics], [output].  Expressions are
quoted strings in the shared grammar (single variable t; radial functions
read r as t).  Unknown and duplicate keys are errors, every referenced
expression must parse before any computation starts, and output files are
written atomically, so exit code 2 never leaves partial artifacts.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bifurcation as _bif
from . import karamata as _ka
from . import numerics as _num
from . import profile as _prof
from . import radial as _rad
from .expr import ParseError, ScalarFn, parse_expression
from .ioutil import atomic_write_text, fmt

SECTIONS = ("problem", "functions", "numerics", "output")

COMMANDS = (
    "check-ko", "classify", "analyze-f", "ell", "make-k", "profile", "xi0",
    "chi", "solve-entire", "solve-system", "blowup", "rate", "eigen", "lef",
    "sweep", "gelfand", "young",
)


class ConfigError(Exception):
    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


def _keys(problem="", functions="", numerics=""):
    out = set()
    for section, names in (("problem", problem), ("functions", functions),
                           ("numerics", numerics)):
        out.update((section, name) for name in names.split())
    return out


_PROFILE_KEYS = _keys(problem="k_kind D k_alpha nu variant c",
                      functions="f S k", numerics="grid_depth tol")

_LEF_KEYS = _keys(problem="N geometry R lambda mu grad_p mode",
                  functions="f g a K source")

_ALLOWED_KEYS = {
    "check-ko": _keys(functions="f", numerics="tol"),
    "classify": _keys(problem="direction a b", functions="fn", numerics="tol"),
    "analyze-f": _keys(functions="f", numerics="u_max"),
    "ell": _keys(problem="nu", functions="k"),
    "make-k": _keys(problem="kind D", functions="S"),
    "profile": _PROFILE_KEYS,
    "xi0": _keys(problem="rho ell1 c gamma kprime0", functions="f"),
    "chi": _keys(problem="rho zeta theta ell_star c_tilde ell_sup case"),
    "solve-entire": _keys(problem="N R b0", functions="f psi phi",
                          numerics="tol panels"),
    "solve-system": _keys(problem="N R a b", functions="p q f g",
                          numerics="tol mesh_points"),
    "blowup": _PROFILE_KEYS | _keys(problem="N domain R R0 a omega0 b_normalization",
                                    functions="b", numerics="levels tol"),
    "rate": _PROFILE_KEYS | _keys(problem="solution"),
    "eigen": _keys(problem="N R mode"),
    "lef": _LEF_KEYS,
    "sweep": _LEF_KEYS | _keys(problem="lambda_grid"),
    "gelfand": _keys(problem="lambda mu N geometry solve", functions="g"),
    "young": _keys(problem="a p lambda1 N geometry"),
}


@dataclass
class ProblemSpec:
    """Parsed configuration: raw (value, lineno) per section/key."""

    command: str
    path: str
    data: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None, required: bool = False):
        entry = self.data.get(section, {}).get(key)
        if entry is None:
            if required:
                raise ConfigError(f"missing required key '{key}' in [{section}] "
                                  f"for command {self.command}")
            return default
        return entry[0]

    def expression(self, section: str, key: str, default=None, required: bool = False):
        raw = self.get(section, key, default=None, required=required)
        if raw is None:
            return default
        if not isinstance(raw, str):
            raise ConfigError(f"[{section}] {key} must be a quoted expression",
                              self.data[section][key][1])
        try:
            parse_expression(raw)
        except ParseError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}",
                              self.data[section][key][1]) from exc
        return raw

    def validate_keys(self):
        """Reject unknown keys up front, before any computation or output."""
        allowed = _ALLOWED_KEYS[self.command]
        for section, entries in self.data.items():
            for key, (_, lineno) in entries.items():
                if section == "problem" and key == "command":
                    continue
                if section == "output" and key in ("csv", "json"):
                    continue
                if (section, key) not in allowed:
                    raise ConfigError(
                        f"unknown key '{key}' in [{section}] for command {self.command}",
                        lineno,
                    )


def _parse_value(text: str, lineno: int):
    text = text.strip()
    if not text:
        raise ConfigError("empty value", lineno)
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if "," in text:
        parts = [p.strip() for p in text.split(",") if p.strip()]
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"list values must be numbers: {text!r}", lineno) from None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text  # bare word (enum-like)


def parse_config(path: str) -> ProblemSpec:
    """Parse and validate the config file; fail-fast on malformed input."""
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    data: dict = {}
    section = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            data.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', found {line!r}", lineno)
        if section is None:
            raise ConfigError("key outside any [section]", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if key in data[section]:
            raise ConfigError(f"duplicate key '{key}' in [{section}]", lineno)
        data[section][key] = (_parse_value(value, lineno), lineno)

    spec = ProblemSpec(command="", path=path, data=data)
    command = spec.get("problem", "command", required=True)
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r} (choose from {', '.join(COMMANDS)})")
    spec.command = command
    return spec


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _summary_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_summary_value(x) for x in v) + "]"
    return str(v)


def _emit(summary: dict, outdir: str, name: str, write_json: str | None):
    line = " ".join(f"{k}={_summary_value(v)}" for k, v in summary.items())
    print(line)
    if write_json:
        path = os.path.join(outdir, write_json)
        atomic_write_text(path, json.dumps(_jsonable(summary), indent=2) + "\n")
    return line


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _write_csv(outdir: str, name: str, header: str, rows, comments=()):
    lines = [f"# {c}" for c in comments]
    lines.append(header)
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    atomic_write_text(os.path.join(outdir, name), "\n".join(lines) + "\n")


def _verdict_summary(v: _num.ConvergenceVerdict) -> dict:
    out = {"verdict": v.status}
    if v.value is not None:
        out["value"] = v.value
    if v.err is not None:
        out["err"] = v.err
    if v.slope is not None:
        out["slope"] = v.slope
    return out


# ---------------------------------------------------------------------------
# Command handlers
# ---------------------------------------------------------------------------

def _cmd_check_ko(spec, outdir, opts):
    f_src = spec.expression("functions", "f", required=True)
    tol = spec.get("numerics", "tol", 1e-8)
    nl = _ka.analyze_nonlinearity(f_src)
    verdict = _ka.keller_osserman(nl, tol)
    return {"command": "check-ko", "f": f_src, **_verdict_summary(verdict)}


def _cmd_classify(spec, outdir, opts):
    fn_src = spec.expression("functions", "fn", required=True)
    direction = spec.get("problem", "direction", "tail")
    tol = spec.get("numerics", "tol", 1e-8)
    fn = ScalarFn.from_source(fn_src).fast()
    if direction == "tail":
        a = float(spec.get("problem", "a", 1.0))
        verdict = _num.classify_tail_integral(fn, a, tol)
    elif direction == "origin":
        b = float(spec.get("problem", "b", 1.0))
        verdict = _num.classify_origin_integral(fn, b, tol)
    else:
        raise ConfigError("direction must be 'tail' or 'origin'")
    return {"command": "classify", "direction": direction, "fn": fn_src,
            **_verdict_summary(verdict)}


def _cmd_analyze_f(spec, outdir, opts):
    f_src = spec.expression("functions", "f", required=True)
    u_max = float(spec.get("numerics", "u_max", 1e8))
    nl = _ka.analyze_nonlinearity(f_src, u_max)

    def show(x):
        return "unavailable" if x is None else x

    return {
        "command": "analyze-f", "f": f_src,
        "m": show(nl.m), "Lambda": show(nl.Lambda), "theta": show(nl.theta),
        "gamma": show(nl.gamma), "rho": show(nl.rho),
        "alpha_sing": show(nl.alpha_sing),
        "identities_ok": nl.check_remark_identities(),
    }


def _cmd_ell(spec, outdir, opts):
    k_src = spec.expression("functions", "k", required=True)
    nu = float(spec.get("problem", "nu", 1.0))
    est = _ka.ell_limits(ScalarFn.from_source(k_src), nu)
    return {"command": "ell", "k": k_src, "ell0": est.ell0, "ell1": est.ell1,
            "ell0_err": est.ell0_err, "ell1_err": est.ell1_err}


def _cmd_make_k(spec, outdir, opts):
    kind = spec.get("problem", "kind", required=True)
    S_src = spec.expression("functions", "S", required=True)
    D = float(spec.get("problem", "D", 1.0))
    kf = _ka.make_k(kind, S_src, D)
    return {"command": "make-k", "kind": kind, "S": S_src, "nu": kf.nu,
            "ell1": kf.ell1, "predicted_ell1": kf.predicted_ell1,
            "ell1_err": kf.ell1_err}


def _parse_kfunction(spec) -> _ka.KFunction:
    kind = spec.get("problem", "k_kind", None)
    if kind is not None:
        S_src = spec.expression("functions", "S", required=True)
        D = float(spec.get("problem", "D", 1.0))
        return _ka.make_k(kind, S_src, D)
    alpha = spec.get("problem", "k_alpha", None)
    nu = float(spec.get("problem", "nu", 1.0))
    if alpha is not None:
        return _ka.KFunction.power(float(alpha), nu=nu)
    k_src = spec.expression("functions", "k", required=True)
    k = ScalarFn.from_source(k_src)
    est = _ka.ell_limits(k, nu)
    return _ka.KFunction(k=k, nu=nu, ell0=est.ell0, ell1=est.ell1,
                         ell0_err=est.ell0_err, ell1_err=est.ell1_err, tag="user")


def _profile_from_spec(spec):
    f_src = spec.expression("functions", "f", required=True)
    nl = _ka.analyze_nonlinearity(f_src)
    kf = _parse_kfunction(spec)
    variant = spec.get("problem", "variant", "k-integrand")
    c = float(spec.get("problem", "c", 1.0))
    depth = int(spec.get("numerics", "grid_depth", 24))
    tol = spec.get("numerics", "tol", 1e-10)
    t_grid = kf.nu * 2.0 ** (-np.arange(1, depth + 1, dtype=float))
    return _prof.build_profile(nl, kf, variant=variant, t_grid=t_grid, c=c, tol=tol), f_src


def _cmd_profile(spec, outdir, opts):
    profile, f_src = _profile_from_spec(spec)
    csv = spec.get("output", "csv", "profile.csv")
    profile.export_csv(os.path.join(outdir, csv))
    return {"command": "profile", "f": f_src, "variant": profile.variant,
            "xi0": profile.xi0 if profile.xi0 is not None else "unavailable",
            "roundtrip_err": profile.roundtrip_err, "csv": csv}


def _cmd_xi0(spec, outdir, opts):
    rho = spec.get("problem", "rho", None)
    if rho is not None:
        ell1 = float(spec.get("problem", "ell1", required=True))
        c = float(spec.get("problem", "c", 1.0))
        value = _ka.xi0_power(float(rho), ell1, c)
        return {"command": "xi0", "method": "power", "xi0": value}
    f_src = spec.expression("functions", "f", required=True)
    gamma = float(spec.get("problem", "gamma", required=True))
    kprime0 = float(spec.get("problem", "kprime0", required=True))
    c = float(spec.get("problem", "c", 1.0))
    nl = _ka.analyze_nonlinearity(f_src)
    value = _ka.xi0_via_A(nl, gamma, kprime0, c)
    return {"command": "xi0", "method": "A", "f": f_src, "xi0": value}


def _cmd_chi(spec, outdir, opts):
    two = _ka.TwoTermSpec(
        rho=float(spec.get("problem", "rho", required=True)),
        zeta=float(spec.get("problem", "zeta", required=True)),
        theta=float(spec.get("problem", "theta", required=True)),
        ell_star=float(spec.get("problem", "ell_star", required=True)),
        c_tilde=float(spec.get("problem", "c_tilde", 0.0)),
        ell_sup=spec.get("problem", "ell_sup", None),
        case=spec.get("problem", "case", "purePower"),
    )
    varpi, chi = _ka.chi_two_term(two)
    return {"command": "chi", "case": two.case, "varpi": varpi, "chi": chi}


def _cmd_solve_entire(spec, outdir, opts):
    f_src = spec.expression("functions", "f", required=True)
    psi_src = spec.expression("functions", "psi", required=True)
    phi_src = spec.expression("functions", "phi", None)
    N = int(spec.get("problem", "N", required=True))
    R = float(spec.get("problem", "R", 50.0))
    b0 = float(spec.get("problem", "b0", 1.0))
    tol = spec.get("numerics", "tol", 1e-8)
    panels = int(spec.get("numerics", "panels", 2048))
    nl = _ka.analyze_nonlinearity(f_src)
    lam = nl.Lambda if nl.Lambda is not None else math.inf
    if phi_src is not None:
        pot = _rad.RadialPotential(phi=ScalarFn.from_source(phi_src),
                                   psi=ScalarFn.from_source(psi_src),
                                   lam_N=lam / (N - 2.0) if math.isfinite(lam) else 1.0)
        sol = _rad.picard_gradient_entire(pot, nl, b0, R, N, tol, panels)
    else:
        sol = _rad.picard_gradient_entire(ScalarFn.from_source(psi_src), nl, b0, R, N,
                                          tol, panels)
    csv = spec.get("output", "csv", "entire.csv")
    sol.to_csv(os.path.join(outdir, csv))
    out = {"command": "solve-entire", "classification": sol.classification,
           "iterations": sol.metadata["iterations"],
           "growth_bound_ok": sol.metadata["growth_bound_ok"],
           "u_end": float(sol.u[-1]), "csv": csv}
    for key in ("large_condition", "b_star", "ordering_ok", "plateau_drift"):
        if key in sol.metadata:
            out[key] = sol.metadata[key]
    return out


def _cmd_solve_system(spec, outdir, opts):
    sys_ = _rad.SystemProblem(
        p=_rad.RadialPotential(phi=ScalarFn.from_source(spec.expression("functions", "p", required=True))),
        q=_rad.RadialPotential(phi=ScalarFn.from_source(spec.expression("functions", "q", required=True))),
        f=_ka.analyze_nonlinearity(spec.expression("functions", "f", required=True)),
        g=_ka.analyze_nonlinearity(spec.expression("functions", "g", required=True)),
        a=float(spec.get("problem", "a", 1.0)),
        b=float(spec.get("problem", "b", 1.0)),
    )
    N = int(spec.get("problem", "N", required=True))
    R = float(spec.get("problem", "R", 50.0))
    tol = spec.get("numerics", "tol", 1e-10)
    mesh = int(spec.get("numerics", "mesh_points", 4096))
    sol = _rad.solve_system(sys_, R, N, tol, mesh)
    csv = spec.get("output", "csv", "system.csv")
    sol.to_csv(os.path.join(outdir, csv))
    return {"command": "solve-system", "classification": sol.classification,
            "iterations": sol.metadata["iterations"],
            "tp_verdict": sol.metadata["tp_verdict"],
            "tq_verdict": sol.metadata["tq_verdict"],
            "lower_bound_ok": sol.metadata["lower_bound_ok"],
            "u_end": float(sol.u[-1]), "v_end": float(sol.v[-1]), "csv": csv}


def _logistic_from_spec(spec) -> _rad.LogisticProblem:
    N = int(spec.get("problem", "N", required=True))
    domain_kind = spec.get("problem", "domain", "ball")
    if domain_kind == "ball":
        domain = ("ball", float(spec.get("problem", "R", 1.0)))
    elif domain_kind == "annulus":
        domain = ("annulus", float(spec.get("problem", "R0", 0.0)),
                  float(spec.get("problem", "R", 1.0)))
    elif domain_kind == "whole-space":
        domain = ("whole-space", float(spec.get("problem", "R", 10.0)))
    else:
        raise ConfigError(f"unknown domain {domain_kind!r}")
    return _rad.LogisticProblem(
        N=N,
        f=_ka.analyze_nonlinearity(spec.expression("functions", "f", required=True)),
        b=ScalarFn.from_source(spec.expression("functions", "b", required=True)),
        a_lin=float(spec.get("problem", "a", 0.0)),
        domain=domain,
        omega0_radius=float(spec.get("problem", "omega0", 0.0)),
        b_normalization=spec.get("problem", "b_normalization", "k2"),
    )


def _cmd_blowup(spec, outdir, opts):
    prob = _logistic_from_spec(spec)
    levels = spec.get("numerics", "levels", None)
    tol = spec.get("numerics", "tol", 1e-10)
    sol = _rad.boundary_blowup(prob, n_levels=levels, tol=tol)
    csv = spec.get("output", "csv", "blowup.csv")
    sol.to_csv(os.path.join(outdir, csv))
    out = {"command": "blowup", "classification": sol.classification,
           "blowup_radius": sol.blowup_radius if sol.blowup_radius is not None else "none",
           "levels": len(sol.metadata.get("n_levels", [])), "csv": csv}
    if spec.data.get("functions", {}).get("k") or spec.data.get("problem", {}).get("k_alpha"):
        profile, _ = _profile_from_spec(spec)
        rate = _rad.measure_boundary_rate(sol, profile)
        out["rate_ratio"] = f"{rate.limit:.2f}x"
        out["rate_limit"] = rate.limit
        out["rate_drift"] = rate.drift
    return out


def _cmd_rate(spec, outdir, opts):
    sol_path = spec.get("problem", "solution", required=True)
    sol = _read_solution_csv(os.path.join(outdir, sol_path)
                             if not os.path.isabs(sol_path) else sol_path)
    profile, _ = _profile_from_spec(spec)
    rate = _rad.measure_boundary_rate(sol, profile)
    csv = spec.get("output", "csv", "rate.csv")
    _write_csv(outdir, csv, "d,ratio_h,ratio_xi0h",
               zip(rate.d.tolist(), rate.ratio_h.tolist(), rate.ratio_xi0h.tolist()))
    return {"command": "rate", "limit": rate.limit, "drift": rate.drift, "csv": csv}


def _read_solution_csv(path) -> _num.RadialSolution:
    meta = {}
    rows = []
    header = None
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    k, _, v = line[1:].strip().partition("=")
                    meta[k.strip()] = v.strip()
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(x) for x in line.split(",")])
    if header is None or not rows:
        raise ConfigError(f"solution file {path!r} is empty")
    arr = np.asarray(rows)
    cols = {name: arr[:, i] for i, name in enumerate(header)}
    classification = meta.get("classification", _num.UNDETERMINED)
    blow = float(meta["blowup_radius"]) if "blowup_radius" in meta else None
    sol = _num.RadialSolution(
        dimension=int(meta.get("dimension", 1)), r=cols["r"], u=cols["u"],
        du=cols.get("u_prime"), v=cols.get("v"),
        classification=classification, blowup_radius=blow,
    )
    if "b_normalization" in meta:
        sol.metadata["b_normalization"] = meta["b_normalization"]
    return sol


def _cmd_eigen(spec, outdir, opts):
    N = int(spec.get("problem", "N", required=True))
    R = float(spec.get("problem", "R", 1.0))
    mode = spec.get("problem", "mode", "ball")
    eig = _bif.lambda1_ball(N, R, mode=mode)
    csv = spec.get("output", "csv", "eigen.csv")
    eig.to_csv(os.path.join(outdir, csv))
    return {"command": "eigen", "N": N, "R": R, "mode": mode,
            "lambda1": eig.lambda1, "csv": csv}


def _lef_from_spec(spec) -> _bif.LEFProblem:
    f_src = spec.expression("functions", "f", None)
    g_src = spec.expression("functions", "g", None)
    a_src = spec.expression("functions", "a", None)
    K_src = spec.expression("functions", "K", None)
    src_src = spec.expression("functions", "source", None)
    return _bif.LEFProblem(
        N=int(spec.get("problem", "N", required=True)),
        geometry=spec.get("problem", "geometry", "interval"),
        R=float(spec.get("problem", "R", 1.0)),
        lam=float(spec.get("problem", "lambda", 0.0)),
        mu=float(spec.get("problem", "mu", 0.0)),
        f=_ka.analyze_nonlinearity(f_src) if f_src else None,
        g=_ka.analyze_singular_term(g_src) if g_src else None,
        a_pot=ScalarFn.from_source(a_src) if a_src else None,
        K_pot=ScalarFn.from_source(K_src) if K_src else None,
        source=ScalarFn.from_source(src_src) if src_src else None,
        grad_p=float(spec.get("problem", "grad_p", 0.0)),
        mode=spec.get("problem", "mode", "absorption"),
    )


def _cmd_lef(spec, outdir, opts):
    prob = _lef_from_spec(spec)
    sol = _bif.solve_lef(prob)
    out = {"command": "lef", "classification": sol.classification}
    if sol.classification == _num.NO_SOLUTION:
        csv = spec.get("output", "csv", "lef_probes.csv")
        _write_csv(outdir, csv, "s,zero_location",
                   [(s, z) for s, z in sol.metadata["probe_table"]])
        out["sup_zero_location"] = sol.metadata["sup_zero_location"]
        out["csv"] = csv
        return out
    csv = spec.get("output", "csv", "lef.csv")
    sol.to_csv(os.path.join(outdir, csv))
    out.update({"sup_norm": sol.metadata["sup_norm"],
                "center_value": sol.metadata["center_value"],
                "c1": sol.metadata["c1"], "c2": sol.metadata["c2"], "csv": csv})
    return out


def _cmd_sweep(spec, outdir, opts):
    prob = _lef_from_spec(spec)
    grid = spec.get("problem", "lambda_grid", required=True)
    if isinstance(grid, (int, float)):
        grid = [float(grid)]
    diagram = _sweep_parallel(prob, grid, opts.jobs)
    csv = spec.get("output", "csv", "sweep.csv")
    diagram.to_csv(os.path.join(outdir, csv))
    out = {"command": "sweep", "points": len(grid),
           "solved": sum(1 for s in diagram.status if s == "solved"),
           "monotone_centers": diagram.monotone_centers, "csv": csv}
    if diagram.lam_star_bracket:
        out["lambda_star_bracket"] = list(diagram.lam_star_bracket)
    if diagram.lam_star_theoretical is not None:
        out["lambda_star_theoretical"] = diagram.lam_star_theoretical
    return out


def _sweep_parallel(prob, grid, jobs: int) -> _bif.BifurcationDiagram:
    if jobs <= 1 or len(grid) <= 1:
        return _bif.sweep(prob, grid)
    import dataclasses
    from concurrent.futures import ThreadPoolExecutor

    def solve_one(lam):
        try:
            sol = _bif.solve_lef(dataclasses.replace(prob, lam=lam))
        except Exception:
            return ("failed", None, None)
        if sol.classification == _num.NO_SOLUTION:
            return ("no-solution", None, None)
        return ("solved", sol.metadata["sup_norm"], sol.metadata["center_value"])

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(solve_one, grid))
    status = [r[0] for r in results]
    sups = [r[1] for r in results]
    centers = [r[2] for r in results]
    bracket = None
    for i, st in enumerate(status):
        if st == "no-solution" and i > 0 and status[i - 1] == "solved":
            bracket = (grid[i - 1], grid[i])
            break
    lam_star_th = None
    if prob.f is not None:
        lam1 = _bif.lambda1_ball(prob.N, prob.R,
                                 mode=prob.geometry if prob.N == 1 else "ball").lambda1
        lam_star_th = prob.lam_star(lam1)
    solved_centers = [c for c in centers if c is not None]
    monotone = all(b > a for a, b in zip(solved_centers, solved_centers[1:]))
    return _bif.BifurcationDiagram(lam=list(grid), status=status, sup_norm=sups,
                                   center_value=centers,
                                   lam_star_theoretical=lam_star_th,
                                   lam_star_bracket=bracket,
                                   monotone_centers=monotone)


def _cmd_gelfand(spec, outdir, opts):
    lam = float(spec.get("problem", "lambda", required=True))
    mu = float(spec.get("problem", "mu", required=True))
    g_src = spec.expression("functions", "g", required=True)
    N = int(spec.get("problem", "N", 1))
    geometry = spec.get("problem", "geometry", "interval")
    g_nl = _ka.analyze_singular_term(g_src)
    a_lim = g_nl.value_at_inf if g_nl.value_at_inf is not None else 0.0
    lam1 = _bif.lambda1_ball(N, 1.0, mode=geometry if N == 1 else "ball").lambda1
    solvable = _bif.gelfand_solvable(lam, mu, a_lim, lam1)
    out = {"command": "gelfand", "lambda": lam, "mu": mu, "a": a_lim,
           "lambda1": lam1, "solvable": solvable}
    if spec.get("problem", "solve", False) and lam > 0.0:
        phi = _ka.analyze_nonlinearity(_bif.gelfand_reduced_source(g_src, lam, mu))
        reduced = _bif.LEFProblem(N=N, geometry=geometry, lam=1.0, f=phi,
                                  a_pot=ScalarFn.from_source("0"), mode="absorption")
        sol = _bif.solve_lef(reduced)
        out["solved"] = sol.classification != _num.NO_SOLUTION
        out["agrees"] = out["solved"] == solvable
        if out["solved"]:
            back = _bif.gelfand_transform(sol, lam, "back")
            csv = spec.get("output", "csv", "gelfand.csv")
            back.to_csv(os.path.join(outdir, csv))
            out["csv"] = csv
    return out


def _cmd_young(spec, outdir, opts):
    a_lim = float(spec.get("problem", "a", 0.0))
    p = float(spec.get("problem", "p", required=True))
    lam1 = spec.get("problem", "lambda1", None)
    if lam1 is None:
        N = int(spec.get("problem", "N", 1))
        geometry = spec.get("problem", "geometry", "interval")
        lam1 = _bif.lambda1_ball(N, 1.0, mode=geometry if N == 1 else "ball").lambda1
    C = _bif.young_constant(a_lim, p, float(lam1))
    return {"command": "young", "a": a_lim, "p": p, "lambda1": float(lam1), "C": C}


_HANDLERS = {
    "check-ko": _cmd_check_ko,
    "classify": _cmd_classify,
    "analyze-f": _cmd_analyze_f,
    "ell": _cmd_ell,
    "make-k": _cmd_make_k,
    "profile": _cmd_profile,
    "xi0": _cmd_xi0,
    "chi": _cmd_chi,
    "solve-entire": _cmd_solve_entire,
    "solve-system": _cmd_solve_system,
    "blowup": _cmd_blowup,
    "rate": _cmd_rate,
    "eigen": _cmd_eigen,
    "lef": _cmd_lef,
    "sweep": _cmd_sweep,
    "gelfand": _cmd_gelfand,
    "young": _cmd_young,
}


def run(spec: ProblemSpec, outdir: str, opts) -> dict:
    """Dispatch the command; returns the summary dict (also printed)."""
    spec.validate_keys()
    os.makedirs(outdir, exist_ok=True)
    handler = _HANDLERS[spec.command]
    summary = handler(spec, outdir, opts)
    json_name = spec.get("output", "json", f"{spec.command.replace('-', '_')}_summary.json")
    _emit(summary, outdir, spec.command, json_name)
    if getattr(opts, "verbose", False):
        print(f"artifacts in {os.path.abspath(outdir)}", file=sys.stderr)
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sel-lab",
        description="Numerical laboratory for singular and blow-up radial elliptic problems",
    )
    parser.add_argument("--config", required=True, help="problem configuration file")
    parser.add_argument("--out", default=".", help="output directory for artifacts")
    parser.add_argument("--jobs", type=int,
                        default=int(os.environ.get("SEL_LAB_JOBS", "1")),
                        help="parallel workers for sweep workloads")
    parser.add_argument("--seed", type=int, default=0,
                        help="reserved; core paths are deterministic")
    parser.add_argument("--verbose", action="store_true")
    opts = parser.parse_args(argv)

    try:
        spec = parse_config(opts.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        run(spec, opts.out, opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ParseError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (_num.NumericsError, ValueError, ArithmeticError) as exc:
        diag = {"command": spec.command, "error": str(exc),
                "error_type": type(exc).__name__}
        os.makedirs(opts.out, exist_ok=True)
        atomic_write_text(os.path.join(opts.out, "failure.json"),
                          json.dumps(diag, indent=2) + "\n")
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
