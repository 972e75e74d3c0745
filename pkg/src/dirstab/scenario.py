"""Scenario configuration, batch execution and parameter sweeps.

A scenario is an INI document with sections ``[scenario]``, ``[inner]``,
``[outer]`` and optionally ``[regularity]`` and ``[sweep]``.  Numbers may be
written as fractions (``1/256``); comma-separated values become tuples and
``;`` separates polygon vertices.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import constants as C
from . import stability as S
from .eigenspace import cluster_bases, proximity_report
from .errors import ConfigError, DirstabError, GeometryError, SolverError
from .grid import (closure_mask, complement_component_count, component_count,
                   inradius, is_convex, morph, rasterize, rolling_ball_check,
                   set_difference_closed, write_pgm)
from .shapes import ShapeSpec

CHECKS = ("spectra", "global", "lemmas", "convex", "corollary", "proximity", "geometry")
SWEEP_PARAMS = ("shell_width", "tentacle_width", "eps", "alpha", "h")
MIN_CELLS_PER_FEATURE = 6


@dataclass
class Scenario:
    name: str
    inner: ShapeSpec
    outer: ShapeSpec
    h: float
    k_max: int = 3
    alphas: tuple = (0.05,)
    tol_mult: float = 1e-4
    checks: tuple = ("spectra", "global")
    eps_list: tuple = (0.05, 0.1, 0.2)
    margin: float | None = None
    seed: int = 0
    tol: float = 1e-8
    samples: int = 10
    slack_mode: str = "two-grid"
    gamma: float | None = None
    C_k: tuple | None = None
    eps0: float | None = None
    eps_k: tuple | None = None
    davies_c: float | None = None
    sweep_param: str | None = None
    sweep_values: tuple = ()

    def settings(self) -> dict:
        d = dataclasses.asdict(self)
        d["inner"] = {"kind": self.inner.kind, **self.inner.params}
        d["outer"] = {"kind": self.outer.kind, **self.outer.params}
        return d


# --- parsing ---------------------------------------------------------------------

def _number(text: str):
    t = text.strip()
    if t.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        if "/" in t:
            return float(Fraction(t))
        v = float(t)
        return int(v) if t.lstrip("+-").isdigit() else v
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


def _value(text: str):
    t = text.strip()
    if ";" in t:
        return tuple(tuple(float(_number(x)) for x in part.split(",")) for part in t.split(";")
                     if part.strip())
    if "," in t:
        return tuple(_number(x) for x in t.split(",") if x.strip())
    return _number(t)


def _shape(section) -> ShapeSpec:
    if "kind" not in section:
        raise ConfigError(f"section [{section.name}] needs a 'kind'")
    params = {}
    for key, raw in section.items():
        if key == "kind":
            continue
        v = _value(raw)
        params[key] = v
    if section["kind"] == "polygon" and "vertices" in params:
        params["vertices"] = tuple(params["vertices"])
    try:
        return ShapeSpec(section["kind"].strip(), params)
    except DirstabError as exc:
        raise ConfigError(f"[{section.name}]: {exc}") from exc


def _tuple(v):
    return v if isinstance(v, tuple) else (v,)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    for sec in ("scenario", "inner", "outer"):
        if sec not in cp:
            raise ConfigError(f"{source}: missing section [{sec}]")
    s = cp["scenario"]
    known = {"name", "h", "k_max", "alpha", "tol_mult", "checks", "eps", "margin", "seed",
             "tol", "samples", "slack"}
    unknown = set(s) - known
    if unknown:
        raise ConfigError(f"{source}: unknown keys in [scenario]: {sorted(unknown)}")
    if "name" not in s or "h" not in s:
        raise ConfigError(f"{source}: [scenario] needs 'name' and 'h'")
    checks = tuple(c.strip() for c in s.get("checks", "spectra, global").split(",") if c.strip())
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"{source}: unknown checks {bad}; expected a subset of {CHECKS}")
    kw = dict(name=s["name"].strip(), inner=_shape(cp["inner"]), outer=_shape(cp["outer"]),
              h=float(_number(s["h"])), checks=checks)
    if "k_max" in s:
        kw["k_max"] = int(_number(s["k_max"]))
    if "alpha" in s:
        kw["alphas"] = tuple(float(a) for a in _tuple(_value(s["alpha"])))
    if "tol_mult" in s:
        kw["tol_mult"] = float(_number(s["tol_mult"]))
    if "eps" in s:
        kw["eps_list"] = tuple(float(e) for e in _tuple(_value(s["eps"])))
    if "margin" in s:
        kw["margin"] = float(_number(s["margin"]))
    for key, cast in (("seed", int), ("samples", int), ("tol", float)):
        if key in s:
            kw[key] = cast(_number(s[key]))
    if "slack" in s:
        kw["slack_mode"] = s["slack"].strip()
    if "regularity" in cp:
        r = cp["regularity"]
        if "gamma" in r:
            kw["gamma"] = float(_number(r["gamma"]))
        if "C_k" in r and r["C_k"].strip() != "calibrate":
            kw["C_k"] = tuple(float(x) for x in _tuple(_value(r["C_k"])))
        if "eps0" in r:
            kw["eps0"] = float(_number(r["eps0"]))
        if "eps_k" in r:
            kw["eps_k"] = tuple(float(x) for x in _tuple(_value(r["eps_k"])))
        if "davies_c" in r:
            kw["davies_c"] = float(_number(r["davies_c"]))
    if "sweep" in cp:
        w = cp["sweep"]
        kw["sweep_param"] = w.get("param", "").strip() or None
        if "values" in w:
            kw["sweep_values"] = tuple(float(x) for x in _tuple(_value(w["values"])))
    sc = Scenario(**kw)
    validate(sc)
    return sc


def validate(sc: Scenario) -> None:
    if not sc.h > 0:
        raise ConfigError("h must be positive")
    if sc.k_max < 1:
        raise ConfigError("k_max must be >= 1")
    if sc.inner.ndim != sc.outer.ndim:
        raise ConfigError("inner and outer shapes have different dimensions")
    for a in sc.alphas:
        if not 0 < a < 0.25:
            raise ConfigError(f"alpha must lie in (0, 1/4), got {a}")
    for shape in (sc.inner, sc.outer):
        cells = shape.feature_size() / sc.h
        if cells < MIN_CELLS_PER_FEATURE - 1e-9:
            raise ConfigError(f"h={sc.h!r} resolves the thinnest feature of {shape.kind} "
                              f"by only {cells:.2f} cells (need {MIN_CELLS_PER_FEATURE})")
    if sc.sweep_param is not None and sc.sweep_param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {sc.sweep_param!r}")


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text, source=str(p))


def bundled_names() -> list[str]:
    root = resources.files("dirstab") / "scenarios"
    return sorted(f.name[:-4] for f in root.iterdir() if f.name.endswith(".ini"))


def bundled_scenario(name: str) -> Scenario:
    root = resources.files("dirstab") / "scenarios"
    f = root / f"{name}.ini"
    if not f.is_file():
        raise ConfigError(f"no bundled scenario {name!r}; available: {bundled_names()}")
    return parse_scenario(f.read_text(), source=f"bundled:{name}")


# --- domains -----------------------------------------------------------------------

def default_margin(sc: Scenario) -> float:
    m = max(sc.eps_list) if sc.eps_list else 0.0
    if sc.eps0 is not None:
        m = max(m, sc.eps0)
    return m + 4 * sc.h + 0.05


def scenario_box(sc: Scenario, margin: float | None = None):
    margin = sc.margin if margin is None else margin
    if margin is None:
        margin = default_margin(sc)
    lo = np.minimum(*(np.asarray(s.bbox()[0]) for s in (sc.inner, sc.outer)))
    hi = np.maximum(*(np.asarray(s.bbox()[1]) for s in (sc.inner, sc.outer)))
    return tuple((lo - margin).tolist()), tuple((hi + margin).tolist())


def build_domains(sc: Scenario, margin: float | None = None, h: float | None = None):
    h = sc.h if h is None else h
    box = scenario_box(sc, margin)
    inner = rasterize(sc.inner, h, box)
    outer = rasterize(sc.outer, h, box)
    if not inner.subset_of(outer):
        raise ConfigError(f"scenario {sc.name}: inner domain is not contained in the outer one")
    return inner, outer


# --- checks -------------------------------------------------------------------------

def _spectra_rows(sc, inner, outer, cache):
    ri = cache.result(inner, sc.k_max)
    ro = cache.result(outer, sc.k_max)
    mu = cache.mu(set_difference_closed(outer, inner))
    fi = fo = None
    if sc.slack_mode == "two-grid":
        try:
            fc = S.SpectrumCache(cache.tol, cache.seed)
            fi = fc.values(inner.refined(), sc.k_max)
            fo = fc.values(outer.refined(), sc.k_max)
        except GeometryError:
            pass
    rows = []
    for k in range(1, min(ri.k, ro.k) + 1):
        li, lo = float(ri.eigenvalues[k - 1]), float(ro.eigenvalues[k - 1])
        rows.append({"scenario": sc.name, "k": k, "lam_inner": li, "lam_outer": lo,
                     "err_inner": "" if fi is None else abs(li - fi[k - 1]) / 3,
                     "err_outer": "" if fo is None else abs(lo - fo[k - 1]) / 3,
                     "mu": mu, "total_diff": li - lo})
    return rows, ri, ro


def _geometry_rows(sc, inner, outer):
    rows = []
    base_cc = complement_component_count(inner)
    convex = is_convex(inner)
    r0 = inradius(inner)
    for eps in (0.0,) + tuple(sc.eps_list):
        dil = morph(inner, eps, "dilate")
        back = morph(dil, eps, "erode")
        # one-cell comparison of the dilation-contraction with the original set
        excess = int(np.sum(back.interior & ~closure_mask(inner)))
        cc = complement_component_count(dil)
        rows.append({"scenario": sc.name, "eps": float(eps),
                     "rolling_ball": rolling_ball_check(inner, eps),
                     "components": component_count(dil), "complement_components": cc,
                     "doubly_connected": cc > base_cc, "convex": convex, "inradius": r0,
                     "dilate_erode_excess_cells": excess})
    return rows


def _refine(sc: Scenario) -> Scenario:
    return dataclasses.replace(sc, h=sc.h / 2)


@dataclass
class RunResult:
    scenario: str
    outdir: str
    status: str
    exit_code: int
    summary: dict = field(default_factory=dict)


def _with_rebox(sc, fn, margin=None, attempts=3):
    """Run fn(inner, outer, margin) re-boxing on dilation overflow."""
    for _ in range(attempts):
        inner, outer = build_domains(sc, margin)
        try:
            return fn(inner, outer), margin
        except GeometryError as exc:
            if exc.needed_margin is None:
                raise
            margin = max(margin or default_margin(sc), exc.needed_margin + 4 * sc.h + 0.05)
    inner, outer = build_domains(sc, margin)
    return fn(inner, outer), margin


def run_checks(sc: Scenario, outdir, *, fmt: str = "csv", refine: bool = True,
               dump_masks: bool = False, checks=None) -> dict:
    """Execute the scenario's checks and write their reports into ``outdir``.

    Returns the summary dictionary (also written as ``summary.json``).
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    checks = tuple(checks or sc.checks)
    cache = S.SpectrumCache(sc.tol, sc.seed)
    summary = {"scenario": sc.name, "settings": sc.settings(), "checks": {}, "violated": False}
    inner, outer = build_domains(sc)
    margin = sc.margin
    summary["grid"] = {"h": sc.h, "dims": list(inner.dims), "origin": list(inner.origin)}
    if dump_masks and inner.ndim == 2:
        write_pgm(inner, out / "inner.pgm")
        write_pgm(outer, out / "outer.pgm")

    def emit(name, report_fn):
        nonlocal margin
        rep, margin = _with_rebox(sc, lambda i, o: report_fn(sc, i, o, cache), margin)
        if refine and rep.near_violations():
            fine_sc = _refine(sc)
            rep2, _ = _with_rebox(fine_sc, lambda i, o: report_fn(
                fine_sc, i, o, S.SpectrumCache(sc.tol, sc.seed)), margin)
            rep2.flags.append(f"refined_from_h={sc.h!r}")
            rep = rep2
        S.write_report(rep, out / name, fmt)
        summary["checks"][name] = rep.summary()
        summary["violated"] |= rep.any_violated

    if "spectra" in checks:
        rows, ri, ro = _spectra_rows(sc, inner, outer, cache)
        S.rows_to_csv(rows, out / "spectra.csv")
        summary["checks"]["spectra"] = {"mu": rows[0]["mu"] if rows else None,
                                        "k": len(rows)}
    if "geometry" in checks:
        rows = _geometry_rows(sc, inner, outer)
        S.rows_to_csv(rows, out / "geometry.csv")
        summary["checks"]["geometry"] = {"rows": len(rows),
                                         "doubly_connected_at": [r["eps"] for r in rows
                                                                 if r["doubly_connected"]],
                                         "rolling_ball_fails_at": [r["eps"] for r in rows
                                                                   if not r["rolling_ball"]]}
    if "global" in checks:
        def glob(s, i, o, c):
            reps = [S.verify_global(i, o, s.k_max, a, slack_mode=s.slack_mode,
                                    scenario=s.name, cache=c) for a in s.alphas]
            rep = reps[0]
            for r in reps[1:]:
                rep.rows.extend(r.rows)
                rep.flags.extend(f for f in r.flags if f not in rep.flags)
            return rep
        emit("global", glob)
    if "lemmas" in checks:
        def lem(i, o):
            rows = []
            for a in sc.alphas:
                for r in S.cutoff_lemma_rows(i, o, sc.k_max, a, scenario=sc.name, cache=cache):
                    rows.append({"alpha": a, **r})
            return rows
        rows, margin = _with_rebox(sc, lem, margin)
        S.rows_to_csv(rows, out / "lemmas.csv")
        bad = sum(r["verdict"] == "violated" for r in rows)
        summary["checks"]["lemmas"] = {"rows": len(rows), "violated": bad}
        summary["violated"] |= bad > 0
    if "convex" in checks:
        emit("convex", lambda s, i, o, c: S.verify_convex(
            i, s.eps_list, s.k_max, slack_mode=s.slack_mode, scenario=s.name, cache=c))
    if "corollary" in checks:
        if sc.gamma is None or sc.eps0 is None:
            raise ConfigError("corollary check needs gamma and eps0 in [regularity]")
        emit("corollary", lambda s, i, o, c: S.verify_corollary(
            i, o, s.k_max, s.alphas[0], s.gamma, s.C_k, s.eps0, s.eps_k,
            slack_mode=s.slack_mode, scenario=s.name, cache=c))
    if "proximity" in checks:
        ri = cache.result(inner, sc.k_max + 1)
        ro = cache.result(outer, sc.k_max + 1)
        gaps = C.gap_data(ri, ro, sc.tol_mult)
        bi, bo = cluster_bases(ri, ro, gaps, outer)
        rep = proximity_report(gaps, bi, bo, samples=sc.samples, seed=sc.seed)
        S.rows_to_csv([{"scenario": sc.name, **r} for r in rep.rows], out / "proximity.csv")
        S.rows_to_csv([{"scenario": sc.name, **r} for r in rep.calculation_rows],
                      out / "proximity_calculation.csv")
        C.write_constants_csv(C.constants_table(min(gaps.complete, 8), gaps), out / "constants.csv")
        summary["checks"]["proximity"] = {
            "verdicts": rep.verdict_counts(), "anomalies": rep.anomalies,
            "clusters": [len(c) for c in gaps.clusters], "negative_delta_flag": gaps.negative_flag}
        summary["violated"] |= rep.any_violated
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=S._json_default)
    return summary


def run_scenario(sc: Scenario, outroot, **kw) -> RunResult:
    """Run one scenario, converting failures into a structured error record."""
    outdir = os.path.join(outroot, sc.name)
    try:
        summary = run_checks(sc, outdir, **kw)
    except SolverError as exc:
        return _failure(sc, outdir, "solver_error", exc, 3)
    except (ConfigError, GeometryError) as exc:
        return _failure(sc, outdir, type(exc).__name__, exc, 2)
    code = 1 if summary["violated"] else 0
    return RunResult(sc.name, outdir, "violated" if code else "ok", code, summary)


def _failure(sc, outdir, kind, exc, code):
    Path(outdir).mkdir(parents=True, exist_ok=True)
    record = {"scenario": sc.name, "error": kind, "message": str(exc)}
    with open(Path(outdir) / "error.json", "w") as fh:
        json.dump(record, fh, indent=2)
    return RunResult(sc.name, outdir, kind, code, record)


# --- sweeps -------------------------------------------------------------------------------

def _vary(sc: Scenario, param: str, value: float) -> Scenario:
    if param == "shell_width":
        if sc.inner.kind != "disk" or sc.outer.kind != "disk":
            raise ConfigError("shell_width sweeps need disk inner and outer shapes")
        p = dict(sc.outer.params)
        p["radius"] = sc.inner.params["radius"] + value
        return dataclasses.replace(sc, outer=ShapeSpec("disk", p), name=f"{sc.name}")
    if param == "tentacle_width":
        if sc.outer.kind != "square_with_tentacle":
            raise ConfigError("tentacle_width sweeps need a square_with_tentacle outer shape")
        p = dict(sc.outer.params)
        p["w"] = value
        return dataclasses.replace(sc, outer=ShapeSpec("square_with_tentacle", p))
    if param == "eps":
        return dataclasses.replace(sc, eps_list=(value,))
    if param == "alpha":
        return dataclasses.replace(sc, alphas=(value,))
    if param == "h":
        return dataclasses.replace(sc, h=value)
    raise ConfigError(f"unknown sweep parameter {param!r}")


def sweep(sc: Scenario, param: str, values, outdir, *, refine: bool = True) -> list[dict]:
    """One run per value; returns and writes a long-form CSV ``sweep_<param>.csv``.

    Each row carries mu, the total difference lam_k(inner) - lam_k(outer),
    the global-term measurement and bound when the global check is enabled,
    and the ratio total_diff * mu^(1/2 - 2 alpha).
    """
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for v in values:
        s = _vary(sc, param, float(v))
        validate(s)
        try:
            inner, outer = build_domains(s)
            cache = S.SpectrumCache(s.tol, s.seed)
            spec_rows, _, _ = _spectra_rows(s, inner, outer, cache)
            glob = {}
            if "global" in s.checks:
                for a in s.alphas:
                    rep = S.verify_global(inner, outer, s.k_max, a, slack_mode=s.slack_mode,
                                          scenario=s.name, cache=cache)
                    for r in rep.rows:
                        glob[(a, r.k)] = r
        except DirstabError as exc:
            rows.append({"param": param, "value": float(v), "error": str(exc)})
            continue
        for sr in spec_rows:
            for a in s.alphas:
                mu = sr["mu"]
                g = glob.get((a, sr["k"]))
                expo = 0.5 - 2 * a
                rows.append({"param": param, "value": float(v), "k": sr["k"], "alpha": a,
                             "mu": mu, "lam_inner": sr["lam_inner"], "lam_outer": sr["lam_outer"],
                             "total_diff": sr["total_diff"],
                             "measured_diff": "" if g is None else g.measured_diff,
                             "bound": "" if g is None else g.bound,
                             "verdict": "" if g is None else g.verdict,
                             "ratio": sr["total_diff"] * mu ** expo if math.isfinite(mu) else 0.0})
    S.rows_to_csv(rows, out / f"sweep_{param}.csv")
    return rows
