"""Eigenvalue-difference verdicts against the explicit bounds.

Each check computes discrete spectra on a shared grid, evaluates the
relevant bound from :mod:`dirstab.constants`, and attaches a two-grid
discretization slack.  Rows are classified as verified, vacuous, violated,
or condition_failed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import constants as C
from .errors import (ArgumentError, GeometryError, PreconditionError,
                     UnsupportedDimensionError)
from .grid import (GridDomain, component_count, distance_transform, is_convex,
                   inradius, morph, rasterize, rolling_ball_check,
                   set_difference_closed)
from .shapes import ShapeSpec
from .spectral import (CutoffProfile, assemble_laplacian, cutoff_energy_check,
                       dirichlet_energy, eigensolve, inner_product)

VERDICTS = ("verified", "vacuous", "violated", "condition_failed")
NUMERIC_SLACK = 1e-9


def classify(measured: float, bound: float, slack: float, condition_ok: bool,
             vacuous: bool) -> str:
    if not condition_ok:
        return "condition_failed"
    if vacuous:
        return "vacuous"
    return "verified" if measured <= bound + slack else "violated"


@dataclass
class BoundRow:
    scenario: str
    check: str
    k: int
    eps: float
    alpha: float
    lam_inner: float
    lam_outer: float
    lam_mid: float
    mu: float
    condition_ok: bool
    measured_diff: float
    bound: float
    slack: float
    verdict: str
    extra: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.bound - self.measured_diff

    def near_violation(self) -> bool:
        if self.verdict not in ("verified", "violated"):
            return False
        return self.margin < 2.0 * self.slack

    def flat(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        d.update(self.extra)
        return d


@dataclass
class BoundReport:
    scenario: str
    check: str
    rows: list
    h: float
    dims: tuple
    flags: list = field(default_factory=list)
    calibrated: dict = field(default_factory=dict)

    def verdict_counts(self) -> dict:
        counts = {v: 0 for v in VERDICTS}
        for r in self.rows:
            counts[r.verdict] = counts.get(r.verdict, 0) + 1
        return counts

    @property
    def any_violated(self) -> bool:
        return any(r.verdict == "violated" for r in self.rows)

    def near_violations(self) -> list:
        return [r for r in self.rows if r.near_violation()]

    def summary(self) -> dict:
        return {"scenario": self.scenario, "check": self.check,
                "verdicts": self.verdict_counts(), "calibrated": self.calibrated,
                "grid": {"h": self.h, "dims": list(self.dims)}, "flags": list(self.flags)}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def rows_to_csv(rows: Sequence, path, extra_columns: dict | None = None) -> None:
    """Write flat rows (BoundRow or dict) with a stable column order."""
    flat = [r.flat() if hasattr(r, "flat") else dict(r) for r in rows]
    if extra_columns:
        flat = [{**extra_columns, **r} for r in flat]
    cols: list = []
    for r in flat:
        for c in r:
            if c not in cols:
                cols.append(c)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, restval="")
        w.writeheader()
        for r in flat:
            w.writerow({c: _fmt(v) for c, v in r.items()})


def write_report(report: BoundReport, prefix, fmt: str = "csv") -> list:
    """Write ``<prefix>.csv`` and/or ``<prefix>.json``; returns written paths."""
    out = []
    if fmt in ("csv", "both"):
        rows_to_csv(report.rows, f"{prefix}.csv")
        out.append(f"{prefix}.csv")
    if fmt in ("json", "both", "csv"):
        summary = report.summary()
        if fmt == "json":
            summary["rows"] = [r.flat() for r in report.rows]
        with open(f"{prefix}.json", "w") as fh:
            json.dump(summary, fh, indent=2, default=_json_default)
        out.append(f"{prefix}.json")
    return out


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


# --- spectra on shared grids ---------------------------------------------------

class SpectrumCache:
    """Memoizes the lowest eigenvalues of masks, keyed by grid and mask bytes."""

    def __init__(self, tol: float = 1e-8, seed: int = 0):
        self.tol = tol
        self.seed = seed
        self._store: dict = {}

    def _key(self, dom: GridDomain):
        return (dom.h, dom.origin, dom.dims, np.packbits(dom.interior).tobytes())

    def result(self, dom: GridDomain, k: int):
        key = self._key(dom)
        hit = self._store.get(key)
        if hit is None or hit.k < min(k, dom.count):
            hit = eigensolve(dom, k, self.tol, seed=self.seed)
            self._store[key] = hit
        return hit

    def values(self, dom: GridDomain, k: int) -> np.ndarray:
        return self.result(dom, k).eigenvalues[:k]

    def mu(self, dom: GridDomain) -> float:
        if dom.is_empty:
            return math.inf
        return float(self.values(dom, 1)[0])


def _check_nested(inner: GridDomain, outer: GridDomain):
    inner.require_same_grid(outer)
    if not inner.subset_of(outer):
        raise GeometryError("inner domain is not contained in the outer domain")


def mid_domain(inner: GridDomain, outer: GridDomain, eps: float) -> GridDomain:
    """Omega^eps intersected with Omega' on the shared grid.

    Only distances at nodes of Omega' matter, so a dilation reaching past
    the grid box is harmless here.
    """
    inner.require_same_grid(outer)
    if eps == 0:
        return inner.intersect(outer)
    near = distance_transform(inner, "to_set").d < eps
    return outer.with_mask(near & outer.interior)


def triangle_terms(inner: GridDomain, outer: GridDomain, eps: float, k: int,
                   cache: SpectrumCache | None = None) -> tuple[float, float]:
    """(lam_k(mid) - lam_k(outer), lam_k(inner) - lam_k(mid)) with mid = inner^eps & outer."""
    _check_nested(inner, outer)
    cache = cache or SpectrumCache()
    mid = mid_domain(inner, outer, eps)
    lo = cache.values(outer, k)[k - 1]
    lm = cache.values(mid, k)[k - 1]
    li = cache.values(inner, k)[k - 1]
    return float(lm - lo), float(li - lm)


def _refined_pair(inner, outer):
    try:
        return inner.refined(), outer.refined()
    except GeometryError:
        return None


def _err(coarse, fine):
    return abs(coarse - fine) / 3.0


# --- global estimate -----------------------------------------------------------

def verify_global(inner: GridDomain, outer: GridDomain, k_max: int, alpha: float, *,
                  slack_mode: str = "two-grid", scenario: str = "",
                  cache: SpectrumCache | None = None) -> BoundReport:
    """Compare lam_k(inner^eps & outer) - lam_k(outer) with the global bound, k <= k_max."""
    _check_nested(inner, outer)
    if not 0 < alpha < 0.25:
        raise ArgumentError(f"alpha must lie in (0, 1/4), got {alpha}")
    cache = cache or SpectrumCache()
    flags = []
    lam_out = cache.values(outer, k_max)
    lam_in = cache.values(inner, k_max)
    shell = set_difference_closed(outer, inner)
    mu = cache.mu(shell)
    if not shell.is_empty and component_count(shell) > 1:
        flags.append("shell_disconnected")
    fine = _refined_pair(inner, outer) if slack_mode == "two-grid" else None
    if slack_mode == "two-grid" and fine is None:
        flags.append("slack_unavailable")
    fcache = SpectrumCache(cache.tol, cache.seed)
    rows = []
    for k in range(1, min(k_max, len(lam_out)) + 1):
        lam = float(lam_out[k - 1])
        led = C.rho_epsilon_condition(lam, mu, alpha, k)
        extra = {"rho": led.rho, "a_k": led.a_k, "b_k": led.b_k, "eps_proof": led.eps_proof,
                 "Lambda_lemma": led.Lambda_lemma, "condition_value": led.condition_value,
                 "ratio": led.ratio}
        if math.isinf(mu):
            rows.append(BoundRow(scenario, "global", k, 0.0, alpha, float(lam_in[k - 1]), lam,
                                 float(lam_in[k - 1]), mu, True, 0.0, 0.0, 0.0, "vacuous", extra))
            continue
        mid = mid_domain(inner, outer, led.eps)
        vac = mid.equals(outer)
        lam_mid = float(cache.values(mid, k)[k - 1])
        measured = lam_mid - lam
        slack = 0.0
        if fine is not None and not vac:
            fi, fo = fine
            fmid = mid_domain(fi, fo, led.eps)
            slack = (_err(lam_mid, fcache.values(fmid, k)[k - 1])
                     + _err(lam, fcache.values(fo, k)[k - 1]))
        verdict = classify(measured, led.bound, slack, led.condition_ok, vac)
        rows.append(BoundRow(scenario, "global", k, led.eps, alpha, float(lam_in[k - 1]), lam,
                             lam_mid, mu, led.condition_ok, measured, led.bound, slack,
                             verdict, extra))
    return BoundReport(scenario, "global", rows, inner.h, inner.dims, flags)


def _distance_cutoff(d, e0, h):
    # clamp((2 e0 - d)/e0, 0, 1): 1 on inner^e0, 0 off inner^(2 e0), and no
    # dilation has to fit in the grid box
    eta = np.clip((2.0 * e0 - d) / e0, 0.0, 1.0)
    return CutoffProfile(eta, h, e0, d < e0, d < 2.0 * e0)


def cutoff_lemma_rows(inner: GridDomain, outer: GridDomain, k_max: int, alpha: float, *,
                      scenario: str = "", cache: SpectrumCache | None = None) -> list[dict]:
    """Cutoff-energy and almost-orthogonality checks on the outer eigenvectors.

    With eps0 the proof's cutoff width, the cutoff is 1 on inner^eps0 and 0
    off inner^(2 eps0); psi_i = eta f'_i for i <= k.
    """
    _check_nested(inner, outer)
    cache = cache or SpectrumCache()
    res_out = cache.result(outer, k_max)
    mu = cache.mu(set_difference_closed(outer, inner))
    d_in = distance_transform(inner, "to_set").d
    rows = []
    for k in range(1, min(k_max, res_out.k) + 1):
        lam = float(res_out.eigenvalues[k - 1])
        led = C.rho_epsilon_condition(lam, mu, alpha, k)
        if math.isinf(mu):
            rows.append({"scenario": scenario, "k": k, "kind": "energy", "i": 0, "j": 0,
                         "lhs": 0.0, "rhs": math.inf, "verdict": "vacuous"})
            continue
        e0 = led.eps_proof
        eta = _distance_cutoff(d_in, e0, inner.h)
        Lam = led.Lambda_lemma
        psi = []
        for j in range(k):
            f = res_out.field(j)
            lhs, rhs, ok = cutoff_energy_check(f, eta, lam, mu, e0,
                                               slack=NUMERIC_SLACK * max(lam, 1.0))
            rows.append({"scenario": scenario, "k": k, "kind": "energy", "i": j + 1, "j": j + 1,
                         "lhs": lhs, "rhs": rhs, "verdict": "verified" if ok else "violated"})
            psi.append(eta.values * f)
        bound = 8.0 * e0 * e0 * Lam
        for i in range(k):
            for j in range(i, k):
                dev = abs(inner_product(psi[i], psi[j], outer.h) - (1.0 if i == j else 0.0))
                ok = dev <= bound + NUMERIC_SLACK
                rows.append({"scenario": scenario, "k": k, "kind": "orthogonality",
                             "i": i + 1, "j": j + 1, "lhs": dev, "rhs": bound,
                             "verdict": "verified" if ok else "violated"})
    return rows


# --- convex local estimate -----------------------------------------------------

def verify_convex(dom: GridDomain, eps_list: Sequence[float], k_max: int, *,
                  c_values: Sequence[float] | None = None, slack_mode: str = "two-grid",
                  scenario: str = "", cache: SpectrumCache | None = None) -> BoundReport:
    """lam_k(dom) - lam_k(dom^eps) against c(n,k)/r0^2 (2 eps/r0 + eps^2/r0^2).

    For a disk source the ball identity is reported alongside.
    """
    if not is_convex(dom):
        raise PreconditionError("convex local estimate needs a convex domain")
    cache = cache or SpectrumCache()
    r0 = inradius(dom)
    n = dom.ndim
    if c_values is None:
        if n != 2:
            raise ArgumentError("c(n, k) must be supplied outside the plane")
        c_values = [C.unit_ball_eigenvalue(2, k) for k in range(1, k_max + 1)]
    lam = cache.values(dom, k_max)
    flags = []
    fine = None
    fcache = SpectrumCache(cache.tol, cache.seed)
    if slack_mode == "two-grid":
        try:
            fine = dom.refined()
        except GeometryError:
            flags.append("slack_unavailable")
    disk = dom.source is not None and dom.source.kind == "disk" and n == 2
    rows = []
    for eps in eps_list:
        dil = morph(dom, eps, "dilate")
        lam_d = cache.values(dil, k_max)
        ball = None
        if disk and eps > 0:
            r = dom.source.params["radius"]
            try:
                big = rasterize(ShapeSpec("disk", {"center": dom.source.params["center"],
                                                   "radius": r + eps}), dom.h, dom.box)
                ball = cache.values(big, k_max)
            except GeometryError:
                flags.append(f"identity_unavailable_eps_{eps!r}")
        fdil = morph(fine, eps, "dilate") if fine is not None else None
        for k in range(1, min(k_max, len(lam), len(lam_d)) + 1):
            measured = float(lam[k - 1] - lam_d[k - 1])
            bound = C.closed_form_bounds("convex", n=n, k=k, r0=r0, eps=eps, c=c_values[k - 1])
            slack = 0.0
            if fine is not None and eps > 0:
                slack = (_err(lam[k - 1], fcache.values(fine, k)[k - 1])
                         + _err(lam_d[k - 1], fcache.values(fdil, k)[k - 1]))
            extra = {"r0": r0, "c_nk": float(c_values[k - 1])}
            if ball is not None:
                r = dom.source.params["radius"]
                ident = C.closed_form_bounds("ball_identity", n=2, k=k, r=r, eps=eps,
                                             c=c_values[k - 1])
                meas_id = float(lam[k - 1] - ball[k - 1])
                extra.update({"identity_closed_form": ident, "identity_measured": meas_id,
                              "identity_rel_err": abs(meas_id - ident) / ident})
            rows.append(BoundRow(scenario, "convex", k, float(eps), math.nan, float(lam[k - 1]),
                                 float(lam_d[k - 1]), float(lam_d[k - 1]), math.nan, True,
                                 measured, bound, slack,
                                 classify(measured, bound, slack, True, False), extra))
    return BoundReport(scenario, "convex", rows, dom.h, dom.dims, flags)


# --- combined global + local estimate --------------------------------------------

def _per_k(v, k_max, name):
    if v is None:
        return None
    if np.ndim(v) == 0:
        return [float(v)] * k_max
    v = [float(x) for x in v]
    if len(v) < k_max:
        raise ArgumentError(f"{name} needs {k_max} entries, got {len(v)}")
    return v


def calibrate_local_constants(inner: GridDomain, k_max: int, gamma: float,
                              eps_samples: Sequence[float],
                              cache: SpectrumCache | None = None) -> tuple[list, list]:
    """Smallest C_k with lam_k(inner) - lam_k(inner^eps) <= C_k eps^gamma on the samples."""
    cache = cache or SpectrumCache()
    lam = cache.values(inner, k_max)
    Cs = [0.0] * k_max
    rows = []
    for eps in eps_samples:
        if not eps > 0:
            continue
        lam_d = cache.values(morph(inner, eps, "dilate"), k_max)
        for k in range(1, k_max + 1):
            local = float(lam[k - 1] - lam_d[k - 1])
            Cs[k - 1] = max(Cs[k - 1], local / eps ** gamma)
            rows.append({"k": k, "eps": float(eps), "local_term": local})
    return Cs, rows


def verify_corollary(inner: GridDomain, outer: GridDomain, k_max: int, alpha: float,
                     gamma: float, C_k=None, eps0: float = 0.1, eps_k=None, *,
                     rolling_samples: int = 4, calibration_eps: Sequence[float] | None = None,
                     slack_mode: str = "two-grid", scenario: str = "",
                     cache: SpectrumCache | None = None) -> BoundReport:
    """Measured |lam_k(inner) - lam_k(outer)| against the combined bounds.

    Two rows per k: the bound at the given alpha (check ``corollary``) and
    the explicit form at alpha = 1/(2(2+gamma)) (check ``corollary_explicit``).
    ``C_k=None`` switches on calibration; ``eps_k=None`` means no Davies
    threshold is imposed.
    """
    _check_nested(inner, outer)
    if not eps0 > 0 or not gamma > 0:
        raise ArgumentError("need eps0 > 0 and gamma > 0")
    for j in range(1, rolling_samples + 1):
        e = eps0 * j / rolling_samples
        if not rolling_ball_check(inner, e):
            raise PreconditionError(f"rolling ball test fails at eps={e!r}")
    cache = cache or SpectrumCache()
    lam_in = cache.values(inner, k_max)
    lam_out = cache.values(outer, k_max)
    shell = set_difference_closed(outer, inner)
    mu = cache.mu(shell)
    flags = []
    if not shell.is_empty and component_count(shell) > 1:
        flags.append("shell_disconnected")
    eps_k = _per_k(eps_k, k_max, "eps_k") or [math.inf] * k_max
    calibrated = {}
    if C_k is None:
        if calibration_eps is None:
            top = min(eps0 / 2, min(eps_k))
            calibration_eps = [top / 2 ** j for j in range(4)]
        Cs, _ = calibrate_local_constants(inner, k_max, gamma, calibration_eps, cache)
        calibrated = {f"C_{k}": Cs[k - 1] for k in range(1, k_max + 1)}
        calibrated["calibration_eps"] = [float(e) for e in calibration_eps]
    else:
        Cs = _per_k(C_k, k_max, "C_k")
    slacks = [0.0] * k_max
    fine = _refined_pair(inner, outer) if slack_mode == "two-grid" else None
    if fine is not None:
        fc = SpectrumCache(cache.tol, cache.seed)
        fi, fo = fc.values(fine[0], k_max), fc.values(fine[1], k_max)
        slacks = [_err(lam_in[k], fi[k]) + _err(lam_out[k], fo[k]) for k in range(k_max)]
    elif slack_mode == "two-grid":
        flags.append("slack_unavailable")
    rows = []
    for k in range(1, k_max + 1):
        lam = float(lam_out[k - 1])
        measured = abs(float(lam_in[k - 1] - lam_out[k - 1]))
        b = C.corollary_bounds(lam, mu, k, alpha, gamma, Cs[k - 1])
        limit = min(eps0 / 2, eps_k[k - 1])
        for check, led, bound in (("corollary", b["ledger"], b["general"]),
                                  ("corollary_explicit", b["ledger_special"], b["explicit"])):
            side = 0.0 if math.isinf(mu) else (lam / mu) ** led.alpha / math.sqrt(lam)
            ok = led.condition_ok and side <= limit
            extra = {"gamma": gamma, "C_k": Cs[k - 1], "side_value": side, "side_limit": limit,
                     "b_k": led.b_k, "general_at_special": b["general_at_special"]}
            verdict = classify(measured, bound, slacks[k - 1], ok, math.isinf(mu))
            rows.append(BoundRow(scenario, check, k, side, led.alpha, float(lam_in[k - 1]), lam,
                                 math.nan, mu, ok, measured, bound, slacks[k - 1], verdict, extra))
    return BoundReport(scenario, "corollary", rows, inner.h, inner.dims, flags, calibrated)


# --- capacity ------------------------------------------------------------------------

def _bbox_idx(mask):
    idx = np.argwhere(mask)
    return idx.min(axis=0), idx.max(axis=0)


def capacity(gamma_set: GridDomain, box: GridDomain, *, check_padding: bool = True) -> float:
    """Discrete capacity: min of h^n sum(|grad v|^2 + v^2) with v = 1 on the set.

    v vanishes off ``box``.  The box must extend at least twice the set's
    diameter beyond its bounding box on every side.
    """
    gamma_set.require_same_grid(box)
    if gamma_set.is_empty:
        return 0.0
    G, B = gamma_set.interior, box.interior
    if np.any(G & ~B):
        raise GeometryError("capacity set is not contained in the box")
    h = box.h
    if check_padding:
        glo, ghi = _bbox_idx(G)
        blo, bhi = _bbox_idx(B)
        diam = h * float(np.max(ghi - glo) + 1)
        if np.any((glo - blo) * h < 2 * diam) or np.any((bhi - ghi) * h < 2 * diam):
            raise GeometryError("capacity box padding below twice the set diameter",
                                needed_margin=2 * diam)
    U = B & ~G
    v = G.astype(float)
    if U.any():
        Ud = box.with_mask(U)
        A = assemble_laplacian(Ud) + sp.identity(int(U.sum()), format="csr")
        nbr = np.zeros(G.shape)
        for ax in range(G.ndim):
            nbr += np.roll(G, 1, axis=ax) + np.roll(G, -1, axis=ax)
        rhs = nbr[U] / h ** 2
        if A.shape[0] <= 5_000:
            sol = spla.spsolve(A.tocsc(), rhs)
        else:
            import pyamg

            ml = pyamg.smoothed_aggregation_solver(A, max_coarse=500)
            sol = ml.solve(rhs, tol=1e-11, maxiter=500, accel="cg")
        v[U] = sol
    return dirichlet_energy(v, h) + h ** G.ndim * float(np.sum(v * v))


def capacity_box_sensitivity(gamma_set: GridDomain, box: GridDomain) -> tuple[float, float, float]:
    """(cap, cap with the box doubled about its centre, relative change)."""
    cap = capacity(gamma_set, box)
    lo, hi = _bbox_idx(box.interior)
    ext = hi - lo + 1
    pad = [(int(math.ceil(e / 2)), int(math.ceil(e / 2))) for e in ext]
    G2 = np.pad(gamma_set.interior, pad)
    B2 = np.zeros(G2.shape, bool)
    sl = tuple(slice(l, l + 2 * e) for l, e in zip(lo, ext))
    B2[sl] = True
    B2 &= ~_ring_mask(B2.shape)
    origin = tuple(o - p[0] * box.h for o, p in zip(box.origin, pad))
    cap2 = capacity(GridDomain(box.h, origin, G2), GridDomain(box.h, origin, B2))
    return cap, cap2, abs(cap - cap2) / cap if cap else 0.0


def _ring_mask(shape):
    inner = np.zeros(shape, bool)
    inner[tuple(slice(1, -1) for _ in shape)] = True
    return ~inner


def boundary_samples(dom: GridDomain, count: int, seed: int = 0) -> np.ndarray:
    """Exterior nodes face-adjacent to the domain, sampled with a fixed seed."""
    m = dom.interior
    touch = np.zeros(m.shape, bool)
    for ax in range(m.ndim):
        touch |= np.roll(m, 1, axis=ax) | np.roll(m, -1, axis=ax)
    cand = np.argwhere(touch & ~m)
    if len(cand) == 0:
        raise GeometryError("domain has no boundary nodes")
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(cand), size=min(count, len(cand)), replace=False)
    return cand[np.sort(pick)]


def local_capacity(dom: GridDomain, z_idx, r: float) -> float:
    """cap(B(z, r) minus dom) on a local window padded per :func:`capacity`."""
    h = dom.h
    rc = int(math.ceil(r / h))
    m = rc + 2 * (2 * rc + 1) + 2
    n = dom.ndim
    size = 2 * m + 1
    local = np.zeros((size,) * n, bool)
    src, dst = [], []
    for z, N in zip(z_idx, dom.dims):
        a, b = z - m, z + m + 1
        sa, sb = max(a, 0), min(b, N)
        src.append(slice(sa, sb))
        dst.append(slice(sa - a, sb - a))
    local[tuple(dst)] = dom.interior[tuple(src)]
    offs = np.meshgrid(*[np.arange(-m, m + 1)] * n, indexing="ij", sparse=True)
    dist2 = sum(o * o for o in offs) * h * h
    ball = np.broadcast_to(dist2 <= r * r + 1e-12 * h * h, local.shape)
    box = ~_ring_mask(local.shape)
    G = ball & ~local & box
    origin = tuple((zi - m) * h + o for zi, o in zip(z_idx, dom.origin))
    return capacity(GridDomain(h, origin, G), GridDomain(h, origin, box))


@dataclass
class CapacityDensityResult:
    alpha_cap: float
    rows: list
    passed: list

    @property
    def all_passed(self) -> bool:
        return all(self.passed)


def capacity_density_check(dom: GridDomain, alpha_cap: float, radii: Sequence[float], *,
                           samples: int = 4, seed: int = 0, points=None) -> CapacityDensityResult:
    """cap(B(z,r) minus dom) >= alpha_cap r^(n-2) for sampled boundary nodes z.

    ``points`` overrides sampling with explicit node indices.
    """
    if dom.ndim != 3:
        raise UnsupportedDimensionError("capacity density check is implemented for n = 3 only")
    if alpha_cap < 0:
        raise ArgumentError("alpha_cap must be >= 0")
    pts = np.asarray(points, int) if points is not None else boundary_samples(dom, samples, seed)
    rows, passed = [], []
    for z in pts:
        ok_all = True
        for r in radii:
            cap = local_capacity(dom, tuple(int(i) for i in z), r)
            thr = alpha_cap * r ** (dom.ndim - 2)
            ok = cap >= thr
            ok_all &= ok
            rows.append({"z": tuple(int(i) for i in z), "r": float(r), "capacity": cap,
                         "threshold": thr, "ratio": cap / r ** (dom.ndim - 2), "pass": ok})
        passed.append(bool(ok_all))
    return CapacityDensityResult(alpha_cap, rows, passed)
