"""Proximity of eigenspace clusters of nested domains, and Gram-Schmidt energies.

Eigenvectors of the inner domain are zero-extended to the outer domain so
that both families live in one discrete L2 space with weight h**n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import constants as C
from .errors import (ArgumentError, DegeneracyError, GeometryError,
                     PreconditionError)
from .grid import GridDomain

ORTHO_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ClusterBasis:
    """Orthonormal vectors spanning one eigenvalue cluster.

    ``vectors`` has shape (n_k, m) with m the number of nodes of the common
    (outer) domain.
    """

    index: int
    vectors: np.ndarray
    eigenvalues: np.ndarray
    weight: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


def _restrict(res, ambient: GridDomain) -> np.ndarray:
    dom = res.domain
    if dom is None:
        raise GeometryError("spectral result is not attached to a domain")
    dom.require_same_grid(ambient)
    if not dom.subset_of(ambient):
        raise GeometryError("eigenvectors do not live inside the common domain")
    out = np.empty((res.k, ambient.count))
    full = np.zeros(ambient.dims)
    for i in range(res.k):
        full[...] = 0.0
        full[dom.interior] = res.eigenvectors[:, i]
        out[i] = full[ambient.interior]
    return out


def cluster_bases(spec_inner, spec_outer, gaps: C.GapData,
                  ambient: GridDomain | None = None) -> tuple[list, list]:
    """Bases of E_k (inner eigenvectors) and E'_k (outer, same index ranges)."""
    ambient = ambient or spec_outer.domain
    Vi = _restrict(spec_inner, ambient)
    Vo = _restrict(spec_outer, ambient)
    w = ambient.cell_volume
    bi, bo = [], []
    for k, idx in enumerate(gaps.clusters, start=1):
        idx = list(idx)
        bi.append(ClusterBasis(k, Vi[idx], spec_inner.eigenvalues[idx], w))
        if idx[-1] < Vo.shape[0]:
            bo.append(ClusterBasis(k, Vo[idx], spec_outer.eigenvalues[idx], w))
    return bi, bo


def project_onto_cluster(f: np.ndarray, basis: ClusterBasis) -> tuple[np.ndarray, float]:
    """(P f, |P f|^2) for the orthogonal projection onto the span of ``basis``."""
    f = np.asarray(f, float)
    if f.shape != basis.vectors.shape[1:]:
        raise GeometryError(f"vector of shape {f.shape} does not live on the basis grid "
                            f"{basis.vectors.shape[1:]}")
    c = basis.weight * (basis.vectors @ f)
    return c @ basis.vectors, float(c @ c)


def _norm2(v, w):
    return float(w * np.dot(v, v))


def _unit_samples(basis: ClusterBasis, count: int, rng) -> list[np.ndarray]:
    out = [v.copy() for v in basis.vectors]
    for _ in range(count):
        c = rng.standard_normal(basis.dim)
        c /= np.linalg.norm(c)
        out.append(c @ basis.vectors)
    return out


@dataclass
class ProximityReport:
    rows: list
    calculation_rows: list
    anomalies: list = field(default_factory=list)

    def verdict_counts(self) -> dict:
        out: dict = {}
        for r in self.rows + self.calculation_rows:
            out[r["verdict"]] = out.get(r["verdict"], 0) + 1
        return out

    @property
    def any_violated(self) -> bool:
        return any(r["verdict"] == "violated" for r in self.rows + self.calculation_rows)


def proximity_report(gaps: C.GapData, bases_in: Sequence[ClusterBasis],
                     bases_out: Sequence[ClusterBasis], k_max: int | None = None, *,
                     samples: int = 10, seed: int = 0, slack: float = 1e-9) -> ProximityReport:
    """Check the A/B/C proximity inequalities and the intermediate calculation bound.

    A: |(I-P_k) f|^2 <= A_k delta_{N_{k-1}+1} / Lambda_k for f in E_k.
    B: |f - f'|^2 <= 4 A_k delta_{N_{k-1}+1} / Lambda_k for f' in E'_k with
       f' = P_k f / |P_k f|, f in E_k obtained by inverting P_k on E_k.
    C: |(P_1+...+P_k) f|^2 <= 4 (A_1+...+A_k) delta_{N_{k-1}+1} / Lambda_k
       for f in a later cluster E_{k+l}.
    Rows whose hypothesis delta_{N_k+1} <= Lambda_k/(2 A_k) fails are
    marked ``hypothesis_failed``.
    """
    K = gaps.complete if k_max is None else min(k_max, gaps.complete)
    K = min(K, len(bases_out))
    rng = np.random.default_rng(seed)
    w = bases_in[0].weight
    rows, calc, anomalies = [], [], []

    def row(k, part, sample, value, bound, hyp, extra=None):
        lhs, rhs, holds = hyp
        verdict = "hypothesis_failed" if not holds else (
            "verified" if value <= bound + slack else "violated")
        r = {"k": k, "part": part, "sample": sample, "value": value, "bound": bound,
             "hypothesis_value": lhs, "hypothesis_bound": rhs, "verdict": verdict}
        if extra:
            r.update(extra)
        rows.append(r)

    for k in range(1, K + 1):
        hyp = gaps.hypothesis(k)
        d_prev = gaps.delta_at(gaps.N_of(k - 1) + 1)
        Lam = gaps.Lambda[k - 1]
        A = gaps.A[k - 1]
        Ek, Eok = bases_in[k - 1], bases_out[k - 1]
        # part A
        for s, f in enumerate(_unit_samples(Ek, samples, rng)):
            pf, n2 = project_onto_cluster(f, Eok)
            row(k, "A", s, max(_norm2(f, w) - n2, 0.0), A * d_prev / Lam, hyp)
        # part B: M[i, j] = <e_i, f'_j>; solve M^T c = target for the preimage
        M = w * (Ek.vectors @ Eok.vectors.T)
        cond = np.linalg.cond(M)
        for j in range(Eok.dim):
            fp = Eok.vectors[j]
            if not np.isfinite(cond) or cond > 1e12:
                anomalies.append({"k": k, "part": "B", "sample": j,
                                  "reason": "projection restricted to the cluster is singular"})
                continue
            target = np.zeros(Eok.dim)
            target[j] = 1.0
            c = np.linalg.solve(M.T, target)
            f = c @ Ek.vectors
            f /= np.sqrt(_norm2(f, w))
            pf, n2 = project_onto_cluster(f, Eok)
            resid = np.sqrt(_norm2(pf / np.sqrt(n2) - fp, w))
            # nearest point of E_k, reported for comparison
            q, _ = project_onto_cluster(fp, Ek)
            qn = np.sqrt(_norm2(q, w))
            proj_dist = _norm2(q / qn - fp, w) if qn > 0 else np.nan
            row(k, "B", j, _norm2(f - fp, w), 4.0 * A * d_prev / Lam, hyp,
                {"relation_residual": resid, "projection_distance": proj_dist})
            if hyp[2] and resid > 1e-6 * np.sqrt(max(d_prev / Lam, 1e-300)) + 1e-10:
                anomalies.append({"k": k, "part": "B", "sample": j,
                                  "reason": f"witness relation residual {resid!r}"})
        # part C
        sumA = sum(gaps.A[:k])
        for later in bases_in[k:]:
            for s, f in enumerate(_unit_samples(later, min(samples, 3), rng)):
                mass = sum(project_onto_cluster(f, bases_out[i])[1] for i in range(k))
                row(k, "C", s, mass, 4.0 * sumA * d_prev / Lam, hyp,
                    {"from_cluster": later.index})
    # intermediate inequality of the calculation step
    for i in range(1, K + 1):
        Lam = gaps.Lambda[i - 1]
        d_next = gaps.delta_at(gaps.N_of(i) + 1)
        if d_next > Lam / 2:
            continue
        d_prev = gaps.delta_at(gaps.N_of(i - 1) + 1)
        lam_next = float(gaps.lam_prime[gaps.N_of(i)])
        members = gaps.lam[gaps.clusters[i - 1]]
        spread = 2.0 * float(members.max() - members.min()) / Lam
        for s, f in enumerate(_unit_samples(bases_in[i - 1], samples, rng)):
            lower = sum(project_onto_cluster(f, bases_out[j])[1] for j in range(i - 1))
            _, n2 = project_onto_cluster(f, bases_out[i - 1])
            value = _norm2(f, w) - n2
            bound = (2.0 / Lam) * (d_prev + lam_next * lower)
            ok = value <= bound + slack + spread
            calc.append({"k": i, "part": "calculation", "sample": s, "value": value,
                         "bound": bound, "slack": slack + spread,
                         "verdict": "verified" if ok else "violated"})
    return ProximityReport(rows, calc, anomalies)


# --- unit-vector and Gram-Schmidt lemmas ----------------------------------------------

def _range_basis(P, dim):
    P = np.asarray(P, float)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[0] != dim:
        raise ArgumentError("projector range does not match the vector dimension")
    Q, R = np.linalg.qr(P)
    keep = np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(R).max())
    return Q[:, keep]


def prehilbert_check(v: np.ndarray, P, *, weight: float = 1.0) -> tuple[float, float, bool]:
    """|v - Pv/|Pv||^2 against 4 (1 - |Pv|^2) for a unit v.

    ``P`` is either a matrix whose columns span the range of an orthogonal
    projector, or a callable applying the projector.
    """
    v = np.asarray(v, float)
    nv = np.sqrt(weight * v @ v)
    if abs(nv - 1.0) > 1e-9:
        raise PreconditionError(f"v must be a unit vector, |v| = {nv!r}")
    if callable(P):
        pv = np.asarray(P(v), float)
    else:
        Q = _range_basis(P, v.size)
        pv = Q @ (Q.T @ v)
    npv2 = weight * float(pv @ pv)
    if npv2 <= 1e-28:
        raise PreconditionError("projection of v vanishes")
    u = v - pv / np.sqrt(npv2)
    lhs = weight * float(u @ u)
    rhs = 4.0 * (1.0 - npv2)
    return lhs, rhs, bool(lhs <= rhs + 1e-12)


@dataclass(frozen=True, eq=False)
class GramSchmidtResult:
    F: np.ndarray
    energies: np.ndarray
    bounds: np.ndarray
    ratio: float
    passed: bool


def gram_schmidt_energy_check(psi: np.ndarray, q: np.ndarray, lam, rho: float,
                              mode: str = "uniform", *, weight: float = 1.0,
                              rtol: float = 1e-12) -> GramSchmidtResult:
    """Classical Gram-Schmidt of an almost orthonormal family and its energies.

    ``psi`` has one vector per row, ``q`` is the symmetric matrix of the
    quadratic form (so q(u) = u @ q @ u).  In ``uniform`` mode ``lam`` is a
    scalar and each q(F_i) is compared with lam (1 + rho b_k); in
    ``per_index`` mode ``lam`` is nondecreasing and q(F_i) is compared with
    lam_i (1 + rho b_i).
    """
    psi = np.atleast_2d(np.asarray(psi, float))
    q = np.asarray(q, float)
    k = psi.shape[0]
    if mode == "uniform":
        lams = np.full(k, float(lam))
    elif mode == "per_index":
        lams = np.asarray(lam, float)
        if lams.shape != (k,) or np.any(np.diff(lams) < 0):
            raise ArgumentError("per_index mode needs k nondecreasing eigenvalue bounds")
    else:
        raise ArgumentError(f"unknown mode {mode!r}")
    if rho < 0:
        raise ArgumentError("rho must be >= 0")
    a, b = C.ak_bk_sequences(k, float(rho))
    if 4.0 * rho * a[-1] > 1.0:
        raise PreconditionError(f"4 rho a_k = {4 * rho * a[-1]!r} exceeds 1")
    G = weight * psi @ psi.T
    dev = float(np.max(np.abs(G - np.eye(k))))
    if dev > rho * (1 + rtol) + 1e-15:
        raise PreconditionError(f"Gram deviation {dev!r} exceeds rho={rho!r}")
    energies_psi = weight * np.einsum("ij,jk,ik->i", psi, q, psi)
    if np.any(energies_psi > lams * (1 + rho) * (1 + rtol) + 1e-300):
        raise PreconditionError("q(psi_i) exceeds the admitted bound")
    F = np.empty_like(psi)
    for i in range(k):
        hvec = psi[i] - sum(weight * (F[j] @ psi[i]) * F[j] for j in range(i))
        nh = np.sqrt(weight * hvec @ hvec)
        if nh <= 1e-14:
            raise DegeneracyError(f"h_{i + 1} vanishes")
        F[i] = hvec / nh
    energies = weight * np.einsum("ij,jk,ik->i", F, q, F)
    if mode == "uniform":
        bounds = lams * (1 + rho * float(b[-1]))
    else:
        bounds = lams * (1 + rho * np.asarray(b, float))
    ratio = float(np.max(energies / lams)) if np.all(lams > 0) else float("nan")
    passed = bool(np.all(energies <= bounds * (1 + rtol)))
    return GramSchmidtResult(F, energies, bounds, ratio, passed)
