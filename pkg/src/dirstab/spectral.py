"""Discrete Dirichlet Laplacian, its lowest eigenpairs, and cutoff energies.

The operator is the (2n+1)-point stencil scaled by 1/h**2, with rows and
columns indexed by interior nodes only, so exterior nodes act as Dirichlet
data.  Grid functions are full-grid arrays that vanish outside the mask;
for them ``dirichlet_energy(u) == <L u, u>`` holds exactly.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import bessel
from .constants import cutoff_lambda
from .errors import (ArgumentError, DomainEmptyError, GeometryError,
                     SolverError)
from .grid import GridDomain, distance_transform
from .shapes import ShapeSpec

DENSE_LIMIT = 1500
SHIFT_INVERT_LIMIT = 600_000


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Ascending eigenvalues with discretely orthonormal eigenvectors.

    ``eigenvectors[:, i]`` is indexed by the interior nodes of ``domain`` in
    C order.  ``err_h`` holds the two-grid estimate when it was computed.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    h: float
    ip_weight: float
    domain: GridDomain | None = None
    err_h: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def field(self, i: int) -> np.ndarray:
        """Eigenvector i as a full-grid array, zero outside the mask."""
        if self.domain is None:
            raise GeometryError("spectral result is not attached to a domain")
        u = np.zeros(self.domain.dims)
        u[self.domain.interior] = self.eigenvectors[:, i]
        return u

    def fields(self) -> np.ndarray:
        return np.stack([self.field(i) for i in range(self.k)])


@dataclass(frozen=True, eq=False)
class CutoffProfile:
    """Cutoff function on the grid: 1 on ``inner``, 0 off ``outer``."""

    values: np.ndarray
    h: float
    eps: float
    inner: np.ndarray
    outer: np.ndarray

    @property
    def gradient_bound(self) -> float:
        return 1.0 / self.eps if self.eps > 0 else math.inf


def assemble_laplacian(dom: GridDomain) -> sp.csr_matrix:
    if dom.is_empty:
        raise DomainEmptyError("cannot assemble the Laplacian of an empty domain")
    mask = dom.interior
    n = int(mask.sum())
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[mask] = np.arange(n)
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, 2.0 * dom.ndim)]
    for ax in range(dom.ndim):
        a = np.moveaxis(index, ax, 0)
        p, q = a[:-1], a[1:]
        both = (p >= 0) & (q >= 0)
        p, q = p[both], q[both]
        rows += [p, q]
        cols += [q, p]
        vals += [-np.ones(p.size), -np.ones(p.size)]
    op = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(n, n))
    return (op / dom.h ** 2).tocsr()


def _rayleigh_ritz(op, V):
    Q, _ = np.linalg.qr(V)
    T = Q.T @ (op @ Q)
    w, Y = np.linalg.eigh(0.5 * (T + T.T))
    return w, Q @ Y


def _normalize(V, weight):
    V = V / np.sqrt(weight * np.sum(V * V, axis=0))
    # deterministic sign: largest-magnitude entry positive
    pivot = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivot, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _lobpcg(op, k, tol, rng, max_iter):
    import pyamg

    ml = pyamg.smoothed_aggregation_solver(op.tocsr(), max_coarse=500)
    X = rng.standard_normal((op.shape[0], k + max(2, k // 2)))
    # accuracy is judged by the residual check after the Ritz polish
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        w, V = spla.lobpcg(op, X, M=ml.aspreconditioner(), tol=tol, maxiter=max_iter,
                           largest=False)
    order = np.argsort(w)[:k]
    return V[:, order]


def lowest_eigenpairs(op, k: int, tol: float = 1e-8, *, weight: float = 1.0,
                      seed: int = 0, max_iter: int = 10_000, method: str = "auto",
                      h: float = 1.0, domain: GridDomain | None = None) -> SpectralResult:
    """The k algebraically smallest eigenpairs of a sparse SPD operator.

    ``method`` is ``dense``, ``shift-invert`` (ARPACK about sigma=0),
    ``lobpcg`` (AMG-preconditioned block iteration) or ``auto``.  Vectors
    are orthonormal under ``weight * sum(u*v)``.
    """
    n = op.shape[0]
    if not 1 <= k <= n:
        raise ArgumentError(f"need 1 <= k <= {n}, got k={k}")
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    if method == "auto":
        if n <= DENSE_LIMIT or k >= n - 1:
            method = "dense"
        elif n <= SHIFT_INVERT_LIMIT:
            method = "shift-invert"
        else:
            method = "lobpcg"
    rng = np.random.default_rng(seed)
    if method == "dense":
        w, V = sla.eigh(op.toarray(), subset_by_index=[0, k - 1])
    elif method == "shift-invert":
        v0 = rng.standard_normal(n)
        try:
            w, V = spla.eigsh(op.tocsc(), k=k, sigma=0.0, which="LM", v0=v0,
                              maxiter=max_iter, tol=0)
        except spla.ArpackNoConvergence as exc:
            raise SolverError("ARPACK did not converge", residuals=None) from exc
    elif method == "lobpcg":
        V = _lobpcg(op, k, tol * 1e-2, rng, max_iter)
    else:
        raise ArgumentError(f"unknown eigensolver method {method!r}")
    w, V = _rayleigh_ritz(op, V)
    w, V = w[:k], V[:, :k]
    res = np.linalg.norm(op @ V - V * w, axis=0) / (np.abs(w) * np.linalg.norm(V, axis=0))
    if np.any(~np.isfinite(res)) or np.any(res > tol):
        raise SolverError(f"eigensolver residuals {res} exceed tol {tol}", residuals=res)
    V = _normalize(V, weight)
    return SpectralResult(np.asarray(w), V, res, h, weight, domain)


def eigensolve(dom: GridDomain, k: int, tol: float = 1e-8, *, seed: int = 0,
               method: str = "auto") -> SpectralResult:
    """Lowest k Dirichlet eigenpairs of a domain.

    k is capped at the number of interior nodes.
    """
    op = assemble_laplacian(dom)
    k = min(k, op.shape[0])
    return lowest_eigenpairs(op, k, tol, weight=dom.cell_volume, seed=seed,
                             method=method, h=dom.h, domain=dom)


def two_grid_error(coarse, fine) -> np.ndarray:
    """Richardson estimate |lambda(h) - lambda(h/2)| / 3 of the error at h."""
    coarse = np.asarray(coarse, float)
    fine = np.asarray(fine, float)
    m = min(coarse.size, fine.size)
    return np.abs(coarse[:m] - fine[:m]) / 3.0


def with_two_grid_error(res: SpectralResult, fine: SpectralResult) -> SpectralResult:
    return SpectralResult(res.eigenvalues, res.eigenvectors, res.residuals, res.h,
                          res.ip_weight, res.domain,
                          err_h=two_grid_error(res.eigenvalues, fine.eigenvalues))


def fundamental_tone(dom: GridDomain, tol: float = 1e-8, *, seed: int = 0) -> float:
    """First eigenvalue, +inf for an empty mask.

    For a disconnected mask this is automatically the smallest tone among
    the components.
    """
    if dom.is_empty:
        return math.inf
    return float(eigensolve(dom, 1, tol, seed=seed).eigenvalues[0])


def reference_spectrum(shape: ShapeSpec, k: int) -> list[float]:
    """Exact Dirichlet eigenvalues of a box or a planar disk."""
    if k < 1:
        raise ArgumentError("k must be >= 1")
    if shape.kind == "rectangle":
        sides = np.subtract(shape.params["hi"], shape.params["lo"])
        grids = np.meshgrid(*[np.arange(1, k + 1)] * len(sides), indexing="ij")
        vals = sum((g / a) ** 2 for g, a in zip(grids, sides)) * math.pi ** 2
        return sorted(vals.ravel().tolist())[:k]
    if shape.kind == "disk":
        if shape.ndim != 2:
            raise ArgumentError("disk reference spectrum is only available in the plane")
        return bessel.disk_eigenvalues(k, shape.params["radius"])
    raise ArgumentError(f"no reference spectrum for shape {shape.kind!r}")


def cluster_indices(values, tol_mult: float) -> list[list[int]]:
    """Group ascending eigenvalues whose relative spacing is within tol_mult."""
    values = np.asarray(values, float)
    clusters = [[0]] if values.size else []
    for i in range(1, values.size):
        prev = values[i - 1]
        if values[i] - prev <= tol_mult * abs(prev):
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def inner_product(u: np.ndarray, v: np.ndarray, h: float) -> float:
    return float(h ** u.ndim * np.sum(u * v))


def dirichlet_energy(u: np.ndarray, h: float) -> float:
    """Forward-difference energy sum |grad u|^2 h^n of a zero-extended field."""
    total = 0.0
    for ax in range(u.ndim):
        total += float(np.sum(np.diff(u, axis=ax) ** 2))
    return total * h ** (u.ndim - 2)


def max_gradient(u: np.ndarray, h: float) -> float:
    return max(float(np.max(np.abs(np.diff(u, axis=ax)))) for ax in range(u.ndim)) / h


def cutoff_profile(inner: GridDomain, outer: GridDomain, eps: float) -> CutoffProfile:
    """eta = clamp(d(x, outer^c)/eps, 0, 1), forced to 1 on ``inner``.

    When ``inner`` equals ``outer`` the profile is the indicator of the set.
    """
    inner.require_same_grid(outer)
    if not inner.subset_of(outer):
        raise GeometryError("cutoff needs inner contained in outer")
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    if inner.equals(outer):
        eta = inner.interior.astype(float)
        return CutoffProfile(eta, inner.h, eps, inner.interior, outer.interior)
    d = distance_transform(outer, "to_complement").d
    if inner.count and float(d[inner.interior].min()) < eps - inner.h - 1e-12:
        raise GeometryError(f"inner set is closer than eps - h to the outer complement (eps={eps})")
    eta = np.clip(d / eps, 0.0, 1.0)
    eta[inner.interior] = 1.0
    return CutoffProfile(eta, inner.h, eps, inner.interior, outer.interior)


def cutoff_energy_check(f: np.ndarray, eta: CutoffProfile, lam: float, mu: float,
                        eps: float, slack: float = 0.0) -> tuple[float, float, bool]:
    """Energy of eta*f against lam + Lam + 2 sqrt(Lam lam)."""
    if not mu > 0:
        raise ArgumentError("mu must be positive")
    lhs = dirichlet_energy(eta.values * f, eta.h)
    Lam = cutoff_lambda(lam, mu, eps)
    rhs = lam + Lam + 2.0 * math.sqrt(Lam * lam)
    return lhs, rhs, bool(lhs <= rhs + slack)


def write_spectrum_csv(res: SpectralResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "lambda", "residual", "err_h"])
        for i, lam in enumerate(res.eigenvalues):
            err = "" if res.err_h is None or i >= len(res.err_h) else repr(float(res.err_h[i]))
            w.writerow([i + 1, repr(float(lam)), repr(float(res.residuals[i])), err])


def write_eigenvectors(res: SpectralResult, prefix) -> None:
    """Raw little-endian float64 vectors plus a CSV map from cell to coordinates.

    ``<prefix>.bin`` holds the k vectors one after the other.
    """
    if res.domain is None:
        raise GeometryError("spectral result is not attached to a domain")
    np.ascontiguousarray(res.eigenvectors.T, dtype="<f8").tofile(f"{prefix}.bin")
    idx = np.argwhere(res.domain.interior)
    axes = res.domain.axes()
    with open(f"{prefix}_index.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        names = "ijk"[: res.domain.ndim]
        coords = "xyz"[: res.domain.ndim]
        w.writerow(["cell", *names, *coords])
        for c, ind in enumerate(idx):
            w.writerow([c, *ind.tolist(), *[repr(float(axes[a][i])) for a, i in enumerate(ind)]])
