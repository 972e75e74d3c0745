"""Explicit constants of the stability estimates.

Covers the a_k/b_k recurrences and the rho/eps choices of the global
estimate, gap data and proximity constants of eigenspace clusters, weak
Hardy constants of the standard families, Davies' threshold, and the closed
form local bounds for balls and convex sets.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate

from . import bessel
from .errors import ArgumentError, ClusteringError, RangeError

_FLOAT_MAX = int(np.finfo(float).max)


# --- a_k, b_k ----------------------------------------------------------------

def a_sequence(k: int) -> list[int]:
    """a_1 = 1, a_k = 1 + sum_{i<k} a_i**2, as exact integers."""
    if k < 1:
        raise ArgumentError("k must be >= 1")
    a = [1]
    sq = 1
    for _ in range(1, k):
        a.append(1 + sq)
        sq += a[-1] ** 2
    return a


def largest_safe_k() -> int:
    """Largest k whose a_k is representable as a finite float."""
    k, sq = 1, 1
    while True:
        nxt = 1 + sq
        if nxt > _FLOAT_MAX:
            return k
        sq += nxt * nxt
        k += 1


def ak_bk_sequences(k: int, rho) -> tuple[list, list]:
    """Sequences (a_1..a_k) and (b_1..b_k) at the given rho.

    a is exact.  b is exact (Fraction) when rho is an int or Fraction,
    float otherwise.  Raises RangeError past the float range.
    """
    if k < 1:
        raise ArgumentError("k must be >= 1")
    if rho < 0:
        raise ArgumentError("rho must be >= 0")
    safe = largest_safe_k()
    if k > safe:
        raise RangeError(f"a_k overflows floating point beyond k={safe}", largest_safe=safe)
    a = a_sequence(k)
    exact = isinstance(rho, (int, Fraction))
    r = Fraction(rho) if exact else float(rho)
    b = [Fraction(4) if exact else 4.0]
    for i in range(1, k):
        c = 1 + 8 * a[i]
        if not exact:
            c = float(c)
        nxt = c * ((1 + r * b[-1]) * c + 1)
        if not exact and not math.isfinite(nxt):
            raise RangeError(f"b_k overflows at k={i + 1}", largest_safe=i)
        b.append(nxt)
    return a, b


def b_at_extremal_rho(k: int) -> float:
    """b_k evaluated at the worst admissible rho = 1/(4 a_k)."""
    a = a_sequence(k)
    return float(ak_bk_sequences(k, Fraction(1, 4 * a[-1]))[1][-1])


# --- global estimate ledger ----------------------------------------------------

def cutoff_lambda(lam: float, mu: float, eps: float) -> float:
    """Lam = 2 (1 + eps^2 lam) / (eps^4 mu); zero when mu is infinite."""
    if math.isinf(mu):
        return 0.0
    if eps <= 0:
        return math.inf
    return 2.0 * (1.0 + eps * eps * lam) / (eps ** 4 * mu)


@dataclass(frozen=True)
class ConstantsLedger:
    k: int
    alpha: float
    lam: float
    mu: float
    ratio: float
    rho: float
    eps: float
    eps_proof: float
    a_k: int
    b_k: float
    Lambda_lemma: float
    condition_value: float
    condition_ok: bool
    bound: float


def rho_epsilon_condition(lam: float, mu: float, alpha: float, k: int) -> ConstantsLedger:
    """Every quantity of the global estimate for one (lam, mu, alpha, k).

    ``eps`` is the dilation radius 2 (lam/mu)^alpha / sqrt(lam); ``eps_proof``
    is half of it, the cutoff width entering ``Lambda_lemma``.
    """
    if not 0 < alpha < 0.25:
        raise ArgumentError(f"alpha must lie in (0, 1/4), got {alpha}")
    if not lam > 0:
        raise ArgumentError("lam must be positive")
    if not mu > 0:
        raise ArgumentError("mu must be positive or infinite")
    a = a_sequence(k)[-1]
    if math.isinf(mu):
        b = float(ak_bk_sequences(k, 0.0)[1][-1])
        return ConstantsLedger(k, alpha, lam, mu, 0.0, 0.0, 0.0, 0.0, a, b, 0.0,
                               0.0, True, 0.0)
    ratio = lam / mu
    power = ratio ** (0.5 - 2 * alpha)
    rho = 8.0 * power
    eps = 2.0 * ratio ** alpha / math.sqrt(lam)
    eps_proof = eps / 2
    b = float(ak_bk_sequences(k, rho)[1][-1])
    cond = 32.0 * power * a
    return ConstantsLedger(k, alpha, lam, mu, ratio, rho, eps, eps_proof, a, b,
                           cutoff_lambda(lam, mu, eps_proof), cond, cond <= 1.0,
                           b * power * lam)


def corollary_bounds(lam: float, mu: float, k: int, alpha: float, gamma: float,
                     C_k: float) -> dict:
    """Combined global+local bounds at a given alpha and at alpha = 1/(2(2+gamma)).

    ``general`` is b_k (lam/mu)^(1/2-2alpha) lam + C_k lam^(-gamma/2) (lam/mu)^(gamma alpha);
    ``explicit`` is the closed form printed for alpha = 1/(2(2+gamma)).
    ``general_at_special`` evaluates the general form at that alpha.
    """
    special = 1.0 / (2.0 * (2.0 + gamma))
    led = rho_epsilon_condition(lam, mu, alpha, k)
    led_s = rho_epsilon_condition(lam, mu, special, k)

    def general(l):
        if math.isinf(mu):
            return 0.0
        r = lam / mu
        return l.b_k * r ** (0.5 - 2 * l.alpha) * lam + C_k * lam ** (-gamma / 2) * r ** (gamma * l.alpha)

    if math.isinf(mu):
        explicit = 0.0
    else:
        g2 = 2.0 * (2.0 + gamma)
        explicit = (led_s.b_k * lam ** ((4 + 3 * gamma) / g2)
                    + C_k * lam ** (-gamma * (1 + gamma) / g2)) * mu ** (-1.0 / g2)
    return {"ledger": led, "ledger_special": led_s, "alpha_special": special,
            "general": general(led), "general_at_special": general(led_s),
            "explicit": explicit}


# --- gap data ------------------------------------------------------------------

@dataclass(frozen=True)
class GapData:
    """Cluster structure of the inner spectrum and the proximity constants.

    Lists are 0-based containers of 1-based quantities: ``N[k-1]`` is N_k,
    ``delta[i-1]`` is delta_i.  ``Lambda`` and ``A`` cover the clusters whose
    successor eigenvalue is known.
    """

    tol_mult: float
    clusters: list
    n: list
    N: list
    Lambda: list
    delta: list
    A: list
    lam: np.ndarray
    lam_prime: np.ndarray
    negative_flag: bool = False
    notes: list = field(default_factory=list)

    @property
    def complete(self) -> int:
        return len(self.Lambda)

    def N_of(self, k: int) -> int:
        return 0 if k == 0 else self.N[k - 1]

    def delta_at(self, i: int) -> float:
        return self.delta[i - 1]

    def hypothesis(self, k: int) -> tuple[float, float, bool]:
        """(delta_{N_k+1}, Lambda_k / (2 A_k), holds)."""
        lhs = self.delta_at(self.N_of(k) + 1)
        rhs = self.Lambda[k - 1] / (2.0 * self.A[k - 1])
        return lhs, rhs, lhs <= rhs


def _cluster(values, tol_mult):
    clusters = [[0]]
    for i in range(1, len(values)):
        prev = values[i - 1]
        gap = values[i] - prev
        if gap <= tol_mult * abs(prev):
            clusters[-1].append(i)
        else:
            if gap <= 2.0 * tol_mult * abs(prev):
                raise ClusteringError(
                    f"eigenvalues {prev!r} and {values[i]!r} are within a factor 2 of the "
                    f"clustering tolerance {tol_mult}; solve more accurately or adjust tol_mult")
            clusters.append([i])
    return clusters


def gap_data(spec_inner, spec_outer, tol_mult: float = 1e-4, slack: float = 0.0,
             k_max: int | None = None) -> GapData:
    """Cluster the inner spectrum and compute N_k, Lambda_k, delta_i, A_k.

    ``spec_inner``/``spec_outer`` are spectral results (or plain ascending
    sequences) of the inner and outer domain.  Negative differences
    lam_j - lam'_j are clamped to 0 and flagged when below -slack.
    """
    lam = np.asarray(getattr(spec_inner, "eigenvalues", spec_inner), float)
    lamp = np.asarray(getattr(spec_outer, "eigenvalues", spec_outer), float)
    if lam.size < 2:
        raise RangeError("need at least two inner eigenvalues for a gap")
    clusters = _cluster(lam, tol_mult)
    n = [len(c) for c in clusters]
    N = list(np.cumsum(n).tolist())
    complete = len(clusters) - 1
    if k_max is not None:
        if k_max > complete:
            raise RangeError(f"only {complete} complete clusters available, asked for {k_max}",
                             largest_safe=complete)
        complete = k_max
    if lamp.size < N[complete - 1] + 1:
        raise RangeError("outer spectrum too short for the requested clusters")
    gaps = [lam[N[j]] - lam[N[j] - 1] for j in range(complete)]
    Lambda = list(np.minimum.accumulate(gaps).tolist())
    m = min(lam.size, lamp.size)
    diffs = lam[:m] - lamp[:m]
    negative = bool(np.any(diffs < -slack))
    delta = list(np.maximum.accumulate(np.maximum(diffs, 0.0)).tolist())
    A = [2.0]
    for k in range(2, complete + 1):
        first = lam[N[k - 2]]
        A.append(float(2.0 + 8.0 * first * sum(A) / Lambda[k - 1]))
    notes = ["negative lam - lam' clamped"] if negative else []
    return GapData(tol_mult, clusters, n, N, Lambda, delta, A, lam, lamp, negative, notes)


# --- local regularity constants ----------------------------------------------

@dataclass(frozen=True)
class RegularityConstants:
    family: str
    hardy_a: float | None = None
    hardy_b: float | None = None
    davies_c: float | None = None
    davies_alpha: float | None = None
    eps_k: float | None = None
    davies_Ck: float | None = None
    gamma: float | None = None
    cone_angle: float | None = None
    cone_height: float | None = None
    eps_star: float | None = None
    N: int | None = None
    cheng_c: float | None = None
    notes: tuple = ()

    @property
    def davies_alpha_max(self) -> float | None:
        if self.hardy_a is None:
            return None
        return 1.0 / math.sqrt(self.hardy_a)


def _sin_power_integral(m: int, upper: float) -> float:
    val, _ = integrate.quad(lambda t: math.sin(t) ** m, 0.0, upper,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def rolling_ball_hardy_a(n: int) -> float:
    """(n/32) int_0^{pi/6} sin^{n-2} / int_0^{pi/2} sin^{n-2}."""
    if n < 2:
        raise ArgumentError("dimension must be >= 2")
    return (n / 32.0) * _sin_power_integral(n - 2, math.pi / 6) / _sin_power_integral(n - 2, math.pi / 2)


def cone_parameters(angle: float, height: float) -> tuple[float, int]:
    """(eps_star, N) for an external cone of the given aperture and height."""
    if not 0 < angle < math.pi:
        raise ArgumentError("cone angle must lie in (0, pi)")
    if not height > 0:
        raise ArgumentError("cone height must be positive")
    t = math.tan(angle / 2)
    eps_star = height * t / (t + 1)
    N = math.ceil(1.0 / t - 1e-12)
    return eps_star, max(N, 1)


def hardy_constants(family: str, *, n: int = 2, eps0: float | None = None,
                    angle: float | None = None, height: float | None = None,
                    hardy_a: float | None = None, hardy_b: float | None = None) -> RegularityConstants:
    """Weak Hardy constants (a, b) of a family of domains.

    ``rolling_ball`` needs n and eps0; ``planar_simply_connected`` has fixed
    constants; ``cone`` and ``capacity`` take a and b from the caller, and
    ``cone`` also reports eps_star and N.
    """
    if family == "rolling_ball":
        if eps0 is None or not eps0 > 0:
            raise ArgumentError("rolling_ball needs eps0 > 0")
        return RegularityConstants(family, hardy_a=rolling_ball_hardy_a(n),
                                   hardy_b=(2.0 / eps0) ** 2)
    if family == "planar_simply_connected":
        return RegularityConstants(family, hardy_a=16.0, hardy_b=0.0)
    if family == "cone":
        if n < 2:
            raise ArgumentError("dimension must be >= 2")
        eps_star, N = cone_parameters(angle, height)
        return RegularityConstants(family, hardy_a=hardy_a, hardy_b=hardy_b,
                                   cone_angle=angle, cone_height=height,
                                   eps_star=eps_star, N=N,
                                   notes=("hardy constants supplied externally",))
    if family == "capacity":
        if n < 3:
            raise ArgumentError("capacity density family needs n >= 3")
        return RegularityConstants(family, hardy_a=hardy_a, hardy_b=hardy_b,
                                   notes=("hardy constants supplied externally",))
    raise ArgumentError(f"unknown family {family!r}")


@dataclass(frozen=True)
class DaviesBound:
    """eps_k and the local bound eps -> coefficient * eps**exponent."""

    c: float
    lam_k: float
    b: float
    alpha: float
    eps_k: float
    coefficient: float
    exponent: float

    def __call__(self, eps: float) -> float:
        return self.coefficient * eps ** self.exponent

    def quotient(self, eps: float) -> float:
        """The unsimplified min-max quotient bound before using eps <= eps_k."""
        m = self.c * (self.lam_k + self.b) ** 1.5
        return eps ** (2 * self.alpha) * 2 ** (2 * self.alpha) * 9 * m / (1 - eps ** (2 + 2 * self.alpha) * m)


def davies_threshold(c: float, lam_k: float, b: float, alpha: float) -> DaviesBound:
    if not c > 0:
        raise ArgumentError("c must be positive")
    if lam_k < 0 or b < 0:
        raise ArgumentError("lam_k and b must be nonnegative")
    if not alpha > 0:
        raise ArgumentError("alpha must be positive")
    if lam_k + b == 0:
        raise ArgumentError("lam_k + b must be positive")
    m = c * (lam_k + b) ** 1.5
    eps_k = (1.0 / (2.0 * m)) ** (1.0 / (2.0 + 2.0 * alpha))
    coef = 2.0 ** (2 * alpha + 1) * 9.0 * m
    return DaviesBound(c, lam_k, b, alpha, eps_k, coef, 2 * alpha)


def unit_ball_eigenvalue(n: int, k: int, c: float | None = None) -> float:
    """c(n, k): k-th Dirichlet eigenvalue of the unit ball."""
    if c is not None:
        return float(c)
    if n != 2:
        raise ArgumentError("c(n, k) is only built in for n = 2; pass c explicitly")
    return bessel.disk_eigenvalues(k)[k - 1]


def closed_form_bounds(kind: str, **p) -> float:
    """Closed-form local quantities.

    ``convex``: c(n,k)/r0^2 (2 eps/r0 + eps^2/r0^2)
    ``cheng``: (n-1)^2/4 + c_tilde/r0^2
    ``ball_identity``: c(n,k) eps (2r+eps) / (r^2 (eps+r)^2)
    """
    if kind == "convex":
        r0, eps = p["r0"], p["eps"]
        if not r0 > 0 or eps < 0:
            raise ArgumentError("need r0 > 0 and eps >= 0")
        c = unit_ball_eigenvalue(p["n"], p["k"], p.get("c"))
        return c / r0 ** 2 * (2 * eps / r0 + eps ** 2 / r0 ** 2)
    if kind == "cheng":
        r0 = p["r0"]
        if not r0 > 0:
            raise ArgumentError("need r0 > 0")
        return (p["n"] - 1) ** 2 / 4.0 + p["c_tilde"] / r0 ** 2
    if kind == "ball_identity":
        r, eps = p["r"], p["eps"]
        if not r > 0 or eps < 0:
            raise ArgumentError("need r > 0 and eps >= 0")
        c = unit_ball_eigenvalue(p["n"], p["k"], p.get("c"))
        return c * eps * (2 * r + eps) / (r ** 2 * (eps + r) ** 2)
    raise ArgumentError(f"unknown closed form {kind!r}")


def constants_table(k_max: int, gaps: GapData | None = None) -> list[dict]:
    """Rows (k, a_k, b_k at rho = 1/(4 a_k), A_k, Lambda_k, delta_k)."""
    a = a_sequence(k_max)
    rows = []
    for k in range(1, k_max + 1):
        row = {"k": k, "a_k": a[k - 1], "b_k": b_at_extremal_rho(k),
               "A_k": "", "Lambda_k": "", "delta_k": ""}
        if gaps is not None:
            if k <= gaps.complete:
                row["A_k"] = gaps.A[k - 1]
                row["Lambda_k"] = gaps.Lambda[k - 1]
            if k <= len(gaps.delta):
                row["delta_k"] = gaps.delta[k - 1]
        rows.append(row)
    return rows


def write_constants_csv(rows: Sequence[dict], path) -> None:
    fields = ["k", "a_k", "b_k", "A_k", "Lambda_k", "delta_k"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
