"""Continuum shape generators used to rasterize domains.

A :class:`ShapeSpec` is a tag plus real parameters.  Every generator gives a
membership test for *open* sets: points closer than ``tol`` to the boundary
count as outside, so nodes that land exactly on a boundary are excluded in a
way that does not depend on floating point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError

KINDS = (
    "disk",
    "rectangle",
    "annulus",
    "dumbbell",
    "square_with_tentacle",
    "polygon",
    "ball_in_ball_shell",
    "cusp_box",
)

# per-kind defaults; anything not listed here must be supplied
_DEFAULTS = {
    "disk": {"center": (0.0, 0.0), "radius": 1.0},
    "rectangle": {"lo": (0.0, 0.0), "hi": (1.0, 1.0)},
    "annulus": {"center": (0.0, 0.0), "r_in": 1.0, "r_out": 1.2},
    "ball_in_ball_shell": {"center": (0.0, 0.0, 0.0), "r_in": 0.5, "r_out": 1.0},
    "dumbbell": {"t": 0.05, "w": 0.25, "radius": 1.0, "height": 1.6},
    "square_with_tentacle": {"side": 1.0, "w": 0.02, "L": 1.0},
    "polygon": {},
    "cusp_box": {"lo": (-1.0, -1.0, -1.0), "hi": (1.0, 1.0, 0.0),
                 "depth": 0.5, "coef": 1.0, "power": 2.0},
}


def _as_tuple(v):
    if np.ndim(v) == 0:
        return float(v)
    return tuple(_as_tuple(x) for x in v)


@dataclass(frozen=True)
class ShapeSpec:
    """A generator tag with its parameters.

    Parameters not given fall back to per-kind defaults.  ``dumbbell`` is two
    disks of radius ``radius`` separated by a gap of width ``t`` and joined by
    an arch-shaped handle of width ``w``; dilating it by more than ``t/2``
    closes the gap and encloses a hole.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown shape kind {self.kind!r}; expected one of {KINDS}")
        merged = dict(_DEFAULTS[self.kind])
        merged.update({k: _as_tuple(v) for k, v in self.params.items()})
        object.__setattr__(self, "params", merged)
        self._validate()

    def _validate(self):
        p = self.params
        lengths = [k for k in ("radius", "r_in", "r_out", "t", "w", "L", "side",
                               "height", "depth", "coef") if k in p]
        for k in lengths:
            if not p[k] > 0:
                raise ArgumentError(f"{self.kind}: {k} must be > 0, got {p[k]}")
        if self.kind == "dumbbell" and not 0 < p["t"] < 1:
            raise ArgumentError("dumbbell: neck parameter t must lie in (0, 1)")
        if self.kind in ("annulus", "ball_in_ball_shell") and not p["r_in"] < p["r_out"]:
            raise ArgumentError(f"{self.kind}: need r_in < r_out")
        if self.kind in ("rectangle", "cusp_box"):
            lo, hi = np.asarray(p["lo"]), np.asarray(p["hi"])
            if lo.shape != hi.shape or np.any(hi <= lo):
                raise ArgumentError(f"{self.kind}: need lo < hi componentwise")
        if self.kind == "polygon":
            v = np.asarray(p.get("vertices", ()), dtype=float)
            if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
                raise ArgumentError("polygon: need at least 3 planar vertices")
        if self.kind == "square_with_tentacle" and not p["w"] < p["side"]:
            raise ArgumentError("square_with_tentacle: tentacle wider than square")

    @property
    def ndim(self) -> int:
        p = self.params
        if self.kind in ("disk", "annulus", "ball_in_ball_shell"):
            return len(p["center"])
        if self.kind in ("rectangle", "cusp_box"):
            return len(p["lo"])
        return 2

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        k = self.kind
        if k == "disk":
            c = np.asarray(p["center"])
            return c - p["radius"], c + p["radius"]
        if k in ("annulus", "ball_in_ball_shell"):
            c = np.asarray(p["center"])
            return c - p["r_out"], c + p["r_out"]
        if k in ("rectangle", "cusp_box"):
            return np.asarray(p["lo"], float), np.asarray(p["hi"], float)
        if k == "dumbbell":
            r, t, w = p["radius"], p["t"], p["w"]
            xmax = 2 * r + t / 2
            return np.array([-xmax, -r]), np.array([xmax, p["height"] + w / 2])
        if k == "square_with_tentacle":
            s = p["side"]
            return np.array([0.0, 0.0]), np.array([s + p["L"], s])
        if k == "polygon":
            v = np.asarray(p["vertices"], float)
            return v.min(axis=0), v.max(axis=0)
        raise AssertionError(k)

    def feature_size(self) -> float:
        """Thinnest declared feature, used for resolution checks."""
        p = self.params
        k = self.kind
        if k == "disk":
            return 2 * p["radius"]
        if k in ("annulus", "ball_in_ball_shell"):
            return p["r_out"] - p["r_in"]
        if k == "rectangle":
            return float(np.min(np.subtract(p["hi"], p["lo"])))
        if k == "dumbbell":
            return min(p["t"], p["w"])
        if k == "square_with_tentacle":
            return p["w"]
        if k == "cusp_box":
            return float(np.min(np.subtract(p["hi"], p["lo"])))
        lo, hi = self.bbox()
        return float(np.min(hi - lo))

    def scaled(self, s: float) -> "ShapeSpec":
        """The same shape under the homothety x -> s*x."""
        out = {}
        for key, val in self.params.items():
            if key in ("power",):
                out[key] = val
            else:
                out[key] = _as_tuple(np.multiply(val, s))
        return ShapeSpec(self.kind, out)

    def contains(self, xs: Sequence[np.ndarray], tol: float = 0.0) -> np.ndarray:
        """Membership of points given as broadcastable coordinate arrays."""
        xs = [np.asarray(x, float) for x in xs]
        if len(xs) != self.ndim:
            raise ArgumentError(f"{self.kind} is {self.ndim}-dimensional, got {len(xs)} coordinates")
        return _CONTAINS[self.kind](self.params, xs, tol)


def _ball(center, r, xs, tol):
    d2 = sum((x - c) ** 2 for x, c in zip(xs, center))
    return d2 < (r - tol) ** 2


def _box(lo, hi, xs, tol):
    out = True
    for x, a, b in zip(xs, lo, hi):
        out = out & (x > a + tol) & (x < b - tol)
    return out


def _contains_disk(p, xs, tol):
    return _ball(p["center"], p["radius"], xs, tol)


def _contains_rectangle(p, xs, tol):
    return _box(p["lo"], p["hi"], xs, tol)


def _contains_shell(p, xs, tol):
    d2 = sum((x - c) ** 2 for x, c in zip(xs, p["center"]))
    return (d2 > (p["r_in"] + tol) ** 2) & (d2 < (p["r_out"] - tol) ** 2)


def _contains_dumbbell(p, xs, tol):
    x, y = xs
    r, t, w, top = p["radius"], p["t"], p["w"], p["height"]
    c = r + t / 2
    lobes = _ball((-c, 0.0), r, xs, tol) | _ball((c, 0.0), r, xs, tol)
    bars = (_box((-c - w / 2, 0.0), (-c + w / 2, top + w / 2), xs, tol)
            | _box((c - w / 2, 0.0), (c + w / 2, top + w / 2), xs, tol))
    roof = _box((-c - w / 2, top - w / 2), (c + w / 2, top + w / 2), xs, tol)
    return lobes | bars | roof


def _contains_tentacle(p, xs, tol):
    s, w, L = p["side"], p["w"], p["L"]
    square = _box((0.0, 0.0), (s, s), xs, tol)
    tentacle = _box((s / 2, s / 2 - w / 2), (s + L, s / 2 + w / 2), xs, tol)
    return square | tentacle


def _contains_polygon(p, xs, tol):
    x, y = np.broadcast_arrays(*xs)
    v = np.asarray(p["vertices"], float)
    inside = np.zeros(x.shape, bool)
    near = np.zeros(x.shape, bool)
    for (x0, y0), (x1, y1) in zip(v, np.roll(v, -1, axis=0)):
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xc)
        ex, ey = x1 - x0, y1 - y0
        seg2 = ex * ex + ey * ey
        s = np.clip(((x - x0) * ex + (y - y0) * ey) / seg2, 0.0, 1.0)
        d2 = (x - x0 - s * ex) ** 2 + (y - y0 - s * ey) ** 2
        near |= d2 <= max(tol, 1e-300) ** 2
    return inside & ~near


def _contains_cusp_box(p, xs, tol):
    lo, hi = np.asarray(p["lo"]), np.asarray(p["hi"])
    box = _box(lo, hi, xs, tol)
    axis_pt = (lo[:-1] + hi[:-1]) / 2
    tip = hi[-1] - p["depth"]
    rho = np.sqrt(sum((x - c) ** 2 for x, c in zip(xs[:-1], axis_pt)))
    height = np.maximum(xs[-1] - tip, 0.0)
    spike = (xs[-1] >= tip) & (rho <= p["coef"] * height ** p["power"] + tol)
    return box & ~spike


_CONTAINS = {
    "disk": _contains_disk,
    "rectangle": _contains_rectangle,
    "annulus": _contains_shell,
    "ball_in_ball_shell": _contains_shell,
    "dumbbell": _contains_dumbbell,
    "square_with_tentacle": _contains_tentacle,
    "polygon": _contains_polygon,
    "cusp_box": _contains_cusp_box,
}
