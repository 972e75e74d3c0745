"""Grid-rasterized domains and their morphology.

Sets live on the nodes of a uniform grid: node ``i`` along an axis sits at
``origin + i*h``.  A node belongs to a set when it is inside the continuum
shape.  Dilation and erosion use strict inequalities evaluated at nodes, and
the discrete closure of a mask is the mask together with its 8-neighbourhood
(3**n - 1 neighbours in n dimensions).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, Delaunay, QhullError

from .errors import (ArgumentError, DomainEmptyError, GeometryError,
                     PreconditionError, ResolutionError)
from .shapes import ShapeSpec


def _face_structure(ndim):
    return ndimage.generate_binary_structure(ndim, 1)


def _full_structure(ndim):
    return ndimage.generate_binary_structure(ndim, ndim)


def _ring(shape):
    ring = np.zeros(shape, bool)
    for ax in range(len(shape)):
        sl = [slice(None)] * len(shape)
        sl[ax] = 0
        ring[tuple(sl)] = True
        sl[ax] = -1
        ring[tuple(sl)] = True
    return ring


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Boolean interior mask on a uniform grid.

    ``source`` and ``box`` record how the mask was rasterized so that
    :meth:`refined` can rebuild it at half the spacing.
    """

    h: float
    origin: tuple
    interior: np.ndarray
    source: ShapeSpec | None = None
    box: tuple | None = None

    def __post_init__(self):
        mask = np.array(self.interior, dtype=bool, copy=True)
        if not self.h > 0:
            raise ArgumentError(f"grid spacing must be positive, got {self.h}")
        if mask.ndim < 1 or min(mask.shape) < 3:
            raise ArgumentError(f"grid dims must be >= 3 in every direction, got {mask.shape}")
        if len(self.origin) != mask.ndim:
            raise ArgumentError("origin dimension does not match the mask")
        if np.any(mask & _ring(mask.shape)):
            raise GeometryError("the outermost ring of the grid must be exterior")
        mask.setflags(write=False)
        object.__setattr__(self, "interior", mask)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    # --- geometry of the grid -------------------------------------------
    @property
    def dims(self) -> tuple:
        return self.interior.shape

    @property
    def ndim(self) -> int:
        return self.interior.ndim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.ndim

    @property
    def count(self) -> int:
        return int(self.interior.sum())

    @property
    def is_empty(self) -> bool:
        return not self.interior.any()

    def measure(self) -> float:
        return self.count * self.cell_volume

    def axes(self) -> list[np.ndarray]:
        out = []
        for o, n in zip(self.origin, self.dims):
            k = round(o / self.h)
            if abs(k * self.h - o) <= 1e-12 * max(1.0, abs(o)):
                out.append((k + np.arange(n)) * self.h)
            else:
                out.append(o + np.arange(n) * self.h)
        return out

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij", sparse=True)

    def node(self, index) -> np.ndarray:
        return np.array([a[i] for a, i in zip(self.axes(), index)])

    def same_grid(self, other: "GridDomain") -> bool:
        return (self.dims == other.dims and self.h == other.h
                and self.origin == other.origin)

    def require_same_grid(self, other: "GridDomain"):
        if not self.same_grid(other):
            raise GeometryError("domains live on incomparable grids "
                                f"(h {self.h} vs {other.h}, dims {self.dims} vs {other.dims})")

    def with_mask(self, mask: np.ndarray) -> "GridDomain":
        return GridDomain(self.h, self.origin, mask)

    def subset_of(self, other: "GridDomain") -> bool:
        self.require_same_grid(other)
        return not np.any(self.interior & ~other.interior)

    def equals(self, other: "GridDomain") -> bool:
        self.require_same_grid(other)
        return bool(np.array_equal(self.interior, other.interior))

    def intersect(self, other: "GridDomain") -> "GridDomain":
        self.require_same_grid(other)
        return self.with_mask(self.interior & other.interior)

    def union(self, other: "GridDomain") -> "GridDomain":
        self.require_same_grid(other)
        return self.with_mask(self.interior | other.interior)

    def refined(self) -> "GridDomain":
        """Re-rasterize the source shape at spacing h/2 over the same box."""
        if self.source is None or self.box is None:
            raise GeometryError("domain has no source shape; cannot refine")
        return rasterize(self.source, self.h / 2, self.box)


def rasterize(spec: ShapeSpec, h: float, box) -> GridDomain:
    """Rasterize ``spec`` on the grid of spacing ``h`` covering ``box``.

    ``box`` is ``(lo, hi)``; the grid origin is snapped to a multiple of
    ``h`` so that grids at h and h/2 share their nodes.
    """
    lo, hi = (np.atleast_1d(np.asarray(b, float)) for b in box)
    if lo.shape != (spec.ndim,) or hi.shape != (spec.ndim,):
        raise ArgumentError(f"box must have {spec.ndim} coordinates per corner")
    if not h > 0:
        raise ArgumentError("h must be positive")
    ilo = np.floor(lo / h + 1e-9).astype(int)
    ihi = np.ceil(hi / h - 1e-9).astype(int)
    slo, shi = spec.bbox()
    if np.any(slo - 2 * h < ilo * h - 1e-12 * h) or np.any(shi + 2 * h > ihi * h + 1e-12 * h):
        raise GeometryError(f"shape {spec.kind} inflated by 2h does not fit in box {box}")
    dims = tuple(int(n) for n in ihi - ilo + 1)
    xs = np.meshgrid(*[(o + np.arange(n)) * h for o, n in zip(ilo, dims)],
                     indexing="ij", sparse=True)
    mask = np.broadcast_to(spec.contains(xs, tol=1e-9 * h), dims)
    if not mask.any():
        raise ResolutionError(f"h={h} too coarse: no interior node for {spec.kind}")
    box_t = (tuple(lo.tolist()), tuple(hi.tolist()))
    return GridDomain(h, tuple((ilo * h).tolist()), mask, source=spec, box=box_t)


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Euclidean distance from each node to the nearest node of a target set."""

    h: float
    origin: tuple
    d: np.ndarray
    target_empty: bool = False

    def max(self) -> float:
        return float(self.d.max())


def distance_transform(dom: GridDomain, mode: str = "to_complement") -> DistanceField:
    """Exact Euclidean distance transform of the mask.

    ``to_set`` measures the distance to the nearest interior node,
    ``to_complement`` the distance to the nearest exterior node (the interior
    distance-to-boundary).  An empty target gives +inf everywhere with
    ``target_empty`` set.
    """
    if mode == "to_set":
        target = dom.interior
    elif mode == "to_complement":
        target = ~dom.interior
    else:
        raise ArgumentError(f"unknown mode {mode!r}")
    if not target.any():
        d = np.full(dom.dims, np.inf)
        return DistanceField(dom.h, dom.origin, d, target_empty=True)
    d = ndimage.distance_transform_edt(~target) * dom.h
    return DistanceField(dom.h, dom.origin, d)


def morph(dom: GridDomain, eps: float, direction: str) -> GridDomain:
    """Thickening (``dilate``) or contraction (``erode``) by ``eps``."""
    if eps < 0:
        raise ArgumentError("eps must be >= 0")
    if direction not in ("dilate", "erode"):
        raise ArgumentError(f"unknown direction {direction!r}")
    if eps == 0 or dom.is_empty:
        return dom.with_mask(dom.interior)
    if direction == "dilate":
        mask = distance_transform(dom, "to_set").d < eps
        if np.any(mask & _ring(dom.dims)):
            raise GeometryError(f"dilation by {eps} leaves the grid box",
                                needed_margin=eps + 3 * dom.h)
        return dom.with_mask(mask)
    mask = dom.interior & (distance_transform(dom, "to_complement").d > eps)
    return dom.with_mask(mask)


def closure_mask(dom: GridDomain) -> np.ndarray:
    """Mask of the discrete closure: the set plus its full neighbourhood."""
    return ndimage.binary_dilation(dom.interior, structure=_full_structure(dom.ndim))


def set_difference_closed(outer: GridDomain, inner: GridDomain) -> GridDomain:
    """Nodes of ``outer`` outside the discrete closure of ``inner``."""
    outer.require_same_grid(inner)
    if not inner.subset_of(outer):
        raise GeometryError("inner domain is not contained in the outer domain")
    return outer.with_mask(outer.interior & ~closure_mask(inner))


def inradius(dom: GridDomain) -> float:
    if dom.is_empty:
        raise DomainEmptyError("inradius of an empty domain")
    return distance_transform(dom, "to_complement").max()


def inscribed_center(dom: GridDomain) -> tuple[np.ndarray, float]:
    """Node realizing the inradius and the radius itself."""
    if dom.is_empty:
        raise DomainEmptyError("inscribed ball of an empty domain")
    d = distance_transform(dom, "to_complement").d
    idx = np.unravel_index(int(np.argmax(d)), d.shape)
    return dom.node(idx), float(d[idx])


def boundary_cell_count(dom: GridDomain) -> int:
    inner = ndimage.binary_erosion(dom.interior, structure=_face_structure(dom.ndim))
    return int((dom.interior & ~inner).sum())


def convex_hull_mask(dom: GridDomain) -> np.ndarray:
    """Nodes inside the convex hull of the interior nodes."""
    idx = np.argwhere(dom.interior)
    out = np.zeros(dom.dims, bool)
    lo, hi = idx.min(axis=0), idx.max(axis=0)
    window = tuple(slice(a, b + 1) for a, b in zip(lo, hi))
    if dom.ndim == 1:
        out[window] = True
        return out
    try:
        hull = ConvexHull(idx)
    except QhullError:
        # flat point set; its hull is the set of nodes on the segment/plane
        out[dom.interior] = True
        return out
    tri = Delaunay(idx[hull.vertices])
    sub = np.stack(np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)],
                               indexing="ij"), axis=-1).reshape(-1, dom.ndim)
    inside = tri.find_simplex(sub, tol=1e-9) >= 0
    out[window] = inside.reshape(tuple(b - a + 1 for a, b in zip(lo, hi)))
    return out


def is_convex(dom: GridDomain, tol_cells: int | None = None) -> bool:
    """Whether the mask matches its rasterized convex hull.

    The default tolerance is ceil(0.02 * perimeter/h), with the perimeter
    measured by the number of boundary nodes.
    """
    if dom.is_empty:
        raise DomainEmptyError("convexity of an empty domain")
    if component_count(dom) != 1:
        return False
    if tol_cells is None:
        tol_cells = math.ceil(0.02 * boundary_cell_count(dom))
    extra = convex_hull_mask(dom) & ~dom.interior
    return int(extra.sum()) <= tol_cells


def rolling_ball_check(dom: GridDomain, eps: float) -> bool:
    """True iff erode(dilate(dom, eps), eps) stays inside the closure of dom."""
    if eps == 0:
        return True
    back = morph(morph(dom, eps, "dilate"), eps, "erode")
    return not np.any(back.interior & ~closure_mask(dom))


def component_count(dom: GridDomain) -> int:
    """Face-connected components of the mask."""
    _, n = ndimage.label(dom.interior, structure=_face_structure(dom.ndim))
    return int(n)


def complement_component_count(dom: GridDomain) -> int:
    """Fully-connected components of the complement within the grid box."""
    _, n = ndimage.label(~dom.interior, structure=_full_structure(dom.ndim))
    return int(n)


def homothety_mask(dom: GridDomain, center: Sequence[float], factor: float) -> np.ndarray:
    """Image of the mask under the homothety of ``factor`` about ``center``.

    A node y is in the image when the node nearest to center + (y-center)/factor
    is interior.
    """
    center = np.asarray(center, float)
    idx = []
    for ax, (a, c, o) in enumerate(zip(dom.axes(), center, dom.origin)):
        pre = c + (a - c) / factor
        idx.append(np.rint((pre - o) / dom.h).astype(int))
    grids = np.meshgrid(*idx, indexing="ij")
    valid = np.ones(dom.dims, bool)
    for g, n in zip(grids, dom.dims):
        valid &= (g >= 0) & (g < n)
    clipped = [np.clip(g, 0, n - 1) for g, n in zip(grids, dom.dims)]
    return valid & dom.interior[tuple(clipped)]


def convex_homothety_check(dom: GridDomain, eps: float) -> bool:
    """Check that dilate(dom, eps) lies in the homothetic copy of factor 1+eps/r0."""
    if not is_convex(dom):
        raise PreconditionError("homothety check needs a convex domain")
    center, r0 = inscribed_center(dom)
    image = homothety_mask(dom, center, 1.0 + eps / r0)
    image = ndimage.binary_dilation(image, structure=_full_structure(dom.ndim))
    dil = morph(dom, eps, "dilate")
    return not np.any(dil.interior & ~image)


def write_pgm(dom: GridDomain, path) -> None:
    """Binary PGM (P5) dump of a 2-D mask: 0 exterior, 255 interior.

    Image rows run from the largest y down, columns along x.
    """
    if dom.ndim != 2:
        raise ArgumentError("PGM export needs a 2-D domain")
    img = np.where(dom.interior.T[::-1], 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read back a mask written by :func:`write_pgm` (x-major orientation)."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(\S+)").match(data, pos)
        if m is None:
            raise ArgumentError("truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise ArgumentError("not a binary PGM file")
    width, height = int(tokens[1]), int(tokens[2])
    raw = data[pos + 1: pos + 1 + width * height]
    img = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    return img[::-1].T > 127
