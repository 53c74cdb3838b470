"""Implicit domains, grid-cell classification and relevant/inner/outer indices.

A domain is described by a vectorized ``inside`` predicate, a bounding box and
a list of parameterized boundary pieces.  Every piece carries the boundary
part it belongs to: 1 (Dirichlet), 2 (Neumann) or 3 (Robin).

Grid cells are ``Q_l = h([0, 1]^m + l)``.  A cell is *interior* if it lies in
the closed domain, *exterior* if it misses the open domain and *boundary*
otherwise.  The B-spline ``b_k`` is *relevant* if it is nonzero somewhere in
the domain, *inner* if its support contains an interior cell, *outer* if it
is relevant but not inner.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDomain, UnparameterizedBoundary

DIRICHLET, NEUMANN, ROBIN = 1, 2, 3


class CellClass(enum.IntEnum):
    EXTERIOR = 0
    BOUNDARY = 1
    INTERIOR = 2


# --------------------------------------------------------------------------
# boundary pieces
# --------------------------------------------------------------------------

class BoundaryPiece:
    """A parameterized piece of the boundary.

    Subclasses implement ``point(t)``, ``normal(t)``, ``speed(t)``, the
    parameter range ``(t0, t1)``, ``distance(x)`` and ``breakpoints(h)``
    (parameters where the piece crosses grid lines).
    """

    name: str
    part: int
    kind: str

    def breakpoints(self, h):
        raise NotImplementedError

    def primitive(self, x):
        """Signed-distance-like factor: 0 on the piece, > 0 inside the domain.

        Returns ``(value, gradient, hessian)`` at points `x`.
        """
        raise NotImplementedError


@dataclass
class Segment(BoundaryPiece):
    """Straight segment from `start` to `end` with outward unit `normal`."""

    name: str
    start: tuple
    end: tuple
    normal: tuple
    part: int = DIRICHLET
    kind: str = field(default="line", init=False)

    def __post_init__(self):
        self.start = np.asarray(self.start, float)
        self.end = np.asarray(self.end, float)
        self.normal = np.asarray(self.normal, float)
        self.normal = self.normal / np.linalg.norm(self.normal)
        self.t0, self.t1 = 0.0, 1.0

    def point(self, t):
        t = np.asarray(t, float)[..., None]
        return self.start + t * (self.end - self.start)

    def outward_normal(self, t):
        return np.broadcast_to(self.normal, np.shape(t) + (self.normal.size,))

    def speed(self, t):
        return np.full(np.shape(t), np.linalg.norm(self.end - self.start))

    @property
    def length(self):
        return float(np.linalg.norm(self.end - self.start))

    def distance(self, x):
        x = np.atleast_2d(x)
        d = self.end - self.start
        t = np.clip((x - self.start) @ d / (d @ d), 0.0, 1.0)
        return np.linalg.norm(x - self.point(t), axis=-1)

    def breakpoints(self, h):
        ts = [0.0, 1.0]
        d = self.end - self.start
        for mu in range(d.size):
            if d[mu] == 0:
                continue
            lo, hi = sorted((self.start[mu], self.end[mu]))
            for k in range(int(np.ceil(lo / h)), int(np.floor(hi / h)) + 1):
                t = (k * h - self.start[mu]) / d[mu]
                if 0.0 < t < 1.0:
                    ts.append(t)
        return np.unique(ts)

    def primitive(self, x):
        x = np.atleast_2d(x)
        val = -(x - self.start) @ self.normal
        grad = np.broadcast_to(-self.normal, x.shape)
        hess = np.zeros(x.shape + (x.shape[-1],))
        return val, grad, hess


@dataclass
class Arc(BoundaryPiece):
    """Circular arc ``center + radius (cos t, sin t)``, ``t0 <= t <= t1``.

    ``side = +1`` when the domain lies inside the circle (outward normal is
    radial), ``-1`` when it lies outside.
    """

    name: str
    center: tuple
    radius: float
    t0: float
    t1: float
    side: int = 1
    part: int = DIRICHLET
    kind: str = field(default="circle", init=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, float)

    def point(self, t):
        t = np.asarray(t, float)
        return self.center + self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def outward_normal(self, t):
        t = np.asarray(t, float)
        return self.side * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def speed(self, t):
        return np.full(np.shape(t), float(self.radius))

    @property
    def length(self):
        return float(self.radius * (self.t1 - self.t0))

    def distance(self, x):
        x = np.atleast_2d(x) - self.center
        ang = np.arctan2(x[:, 1], x[:, 0])
        on_arc = (ang >= self.t0 - 1e-14) & (ang <= self.t1 + 1e-14)
        d_circle = np.abs(np.linalg.norm(x, axis=-1) - self.radius)
        ends = np.stack([self.point(self.t0), self.point(self.t1)]) - self.center
        d_ends = np.min(np.linalg.norm(x[:, None, :] - ends[None], axis=-1), axis=1)
        return np.where(on_arc, d_circle, d_ends)

    def breakpoints(self, h):
        ts = [self.t0, self.t1]
        r = self.radius
        for mu, fn in ((0, np.arccos), (1, np.arcsin)):
            c = self.center[mu]
            for k in range(int(np.floor((c - r) / h)), int(np.ceil((c + r) / h)) + 1):
                s = (k * h - c) / r
                if abs(s) > 1:
                    continue
                base = fn(s)
                cands = (base, -base, 2 * np.pi - base) if mu == 0 else (base, np.pi - base, base + 2 * np.pi)
                for t in cands:
                    if self.t0 < t < self.t1:
                        ts.append(t)
        return np.unique(ts)

    def primitive(self, x):
        x = np.atleast_2d(x)
        y = x - self.center
        r2 = np.sum(y * y, axis=-1)
        s = self.side / (2.0 * self.radius)
        val = s * (self.radius**2 - r2)
        grad = -2.0 * s * y
        hess = np.broadcast_to(-2.0 * s * np.eye(x.shape[-1]), x.shape + (x.shape[-1],)).copy()
        return val, grad, hess


@dataclass
class EndPoint(BoundaryPiece):
    """Boundary point of a one-dimensional interval."""

    name: str
    x0: float
    normal: float
    part: int = DIRICHLET
    kind: str = field(default="point", init=False)

    def __post_init__(self):
        self.t0, self.t1 = 0.0, 0.0

    def point(self, t):
        return np.full(np.shape(t) + (1,), float(self.x0))

    def outward_normal(self, t):
        return np.full(np.shape(t) + (1,), float(self.normal))

    def speed(self, t):
        return np.ones(np.shape(t))

    @property
    def length(self):
        return 0.0

    def distance(self, x):
        return np.abs(np.atleast_2d(x)[:, 0] - self.x0)

    def breakpoints(self, h):
        return np.array([0.0])

    def primitive(self, x):
        x = np.atleast_2d(x)
        val = -(x[:, 0] - self.x0) * self.normal
        grad = np.full(x.shape, -float(self.normal))
        return val, grad, np.zeros(x.shape + (1,))


# --------------------------------------------------------------------------
# domains
# --------------------------------------------------------------------------

class Domain:
    """Base class for implicit domains.

    Subclasses define ``dim``, ``bbox`` (pair of arrays), ``inside(x)`` for
    the closed domain and ``pieces``.  ``box_status(lo, hi)`` may be
    overridden with an exact test; the default samples a lattice.
    """

    name = "domain"
    dim = 2
    lattice = 5

    def inside(self, x):
        raise NotImplementedError

    @property
    def area(self):
        return None

    def box_status(self, lo, hi):
        """Classify the box ``[lo, hi]`` by sampling ``inside`` on a lattice."""
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        s = np.linspace(0.0, 1.0, self.lattice)
        pts = np.array(list(itertools.product(s, repeat=self.dim)))
        flags = self.inside(lo + pts * (hi - lo))
        if flags.all():
            return CellClass.INTERIOR
        if not flags.any():
            return CellClass.EXTERIOR
        return CellClass.BOUNDARY

    def boundary_part(self, x, tol=1e-9):
        """Boundary part (1, 2, 3) of each point in `x`; 0 if off the boundary.

        A point shared by two pieces (a corner) goes to the lowest part
        number, so Dirichlet wins at junctions.
        """
        x = np.atleast_2d(np.asarray(x, float))
        out = np.zeros(x.shape[0], dtype=int)
        for piece in sorted(self.pieces, key=lambda p: -p.part):
            hit = piece.distance(x) <= tol
            out[hit] = piece.part
        return out

    def pieces_of(self, part):
        return [p for p in self.pieces if p.part == part]

    def parts_present(self):
        return sorted({p.part for p in self.pieces if p.length > 0 or p.kind == "point"})


class Interval(Domain):
    """The interval ``(a, b)``; both end points are Dirichlet by default."""

    dim = 1

    def __init__(self, a=0.0, b=1.0, parts=(DIRICHLET, DIRICHLET), name="interval"):
        self.a, self.b = float(a), float(b)
        self.name = name
        self.bbox = (np.array([a]), np.array([b]))
        self.pieces = [EndPoint("left", a, -1.0, parts[0]), EndPoint("right", b, 1.0, parts[1])]

    def inside(self, x):
        x = np.atleast_2d(x)[:, 0]
        return (x >= self.a) & (x <= self.b)

    @property
    def area(self):
        return self.b - self.a

    def box_status(self, lo, hi):
        lo, hi = float(lo[0]), float(hi[0])
        if hi <= self.a or lo >= self.b:
            return CellClass.EXTERIOR
        if lo >= self.a and hi <= self.b:
            return CellClass.INTERIOR
        return CellClass.BOUNDARY


class Rectangle(Domain):
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]``.

    `parts` maps the side names ``left, right, bottom, top`` to boundary
    parts.
    """

    def __init__(self, x0=0.0, x1=1.0, y0=0.0, y1=1.0, parts=None, name="rectangle"):
        self.lo = np.array([x0, y0], float)
        self.hi = np.array([x1, y1], float)
        self.bbox = (self.lo.copy(), self.hi.copy())
        self.name = name
        parts = {"left": 1, "right": 1, "bottom": 1, "top": 1, **(parts or {})}
        self.pieces = [
            Segment("bottom", (x0, y0), (x1, y0), (0, -1), parts["bottom"]),
            Segment("right", (x1, y0), (x1, y1), (1, 0), parts["right"]),
            Segment("top", (x1, y1), (x0, y1), (0, 1), parts["top"]),
            Segment("left", (x0, y1), (x0, y0), (-1, 0), parts["left"]),
        ]

    def inside(self, x):
        x = np.atleast_2d(x)
        return np.all((x >= self.lo) & (x <= self.hi), axis=-1)

    @property
    def area(self):
        return float(np.prod(self.hi - self.lo))

    def box_status(self, lo, hi):
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        if np.any(hi <= self.lo) or np.any(lo >= self.hi):
            return CellClass.EXTERIOR
        if np.all(lo >= self.lo) and np.all(hi <= self.hi):
            return CellClass.INTERIOR
        return CellClass.BOUNDARY


class QuarterAnnulus(Domain):
    """``{r_in <= |x| <= r_out, x >= 0, y >= 0}``; ``r_in = 0`` gives a quarter disk.

    Boundary pieces are named ``x=0``, ``y=0``, ``outer`` and (if
    ``r_in > 0``) ``inner``.
    """

    def __init__(self, r_in=0.0, r_out=1.0, parts=None, name=None):
        self.r_in, self.r_out = float(r_in), float(r_out)
        self.name = name or ("quarter_disk" if r_in == 0 else "quarter_annulus")
        self.bbox = (np.zeros(2), np.full(2, self.r_out))
        parts = {"x=0": 1, "y=0": 1, "outer": 1, "inner": 1, **(parts or {})}
        r0, r1 = self.r_in, self.r_out
        self.pieces = [
            Segment("y=0", (r0, 0.0), (r1, 0.0), (0, -1), parts["y=0"]),
            Arc("outer", (0.0, 0.0), r1, 0.0, np.pi / 2, +1, parts["outer"]),
            Segment("x=0", (0.0, r1), (0.0, r0), (-1, 0), parts["x=0"]),
        ]
        if r0 > 0:
            self.pieces.append(Arc("inner", (0.0, 0.0), r0, 0.0, np.pi / 2, -1, parts["inner"]))

    def inside(self, x):
        x = np.atleast_2d(x)
        r2 = np.sum(x * x, axis=-1)
        return (x[:, 0] >= 0) & (x[:, 1] >= 0) & (r2 <= self.r_out**2) & (r2 >= self.r_in**2)

    @property
    def area(self):
        return np.pi / 4 * (self.r_out**2 - self.r_in**2)

    def box_status(self, lo, hi):
        lo0 = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        if np.any(hi <= 0.0):
            return CellClass.EXTERIOR
        lo = np.maximum(lo0, 0.0)
        # radii over the part of the box inside the first quadrant
        rmin, rmax = float(np.hypot(*lo)), float(np.hypot(*hi))
        if rmin >= self.r_out or rmax <= self.r_in:
            return CellClass.EXTERIOR
        if np.all(lo0 >= 0.0) and rmax <= self.r_out and rmin >= self.r_in:
            return CellClass.INTERIOR
        return CellClass.BOUNDARY


# --------------------------------------------------------------------------
# classification and index sets
# --------------------------------------------------------------------------

@dataclass
class CellMap:
    """Classification of the grid cells covering a padded bounding box.

    ``status[idx]`` is the :class:`CellClass` value of cell
    ``l = lmin + idx``.
    """

    h: float
    lmin: np.ndarray
    status: np.ndarray

    def __getitem__(self, l):
        idx = tuple(np.asarray(l) - self.lmin)
        if any(i < 0 or i >= s for i, s in zip(idx, self.status.shape)):
            return CellClass.EXTERIOR
        return CellClass(int(self.status[idx]))

    def cells(self, tag):
        """Multi-indices of all cells with the given tag, lexicographic order."""
        return np.argwhere(self.status == int(tag)) + self.lmin

    def active_cells(self):
        return np.argwhere(self.status != int(CellClass.EXTERIOR)) + self.lmin


def classify_cells(domain, h, n=3):
    """Tag every grid cell of width `h` in the bounding box padded by ``n h``.

    Raises
    ------
    DegenerateDomain
        If no cell is interior.
    """
    lo, hi = domain.bbox
    lmin = np.floor(lo / h).astype(int) - n
    lmax = np.ceil(hi / h).astype(int) + n
    shape = tuple(lmax - lmin)
    status = np.zeros(shape, dtype=np.int8)
    for idx in np.ndindex(*shape):
        l = lmin + np.array(idx)
        status[idx] = domain.box_status(h * l, h * (l + 1))
    if not np.any(status == CellClass.INTERIOR):
        raise DegenerateDomain(f"no interior cell for domain {domain.name!r} at h={h}")
    return CellMap(h, lmin, status)


@dataclass
class IndexSets:
    """Relevant (K), inner (I) and outer (J) B-spline indices.

    ``K`` is sorted lexicographically; ``inner`` is a boolean mask over it.
    For inner index ``I[r]``, ``cell_of_inner[r]`` is the chosen interior
    cell ``i + l(i)`` in its support and ``center_of_inner[r]`` its center.
    """

    n: int
    h: float
    K: np.ndarray
    inner: np.ndarray
    cell_of_inner: np.ndarray
    center_of_inner: np.ndarray
    position: dict

    @property
    def I(self):
        return self.K[self.inner]

    @property
    def J(self):
        return self.K[~self.inner]

    @property
    def inner_positions(self):
        return np.flatnonzero(self.inner)

    @property
    def outer_positions(self):
        return np.flatnonzero(~self.inner)


def build_index_sets(cells, n):
    """Derive K, I, J and the interior reference cells from a cell map."""
    h = cells.h
    m = cells.status.ndim
    shape = np.array(cells.status.shape)
    active = cells.status != CellClass.EXTERIOR
    interior = cells.status == CellClass.INTERIOR
    # index k (offset kmin) sees cells k..k+n-1; kmin = lmin - n + 1
    kshape = tuple(shape + n - 1)
    relevant = np.zeros(kshape, dtype=bool)
    has_inner = np.zeros(kshape, dtype=bool)
    for off in itertools.product(range(n), repeat=m):
        # cell l = k + off  <=>  array index of k = cell index + (n-1) - off
        sl = tuple(slice(n - 1 - o, n - 1 - o + s) for o, s in zip(off, shape))
        relevant[sl] |= active
        has_inner[sl] |= interior
    kmin = cells.lmin - n + 1
    K = np.argwhere(relevant) + kmin
    inner = has_inner[relevant]

    offsets = np.array(list(itertools.product(range(n), repeat=m)), dtype=int)
    I = K[inner]
    cell_of_inner = np.empty_like(I)
    for r, i in enumerate(I):
        for off in offsets:  # lexicographic: first hit is the smallest offset
            if cells[i + off] == CellClass.INTERIOR:
                cell_of_inner[r] = i + off
                break
    center = h * (cell_of_inner + 0.5)
    position = {tuple(k): p for p, k in enumerate(K.tolist())}
    return IndexSets(n, h, K, inner, cell_of_inner, center, position)


def quadrature_breakpoints(piece, h):
    """Parameter breakpoints of a boundary piece at grid lines of width `h`."""
    if not hasattr(piece, "breakpoints"):
        raise UnparameterizedBoundary(f"boundary piece {piece!r} has no parameterization")
    return piece.breakpoints(h)
