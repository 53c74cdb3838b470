"""Quadrature on interior cells, cut cells and boundary curves."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .domain import CellClass
from .errors import UnparameterizedBoundary


class RuleKind(enum.Enum):
    INTERIOR_GAUSS = "interior"
    CUT_CELL = "cut"
    BOUNDARY_CURVE = "boundary"
    MIXED = "mixed"


@dataclass
class QuadratureRule:
    """Points, positive weights and the grid cell of every point.

    Boundary rules also carry outward ``normals``.
    """

    points: np.ndarray
    weights: np.ndarray
    cells: np.ndarray
    kind: RuleKind
    normals: np.ndarray | None = None

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def restrict(self, mask):
        return QuadratureRule(self.points[mask], self.weights[mask], self.cells[mask], self.kind,
                              None if self.normals is None else self.normals[mask])

    @staticmethod
    def concatenate(rules, kind=RuleKind.MIXED):
        rules = [r for r in rules if len(r)]
        if not rules:
            return QuadratureRule(np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2), int), kind)
        normals = None
        if all(r.normals is not None for r in rules):
            normals = np.concatenate([r.normals for r in rules])
        return QuadratureRule(np.concatenate([r.points for r in rules]),
                              np.concatenate([r.weights for r in rules]),
                              np.concatenate([r.cells for r in rules]), kind, normals)


def gauss_box(lo, hi, q):
    """Tensor Gauss-Legendre rule with `q` points per axis on ``[lo, hi]``."""
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    t, w = np.polynomial.legendre.leggauss(q)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    m = lo.size
    pts = np.array(list(itertools.product(t, repeat=m)))
    wts = np.prod(np.array(list(itertools.product(w, repeat=m))), axis=1)
    return lo + pts * (hi - lo), wts * np.prod(hi - lo)


def cell_quadrature(cell, tag, domain, h, q=3, depth=4):
    """Quadrature rule for grid cell `cell` with classification `tag`.

    Interior cells get a tensor Gauss rule with `q` points per axis.
    Boundary cells are split dyadically up to `depth` levels: sub-cells
    inside the domain get the Gauss rule, sub-cells outside are dropped and
    straddling sub-cells at the last level contribute their centroid if it
    lies inside.
    """
    cell = np.atleast_1d(np.asarray(cell, int))
    tag = CellClass(tag)
    if tag == CellClass.EXTERIOR:
        raise ValueError(f"cell {tuple(cell)} is exterior; nothing to integrate")
    lo, hi = h * cell, h * (cell + 1.0)
    if tag == CellClass.INTERIOR:
        pts, wts = gauss_box(lo, hi, q)
        kind = RuleKind.INTERIOR_GAUSS
    else:
        pts, wts = _cut_cell(domain, lo, hi, q, depth)
        kind = RuleKind.CUT_CELL
    cells = np.broadcast_to(cell, pts.shape).copy()
    return QuadratureRule(pts, wts, cells, kind)


def _cut_cell(domain, lo, hi, q, depth):
    m = lo.size
    pts, wts = [], []
    stack = [(lo, hi, 0)]
    halves = np.array(list(itertools.product((0, 1), repeat=m)))
    while stack:
        a, b, d = stack.pop()
        status = domain.box_status(a, b)
        if status == CellClass.EXTERIOR:
            continue
        if status == CellClass.INTERIOR:
            p, w = gauss_box(a, b, q)
            pts.append(p)
            wts.append(w)
        elif d == depth:
            c = 0.5 * (a + b)
            if domain.inside(c[None])[0]:
                pts.append(c[None])
                wts.append(np.array([np.prod(b - a)]))
        else:
            mid = 0.5 * (a + b)
            for s in halves:
                stack.append((np.where(s, mid, a), np.where(s, b, mid), d + 1))
    if not pts:
        return np.zeros((0, m)), np.zeros(0)
    return np.concatenate(pts), np.concatenate(wts)


def domain_quadrature(cells, domain, q=3, depth=4):
    """Concatenated rule over all non-exterior cells of a cell map."""
    h = cells.h
    rules = []
    interior = cells.cells(CellClass.INTERIOR)
    if len(interior):
        p1, w1 = gauss_box(np.zeros(domain.dim), np.full(domain.dim, h), q)
        pts = (h * interior)[:, None, :] + p1[None]
        rules.append(QuadratureRule(pts.reshape(-1, domain.dim), np.tile(w1, len(interior)),
                                    np.repeat(interior, len(w1), axis=0), RuleKind.INTERIOR_GAUSS))
    for l in cells.cells(CellClass.BOUNDARY):
        rules.append(cell_quadrature(l, CellClass.BOUNDARY, domain, h, q, depth))
    return QuadratureRule.concatenate(rules)


def boundary_quadrature(part, domain, h, q=3):
    """Composite Gauss rule along every boundary piece of the given part.

    Each piece is split at its crossings with grid lines, so every
    intersected cell receives `q` points per crossing arc.  Returns an
    empty rule when the part is empty.
    """
    rules = []
    for piece in domain.pieces_of(part):
        if not all(hasattr(piece, a) for a in ("point", "outward_normal", "speed", "breakpoints")):
            raise UnparameterizedBoundary(f"cannot integrate over boundary piece {piece!r}")
        if piece.kind == "point":
            t = np.zeros(1)
            wt = np.ones(1)
        else:
            br = piece.breakpoints(h)
            g, gw = np.polynomial.legendre.leggauss(q)
            a, b = br[:-1, None], br[1:, None]
            t = (0.5 * (b - a) * (g + 1.0) + a).ravel()
            wt = (0.5 * (b - a) * gw).ravel() * piece.speed(t)
        x = piece.point(t)
        nu = piece.outward_normal(t)
        # nudge inward so that points on grid lines get the cell inside
        cells = np.floor((x - 1e-9 * h * nu) / h).astype(int)
        rules.append(QuadratureRule(x, wt, cells, RuleKind.BOUNDARY_CURVE, nu))
    if not rules:
        return QuadratureRule(np.zeros((0, domain.dim)), np.zeros(0), np.zeros((0, domain.dim), int),
                              RuleKind.BOUNDARY_CURVE, np.zeros((0, domain.dim)))
    return QuadratureRule.concatenate(rules, RuleKind.BOUNDARY_CURVE)
