"""Weight functions, extension coefficients and weighted extended B-splines.

For an inner index ``i`` the WEB-spline is

    B_i = w / w(x_i) * (b_i + sum_j e_{i,j} b_j),

where the outer splines ``b_j`` are attached to the inner splines of a
closest ``n^m`` array ``I(j)`` of inner indices with Lagrange extrapolation
weights ``e_{i,j}``, and ``x_i`` is the center of an interior cell in the
support of ``b_i``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bspline import BSplineBasis
from .domain import DIRICHLET, CellClass, build_index_sets, classify_cells
from .errors import NoInnerArray, UnsupportedBoundary


# --------------------------------------------------------------------------
# weight functions
# --------------------------------------------------------------------------

class WeightFunction:
    """A weight ``w`` with value, gradient and Hessian at points ``(npts, m)``.

    ``dirichlet_order`` is the order to which ``w`` vanishes on the
    Dirichlet boundary.
    """

    dirichlet_order = 1

    def value(self, x):
        return self.evaluate(x)[0]

    def gradient(self, x):
        return self.evaluate(x)[1]

    def hessian(self, x):
        return self.evaluate(x)[2]

    def evaluate(self, x):
        """Return ``(value, gradient, hessian)``."""
        raise NotImplementedError


class UnitWeight(WeightFunction):
    """``w = 1``: no Dirichlet conditions are imposed."""

    dirichlet_order = 0

    def evaluate(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        m = x.shape[-1]
        return np.ones(len(x)), np.zeros(x.shape), np.zeros(x.shape + (m,))


class PrimitiveWeight(WeightFunction):
    """Distance-like factor of a single boundary piece (line, circle, point)."""

    def __init__(self, piece):
        self.piece = piece

    def evaluate(self, x):
        return self.piece.primitive(np.atleast_2d(np.asarray(x, float)))


class RConjunction(WeightFunction):
    """Rvachev conjunction ``a ^ b = a + b - sqrt(a^2 + b^2)`` of weights.

    The zero set of the result is the union of the zero sets of the
    operands (where both are nonnegative).  Several operands are folded
    from the left.
    """

    def __init__(self, *parts):
        if not parts:
            raise ValueError("RConjunction needs at least one operand")
        self.parts = parts

    def evaluate(self, x):
        v, g, H = self.parts[0].evaluate(x)
        for other in self.parts[1:]:
            v, g, H = _rconj(v, g, H, *other.evaluate(x))
        return v, g, H


def _rconj(a, ga, Ha, b, gb, Hb):
    s = np.sqrt(a * a + b * b)
    safe = np.where(s > 0, s, 1.0)
    q = a[:, None] * ga + b[:, None] * gb  # grad(s) * s
    val = a + b - s
    grad = ga + gb - q / safe[:, None]
    outer = (np.einsum("pi,pj->pij", ga, ga) + np.einsum("pi,pj->pij", gb, gb)
             + a[:, None, None] * Ha + b[:, None, None] * Hb)
    hess = Ha + Hb - outer / safe[:, None, None] + np.einsum("pi,pj->pij", q, q) / safe[:, None, None] ** 3
    return val, grad, hess


class ProductWeight(WeightFunction):
    """Product of weights; vanishes to the sum of the factor orders."""

    def __init__(self, *factors):
        self.factors = factors
        self.dirichlet_order = sum(f.dirichlet_order for f in factors)

    def evaluate(self, x):
        v, g, H = self.factors[0].evaluate(x)
        for f in self.factors[1:]:
            v2, g2, H2 = f.evaluate(x)
            H = (H * v2[:, None, None] + H2 * v[:, None, None]
                 + np.einsum("pi,pj->pij", g, g2) + np.einsum("pi,pj->pij", g2, g))
            g = g * v2[:, None] + g2 * v[:, None]
            v = v * v2
        return v, g, H


class AnnulusWeight(WeightFunction):
    """``w(x, y) = (x^2 + y^2 - r_in^2)(r_out^2 - x^2 - y^2)``.

    Positive strictly between the two circles and zero on both; the
    default radii give the quarter-annulus population preset.
    """

    def __init__(self, r_in=1.0, r_out=2.0):
        self.a = r_in**2
        self.b = r_out**2

    def evaluate(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        r2 = np.sum(x * x, axis=-1)
        p, q = r2 - self.a, self.b - r2
        v = p * q
        dv = q - p  # d w / d(r^2)
        g = 2.0 * dv[:, None] * x
        eye = np.eye(x.shape[-1])
        H = 2.0 * dv[:, None, None] * eye - 8.0 * np.einsum("pi,pj->pij", x, x)
        return v, g, H


_SUPPORTED_PRIMITIVES = ("line", "circle", "point")


def weight_rfunction(domain):
    """Weight vanishing on the Dirichlet part of `domain`.

    Every Dirichlet piece contributes its distance-like primitive; the
    primitives are joined by R-conjunction.  Neumann and Robin pieces get no
    factor.  A domain without Dirichlet pieces gets ``w = 1``.
    """
    factors = []
    for piece in domain.pieces:
        if piece.part != DIRICHLET:
            continue
        if getattr(piece, "kind", None) not in _SUPPORTED_PRIMITIVES:
            raise UnsupportedBoundary(f"no weight primitive for boundary piece {piece!r}")
        factors.append(PrimitiveWeight(piece))
    if not factors:
        return UnitWeight()
    return factors[0] if len(factors) == 1 else RConjunction(*factors)


# --------------------------------------------------------------------------
# extension coefficients
# --------------------------------------------------------------------------

def full_arrays(inner, n):
    """Bases ``alpha`` of all ``n^m`` index arrays contained in `inner`.

    `inner` is an iterable of integer multi-indices.
    """
    inner = np.asarray(list(inner), dtype=int)
    if inner.size == 0:
        return inner.reshape(0, 0)
    m = inner.shape[1]
    lo = inner.min(axis=0)
    grid = np.zeros(tuple(inner.max(axis=0) - lo + 1), dtype=bool)
    grid[tuple((inner - lo).T)] = True
    shape = np.array(grid.shape) - n + 1
    if np.any(shape <= 0):
        return np.zeros((0, m), dtype=int)
    ok = np.ones(tuple(shape), dtype=bool)
    for off in itertools.product(range(n), repeat=m):
        ok &= grid[tuple(slice(o, o + s) for o, s in zip(off, shape))]
    return np.argwhere(ok) + lo


def closest_index_array(j, inner, n, arrays=None):
    """Base ``alpha`` of a closest inner array ``I(j) = alpha + {0..n-1}^m``.

    Candidates are ranked by the Chebyshev distance from `j` to the array,
    then by the Euclidean distance from `j` to the array center, then
    lexicographically by ``alpha``.

    Raises
    ------
    NoInnerArray
        If `inner` contains no full ``n^m`` array.
    """
    j = np.asarray(j, dtype=int)
    if arrays is None:
        arrays = full_arrays(inner, n)
    if len(arrays) == 0:
        raise NoInnerArray(f"no {n}^{j.size} array of inner indices available for j={tuple(j)}")
    gap = np.maximum(np.maximum(arrays - j, j - (arrays + n - 1)), 0)
    cheb = gap.max(axis=1)
    center = np.sum((j - (arrays + (n - 1) / 2.0)) ** 2, axis=1)
    keys = [arrays[:, mu] for mu in reversed(range(arrays.shape[1]))] + [center, cheb]
    return arrays[np.lexsort(keys)[0]]


def lagrange_row(j, alpha, n):
    """1-D Lagrange cardinal values at `j` over nodes ``alpha..alpha+n-1``."""
    nodes = alpha + np.arange(n)
    out = np.ones(n)
    for a, i in enumerate(nodes):
        for l in nodes:
            if l != i:
                out[a] *= (j - l) / (i - l)
    return out


def extension_coeffs(j, alpha, n):
    """Extension coefficients ``e_{i,j}`` for ``i`` in the array at `alpha`.

    Returns ``(indices, coeffs)`` with ``indices`` of shape ``(n^m, m)`` in
    lexicographic order.
    """
    j = np.atleast_1d(np.asarray(j, dtype=int))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=int))
    rows = [lagrange_row(j[mu], alpha[mu], n) for mu in range(j.size)]
    offs = np.array(list(itertools.product(range(n), repeat=j.size)), dtype=int)
    coeffs = np.ones(len(offs))
    for mu, row in enumerate(rows):
        coeffs *= row[offs[:, mu]]
    return alpha + offs, coeffs


def extension_bound(n, m):
    """Bound ``((2n-1)! / ((n-1)!)^2)^m`` on ``|e_{i,j}|``."""
    from math import factorial
    return (factorial(2 * n - 1) / factorial(n - 1) ** 2) ** m


# --------------------------------------------------------------------------
# the basis
# --------------------------------------------------------------------------

@dataclass
class WebBasisFn:
    """A single WEB-spline; evaluation goes through the owning basis."""

    i: tuple
    x_i: np.ndarray
    outer_terms: list
    basis: "WebBasis" = field(repr=False)
    column: int = 0

    def value(self, x):
        return self.basis.eval_functions(x, [self.column])["value"][:, 0]

    def gradient(self, x):
        return self.basis.eval_functions(x, [self.column])["grad"][:, 0]


class WebBasis:
    """Weighted extended B-spline basis on a domain.

    Parameters
    ----------
    domain : Domain
    h : float
        Grid width.
    n : int
        Spline order.
    weight : WeightFunction, optional
        Defaults to :func:`weight_rfunction` of the domain.
    extended : bool
        If False, outer splines are kept as separate basis functions
        ``w b_j`` (no extension, no normalization by ``w(x_i)``).
    cells : CellMap, optional
        Reuse an existing classification.

    Attributes
    ----------
    T : scipy.sparse.csr_matrix
        ``|K| x N`` matrix mapping basis coefficients to coefficients of the
        weighted B-splines ``w b_k``: ``B_c = sum_k T[k, c] w b_k``.
    """

    def __init__(self, domain, h, n, weight=None, extended=True, cells=None):
        self.domain = domain
        self.h = float(h)
        self.n = int(n)
        self.dim = domain.dim
        self.bspline = BSplineBasis(self.n, self.h, self.dim)
        self.cells = cells if cells is not None else classify_cells(domain, self.h, self.n)
        self.index = build_index_sets(self.cells, self.n)
        self.weight = weight if weight is not None else weight_rfunction(domain)
        self.extended = extended
        self._build_extension()

    def _build_extension(self):
        idx = self.index
        nK = len(idx.K)
        if not self.extended:
            self.columns = np.arange(nK)
            self.T = sp.identity(nK, format="csr")
            self.E = self.T
            self.alpha = {}
            self.w_center = np.ones(nK)
            return
        I = idx.I
        inner_pos = idx.inner_positions
        col_of_pos = {int(p): c for c, p in enumerate(inner_pos)}
        rows, cols, vals = list(inner_pos), list(range(len(inner_pos))), [1.0] * len(inner_pos)
        arrays = full_arrays(I, self.n)
        self.alpha = {}
        for p in idx.outer_positions:
            j = idx.K[p]
            alpha = closest_index_array(j, I, self.n, arrays)
            self.alpha[tuple(j)] = alpha
            members, coeffs = extension_coeffs(j, alpha, self.n)
            for i, e in zip(members, coeffs):
                rows.append(int(p))
                cols.append(col_of_pos[idx.position[tuple(i)]])
                vals.append(e)
        self.columns = inner_pos
        self.E = sp.csr_matrix((vals, (rows, cols)), shape=(nK, len(inner_pos)))
        self.w_center = self.weight.value(idx.center_of_inner)
        if np.any(self.w_center <= 0):
            bad = idx.I[self.w_center <= 0]
            raise ValueError(f"weight not positive at reference cell centers of {bad.tolist()}")
        self.T = (self.E @ sp.diags(1.0 / self.w_center)).tocsr()

    def __len__(self):
        return self.T.shape[1]

    @property
    def size(self):
        return self.T.shape[1]

    def function(self, c):
        """The basis function in column `c` as a :class:`WebBasisFn`."""
        if not self.extended:
            k = tuple(self.index.K[c])
            return WebBasisFn(k, None, [], self, c)
        p = self.columns[c]
        col = self.E[:, c].tocoo()
        outer = [(tuple(self.index.K[r]), v) for r, v in zip(col.row, col.data) if r != p]
        return WebBasisFn(tuple(self.index.K[p]), self.index.center_of_inner[c], outer, self, c)

    def local(self, x, cells=None, derivatives=1):
        """Weighted B-splines ``w b_k`` active at points `x`.

        Returns a dict with ``pos`` (positions in K, -1 for irrelevant
        indices), ``value``, ``grad`` and optionally ``hess`` of ``w b_k``.
        """
        x = np.atleast_2d(np.asarray(x, float))
        loc = self.bspline.local(x, cells, derivatives)
        keys = loc["index"].reshape(-1, self.dim)
        pos = np.array([self.index.position.get(tuple(k), -1) for k in keys.tolist()])
        pos = pos.reshape(loc["value"].shape)
        w, gw, Hw = self.weight.evaluate(x)
        b = loc["value"]
        out = {"pos": pos, "value": w[:, None] * b}
        if derivatives >= 1:
            gb = loc["grad"]
            out["grad"] = gb * w[:, None, None] + b[..., None] * gw[:, None, :]
        if derivatives >= 2:
            Hb = loc["hess"]
            out["hess"] = (Hb * w[:, None, None, None] + b[..., None, None] * Hw[:, None]
                           + np.einsum("pki,pj->pkij", gb, gw) + np.einsum("pi,pkj->pkij", gw, gb))
        return out

    def eval_functions(self, x, columns=None, derivatives=1):
        """Dense values (and derivatives) of basis functions at points `x`."""
        loc = self.local(x, derivatives=derivatives)
        T = self.T if columns is None else self.T[:, columns]
        T = T.toarray()
        pos = loc["pos"]
        valid = pos >= 0
        Tl = np.where(valid[..., None], T[np.where(valid, pos, 0)], 0.0)  # (npts, nloc, ncols)
        res = {"value": np.einsum("pk,pkc->pc", loc["value"], Tl)}
        if derivatives >= 1:
            res["grad"] = np.einsum("pki,pkc->pci", loc["grad"], Tl)
        if derivatives >= 2:
            res["hess"] = np.einsum("pkij,pkc->pcij", loc["hess"], Tl)
        return res

    def field(self, coeffs):
        """The function ``sum_c coeffs[c] B_c`` as a :class:`SplineField`."""
        return SplineField(self, np.asarray(coeffs, float))


class SplineField:
    """A linear combination of basis functions, evaluable at arbitrary points."""

    def __init__(self, basis, coeffs):
        self.basis = basis
        self.coeffs = coeffs
        self.kcoeffs = basis.T @ coeffs

    def evaluate(self, x, derivatives=1, cells=None):
        loc = self.basis.local(x, cells, derivatives)
        pos = loc["pos"]
        d = np.where(pos >= 0, self.kcoeffs[np.where(pos >= 0, pos, 0)], 0.0)
        out = {"value": np.einsum("pk,pk->p", loc["value"], d)}
        if derivatives >= 1:
            out["grad"] = np.einsum("pki,pk->pi", loc["grad"], d)
        if derivatives >= 2:
            out["hess"] = np.einsum("pkij,pk->pij", loc["hess"], d)
        return out

    def __call__(self, x):
        return self.evaluate(x, 0)["value"]
