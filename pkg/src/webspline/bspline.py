"""Uniform (cardinal) B-splines and their tensor products.

The cardinal B-spline of order ``n`` is the piecewise polynomial of degree
``n - 1`` supported on ``[0, n)`` with integer knots.  Scaled translates on a
grid of width ``h`` are ``b_{k,h}(x) = b(x / h - k)``; in ``m`` variables the
basis function with multi-index ``k`` is the product over coordinates.

Intervals are half-open: the value at the right end of the support is 0 and
the right-continuous piece is used at interior knots.
"""
from __future__ import annotations

import itertools
from math import comb
from dataclasses import dataclass

import numpy as np


def eval_cardinal(n, x):
    """Evaluate the cardinal B-spline of order `n` at `x` (scalar or array).

    Uses the uniform-knot Cox-de Boor recurrence
    ``b_n(x) = (x b_{n-1}(x) + (n - x) b_{n-1}(x - 1)) / (n - 1)``.
    """
    if n < 1:
        raise ValueError(f"spline order must be >= 1, got {n}")
    x = np.asarray(x, dtype=float)
    # values of b_1(x - s) for the n unit shifts s = 0..n-1
    shifts = np.arange(n, dtype=float).reshape((n,) + (1,) * x.ndim)
    t = x - shifts
    vals = ((t >= 0.0) & (t < 1.0)).astype(float)
    for order in range(2, n + 1):
        # vals[s] holds b_{order-1}(x - s); combine neighbours in place
        t = x - shifts[: n - order + 1]
        vals = (t * vals[:-1] + (order - t) * vals[1:]) / (order - 1)
    out = vals[0]
    return out if out.ndim else float(out)


def eval_cardinal_derivative(n, x, nu=1):
    """Derivative of order `nu` of the cardinal B-spline of order `n`.

    Applies ``b_n' (x) = b_{n-1}(x) - b_{n-1}(x - 1)`` repeatedly, so the
    result is a signed binomial combination of shifted order ``n - nu``
    splines.  Derivatives of order ``nu >= n`` are zero almost everywhere.
    """
    x = np.asarray(x, dtype=float)
    if nu == 0:
        return eval_cardinal(n, x)
    if nu >= n:
        return np.zeros_like(x) if x.ndim else 0.0
    out = np.zeros_like(x)
    for s in range(nu + 1):
        coef = (-1) ** s * comb(nu, s)
        out = out + coef * eval_cardinal(n - nu, x - s)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BSplineBasis:
    """Tensor-product B-splines of order `n` on the grid ``h Z^dim``.

    Parameters
    ----------
    n : int
        Spline order (degree ``n - 1``), at least 2.
    h : float
        Grid width.
    dim : int
        Number of variables (1 or 2 are used in practice; any is accepted).
    normalized : bool
        Multiply every translate by ``h**(-dim/2)`` so that its L2 norm does
        not depend on `h`.
    """

    n: int
    h: float
    dim: int = 2
    normalized: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"spline order must be >= 2, got {self.n}")
        if not self.h > 0:
            raise ValueError(f"grid width must be positive, got {self.h}")
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")

    @property
    def scale(self):
        return self.h ** (-self.dim / 2) if self.normalized else 1.0

    def _check(self, k, x):
        k = np.asarray(k, dtype=int).reshape(-1)
        if k.size != self.dim:
            raise ValueError(f"multi-index {tuple(k)} has wrong length for dim={self.dim}")
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dim:
            raise ValueError(f"points must have trailing dimension {self.dim}")
        return k, x

    def value(self, k, x):
        """Value of ``b_k`` at point(s) `x` of shape ``(..., dim)``."""
        k, x = self._check(k, x)
        out = np.prod(eval_cardinal(self.n, x / self.h - k), axis=-1) * self.scale
        return out if np.ndim(out) else float(out)

    def gradient(self, k, x):
        """Gradient of ``b_k`` at point(s) `x`; shape ``(..., dim)``."""
        k, x = self._check(k, x)
        t = x / self.h - k
        v = eval_cardinal(self.n, t)
        d = eval_cardinal_derivative(self.n, t, 1) / self.h
        g = np.empty(np.shape(t))
        for mu in range(self.dim):
            g[..., mu] = d[..., mu] * np.prod(np.delete(v, mu, axis=-1), axis=-1)
        return g * self.scale

    def support(self, k):
        """Closed support box ``h([0, n]^dim + k)`` as ``(lo, hi)`` arrays."""
        k = np.asarray(k, dtype=float)
        return self.h * k, self.h * (k + self.n)

    def local(self, x, cells=None, derivatives=1):
        """Evaluate all B-splines that are nonzero on the cells containing `x`.

        Parameters
        ----------
        x : (npts, dim) array
        cells : (npts, dim) int array, optional
            Grid cell ``l`` of each point (``x`` in ``h([0,1]^dim + l)``).
            Computed by flooring when omitted; pass it explicitly for points
            on cell faces.
        derivatives : {0, 1, 2}
            Highest derivative order to return.

        Returns
        -------
        dict with keys
            ``index``: (npts, n**dim, dim) int multi-indices ``k``,
            ``value``: (npts, n**dim),
            ``grad``: (npts, n**dim, dim) when ``derivatives >= 1``,
            ``hess``: (npts, n**dim, dim, dim) when ``derivatives >= 2``.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n, h, m = self.n, self.h, self.dim
        if cells is None:
            cells = np.floor(x / h).astype(int)
        cells = np.asarray(cells, dtype=int).reshape(x.shape)
        # per-axis active offsets: k = l - n + 1 + a, a = 0..n-1
        a = np.arange(n)
        k1 = cells[:, :, None] - n + 1 + a  # (npts, dim, n)
        t1 = x[:, :, None] / h - k1
        v1 = eval_cardinal(n, t1)
        per_axis = [v1]
        if derivatives >= 1:
            per_axis.append(eval_cardinal_derivative(n, t1, 1) / h)
        if derivatives >= 2:
            per_axis.append(eval_cardinal_derivative(n, t1, 2) / h**2)

        combos = np.array(list(itertools.product(range(n), repeat=m)), dtype=int)  # (n^m, m)
        axes = np.arange(m)
        index = k1[:, axes[None, :], combos]  # (npts, n^m, m)

        def tensor(orders):
            out = np.ones((x.shape[0], combos.shape[0]))
            for mu in range(m):
                out = out * per_axis[orders[mu]][:, mu, combos[:, mu]]
            return out

        res = {"index": index, "value": tensor([0] * m) * self.scale}
        if derivatives >= 1:
            grad = np.empty(res["value"].shape + (m,))
            for mu in range(m):
                orders = [0] * m
                orders[mu] = 1
                grad[..., mu] = tensor(orders)
            res["grad"] = grad * self.scale
        if derivatives >= 2:
            hess = np.empty(res["value"].shape + (m, m))
            for mu in range(m):
                for nu in range(mu, m):
                    orders = [0] * m
                    orders[mu] += 1
                    orders[nu] += 1
                    hess[..., mu, nu] = tensor(orders)
                    hess[..., nu, mu] = hess[..., mu, nu]
            res["hess"] = hess * self.scale
        return res


def eval_tensor(n, h, k, x, normalized=False):
    """Value of the tensor-product B-spline ``b_{k,h}`` of order `n` at `x`."""
    k = np.atleast_1d(np.asarray(k, dtype=int))
    return BSplineBasis(n, h, k.size, normalized).value(k, x)


def eval_gradient(n, h, k, x, normalized=False):
    """Gradient of ``b_{k,h}`` at `x`."""
    k = np.atleast_1d(np.asarray(k, dtype=int))
    return BSplineBasis(n, h, k.size, normalized).gradient(k, x)
