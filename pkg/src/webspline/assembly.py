"""Problem data and Galerkin assembly of the coupled two-species system.

The strong form is, for species ``i = 1, 2`` with partner ``j != i``::

    -div(P grad u_1) - tau_2 u_2 = f_1          div(P grad u_2) + tau_1 u_1 = f_2
    u_1 = U_1 on D1                             u_2 = U_2 on D1
    nu.P grad u_1 = g_1 on D2                   -nu.P grad u_2 = g_2 on D2
    nu.P grad u_1 + sigma_1 u_1 = h_1 on D3     -nu.P grad u_2 + sigma_2 u_2 = h_2 on D3

and the weak form tested with ``v`` vanishing on D1 reads::

    (-1)^(i+1) (P grad u_i, grad v) + (-1)^i (tau_j u_j, v) + <sigma_i u_i, v>_D3
        = (f_i, v) + <g_i, v>_D2 + <h_i, v>_D3.

The trial functions are ``u_i = U_i + sum_c c_{i,c} B_c`` with the WEB basis
``B_c``; the load is shifted by the lift, ``G(v) - a(U, v)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .domain import NEUMANN, ROBIN
from .errors import EmptyBasis
from .quadrature import boundary_quadrature, domain_quadrature


@dataclass
class ScalarFunction:
    """A scalar field with optional analytic gradient and Hessian."""

    value: callable
    grad: callable = None
    hess: callable = None

    def evaluate(self, x, derivatives=1):
        x = np.atleast_2d(np.asarray(x, float))
        out = {"value": np.broadcast_to(self.value(x), (len(x),)).astype(float)}
        if derivatives >= 1:
            if self.grad is None:
                raise ValueError("gradient not available for this function")
            out["grad"] = np.broadcast_to(self.grad(x), x.shape).astype(float)
        if derivatives >= 2:
            if self.hess is None:
                raise ValueError("Hessian not available for this function")
            out["hess"] = np.broadcast_to(self.hess(x), x.shape + (x.shape[-1],)).astype(float)
        return out

    def __call__(self, x):
        return self.evaluate(x, 0)["value"]

    @classmethod
    def constant(cls, c, dim):
        return cls(lambda x: np.full(len(x), float(c)),
                   lambda x: np.zeros((len(x), dim)),
                   lambda x: np.zeros((len(x), dim, dim)))


def _zero(x):
    return np.zeros(len(np.atleast_2d(x)))


@dataclass
class ProblemData:
    """Coefficients and data of the coupled system (as written above).

    Every coefficient is a vectorized callable of points ``(npts, m)``.
    Pairs are indexed by species ``0`` and ``1``.

    ``divP(x)`` returns ``sum_a d P_ab / d x_a`` (shape ``(npts, m)``); it
    is only needed for strong residuals.
    """

    dim: int
    P: callable
    tau: tuple
    f: tuple
    sigma: tuple = (_zero, _zero)
    g: tuple = (_zero, _zero)
    hdat: tuple = (_zero, _zero)
    U: tuple = None
    divP: callable = None

    def __post_init__(self):
        if self.U is None:
            z = ScalarFunction.constant(0.0, self.dim)
            self.U = (z, z)

    @staticmethod
    def sign(i):
        """Sign ``(-1)^(i+1)`` of the diffusion term of species `i` (0-based)."""
        return 1.0 if i == 0 else -1.0

    def coupling(self, i, x):
        """Literal coupling coefficient ``(-1)^i tau_j`` of species `i`."""
        j = 1 - i
        return -self.sign(i) * self.tau[j](x)

    def normalized(self, i):
        """Data of species `i` after multiplying its equation by its sign.

        Every species then reads ``-div(P grad u_i) + kappa_i u_j = f_i``,
        ``nu.P grad u_i = g_i`` and ``nu.P grad u_i + sigma_i u_i = h_i``.
        Returns callables ``(kappa, f, g, h, sigma)``.
        """
        s = self.sign(i)
        j = 1 - i
        return (lambda x: -self.tau[j](x),
                lambda x: s * self.f[i](x),
                lambda x: s * self.g[i](x),
                lambda x: s * self.hdat[i](x),
                lambda x: s * self.sigma[i](x))

    def sample_ellipticity(self, points, rng=None, count=100):
        """Empirical ``(C1, C2)`` from Rayleigh quotients of P at random pairs."""
        rng = np.random.default_rng(0) if rng is None else rng
        points = np.atleast_2d(points)
        x = points[rng.integers(0, len(points), count)]
        xi = rng.standard_normal((count, self.dim))
        q = np.einsum("pi,pij,pj->p", xi, self.P(x), xi) / np.sum(xi * xi, axis=1)
        return float(q.min()), float(q.max())


@dataclass
class BlockSystem:
    """Assembled 2x2 block system over the WEB basis (``N`` functions each).

    ``A`` and ``b`` are the literal weak form unless ``negated`` is set, in
    which case the second block row has been multiplied by -1.
    """

    A: sp.csr_matrix
    b: np.ndarray
    basis: object
    problem: ProblemData
    blocks: dict
    loads: tuple
    quad: object
    bquad: dict
    negated: bool = False
    dof_map: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.basis.size

    def split(self, v):
        v = np.asarray(v)
        return v[: self.N], v[self.N:]


def evaluate_local(basis, rule, derivatives=1):
    """Weighted B-spline data at the points of a quadrature rule."""
    return basis.local(rule.points, rule.cells, derivatives)


def _triplets(pos, local, size):
    """Sum point-local matrices ``local[p, a, b]`` into a sparse K x K matrix."""
    nloc = pos.shape[1]
    rows = np.repeat(pos, nloc, axis=1).ravel()
    cols = np.tile(pos, (1, nloc)).ravel()
    vals = local.ravel()
    keep = (rows >= 0) & (cols >= 0)
    return sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(size, size)).tocsr()


def _vector(pos, local, size):
    keep = pos >= 0
    return np.bincount(pos[keep], weights=local[keep], minlength=size)


def kmatrices(basis, problem, rule, brules):
    """Matrices over the weighted B-splines ``w b_k`` (K-level)."""
    nK = len(basis.index.K)
    loc = evaluate_local(basis, rule)
    x, wq = rule.points, rule.weights
    gphi, phi = loc["grad"], loc["value"]
    Pm = problem.P(x)
    stiff = np.einsum("pai,pij,pbj->pab", gphi, Pm, gphi) * wq[:, None, None]
    mass = np.einsum("pa,pb->pab", phi, phi)
    out = {"stiff": _triplets(loc["pos"], stiff, nK)}
    for j in range(2):
        out[f"tau{j}"] = _triplets(loc["pos"], mass * (problem.tau[j](x) * wq)[:, None, None], nK)
    br = brules[ROBIN]
    if len(br):
        bl = evaluate_local(basis, br, derivatives=0)
        bmass = np.einsum("pa,pb->pab", bl["value"], bl["value"])
        for i in range(2):
            out[f"robin{i}"] = _triplets(bl["pos"], bmass * (problem.sigma[i](br.points) * br.weights)[:, None, None], nK)
    else:
        for i in range(2):
            out[f"robin{i}"] = sp.csr_matrix((nK, nK))
    return out, loc


def kloads(basis, problem, rule, brules, loc=None):
    """Load vectors ``G_i(w b_k) - a_i(U, w b_k)`` over K."""
    nK = len(basis.index.K)
    loc = evaluate_local(basis, rule) if loc is None else loc
    x, wq = rule.points, rule.weights
    U = [problem.U[i].evaluate(x) for i in range(2)]
    Pm = problem.P(x)
    loads = []
    for i in range(2):
        j = 1 - i
        s = problem.sign(i)
        PgU = np.einsum("pij,pj->pi", Pm, U[i]["grad"])
        dens = (problem.f[i](x) - problem.coupling(i, x) * U[j]["value"])[:, None] * loc["value"]
        dens -= s * np.einsum("pi,pki->pk", PgU, loc["grad"])
        vec = _vector(loc["pos"], dens * wq[:, None], nK)
        bn = brules[NEUMANN]
        if len(bn):
            bl = evaluate_local(basis, bn, derivatives=0)
            vec += _vector(bl["pos"], (problem.g[i](bn.points) * bn.weights)[:, None] * bl["value"], nK)
        br = brules[ROBIN]
        if len(br):
            bl = evaluate_local(basis, br, derivatives=0)
            Ub = problem.U[i].evaluate(br.points, 0)["value"]
            dens = problem.hdat[i](br.points) - problem.sigma[i](br.points) * Ub
            vec += _vector(bl["pos"], (dens * br.weights)[:, None] * bl["value"], nK)
        loads.append(vec)
    return loads


def quadrature_for(basis, q=None, depth=4):
    """Domain rule and boundary rules (parts 2 and 3) for a basis."""
    q = basis.n if q is None else q
    rule = domain_quadrature(basis.cells, basis.domain, q, depth)
    brules = {part: boundary_quadrature(part, basis.domain, basis.h, q) for part in (NEUMANN, ROBIN)}
    return rule, brules


def assemble(problem, basis, depth=4, q=None, negate_second_equation=False, rules=None):
    """Assemble the block operator and load vector of the weak form.

    Parameters
    ----------
    problem : ProblemData
    basis : WebBasis
    depth : int
        Dyadic subdivision depth for cut cells.
    q : int, optional
        Gauss points per axis (defaults to the spline order).
    negate_second_equation : bool
        Multiply the second block row by -1 (symmetrizes the operator when
        ``tau_1 = tau_2``).
    rules : tuple, optional
        Precomputed ``(rule, brules)`` from :func:`quadrature_for`.
    """
    if basis.size == 0:
        raise EmptyBasis("the WEB basis is empty")
    rule, brules = rules if rules is not None else quadrature_for(basis, q, depth)
    km, loc = kmatrices(basis, problem, rule, brules)
    kl = kloads(basis, problem, rule, brules, loc)
    T = basis.T
    TT = T.T.tocsr()
    stiff = (TT @ km["stiff"] @ T).tocsr()
    mass_tau = [(TT @ km[f"tau{j}"] @ T).tocsr() for j in range(2)]
    robin = [(TT @ km[f"robin{i}"] @ T).tocsr() for i in range(2)]
    loads = tuple(TT @ v for v in kl)
    # literal signs: diffusion (-1)^(i+1), coupling (-1)^i tau_j
    blocks = {
        (0, 0): stiff + robin[0],
        (0, 1): -mass_tau[1],
        (1, 0): mass_tau[0],
        (1, 1): -stiff + robin[1],
    }
    rowsign = [1.0, -1.0 if negate_second_equation else 1.0]
    A = sp.bmat([[rowsign[i] * blocks[(i, j)] for j in range(2)] for i in range(2)], format="csr")
    b = np.concatenate([rowsign[i] * loads[i] for i in range(2)])
    dof_map = {tuple(basis.index.K[p]): c for c, p in enumerate(basis.columns)}
    parts = {"stiff": stiff, "mass_tau": mass_tau, "robin": robin}
    return BlockSystem(A, b, basis, problem, {**blocks, **parts}, loads, rule, brules,
                       negate_second_equation, dof_map)


def energy_functional(v, system):
    """``J(v) = 1/2 v^T A v - b^T v`` for the assembled system."""
    v = np.asarray(v, float)
    if v.shape != system.b.shape:
        raise ValueError(f"coefficient vector has shape {v.shape}, expected {system.b.shape}")
    return 0.5 * float(v @ (system.A @ v)) - float(system.b @ v)


class DiscreteSolution:
    """``u_i = U_i + sum_c c_{i,c} B_c`` for both species."""

    def __init__(self, basis, problem, coeffs):
        self.basis = basis
        self.problem = problem
        self.coeffs = np.asarray(coeffs, float)
        N = basis.size
        self.fields = (basis.field(self.coeffs[:N]), basis.field(self.coeffs[N:]))

    def evaluate(self, i, x, derivatives=1, cells=None):
        """Value and derivatives of species `i` (0-based) at points `x`."""
        a = self.fields[i].evaluate(x, derivatives, cells)
        b = self.problem.U[i].evaluate(x, derivatives)
        return {k: a[k] + b[k] for k in a}

    def homogeneous(self, i, x, derivatives=1, cells=None):
        """The part ``u_i - U_i`` in the WEB space."""
        return self.fields[i].evaluate(x, derivatives, cells)
