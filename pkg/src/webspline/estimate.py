"""Computable error quantities for a discrete solution of the coupled system.

All estimator terms use the *normalized* form of the system, in which the
second equation is multiplied by -1 so that both species read::

    -div(P grad u_i) + kappa_i u_j = f_i,   kappa_1 = -tau_2,  kappa_2 = -tau_1

with boundary data ``nu.P grad u_i = g_i`` and ``nu.P grad u_i + sigma_i u_i
= h_i`` (see :meth:`ProblemData.normalized`).  The error form is the
quadratic form of this operator::

    a(e, e) = sum_i (P grad e_i, grad e_i) + (kappa_i e_j, e_i) + <sigma_i e_i, e_i>

and ``J(v) = a(v, v) / 2 - G(v) + a(U, v)`` is the matching energy of the
homogeneous part ``v``.  The strong residual behind ``eps_res`` is the
literal one.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import DiscreteSolution, assemble, evaluate_local, quadrature_for, _triplets, _vector
from .domain import DIRICHLET, NEUMANN, ROBIN, classify_cells
from .errors import ConfigError, ProjectionSingular, SecondDerivativeUnavailable
from .quadrature import boundary_quadrature, domain_quadrature
from .solver import SolverConfig, solve_block
from .web import UnitWeight, WebBasis

TERMS = ("t_resid_interior", "t_robin", "t_flux", "t_degenerate", "t_neumann", "t_coupling")
FLUX_MODES = ("projection", "identity")


# --------------------------------------------------------------------------
# sampling helpers
# --------------------------------------------------------------------------

class FunctionPair:
    """A pair of closed-form functions (e.g. an exact solution).

    Parameters
    ----------
    functions : pair of ScalarFunction
    """

    def __init__(self, functions):
        self.functions = tuple(functions)

    def evaluate(self, i, x, derivatives=1, cells=None):
        return self.functions[i].evaluate(x, derivatives)


def _cells_at(x, h, normals=None):
    """Grid cells of width `h` owning points `x`; boundary points move inward."""
    y = x if normals is None else x - 1e-9 * h * normals
    return np.floor(y / h).astype(int)


def _sample(fn, i, x, derivatives=1, normals=None):
    if isinstance(fn, _Difference):
        return fn.sample(i, x, derivatives, normals)
    basis = getattr(fn, "basis", None)
    cells = None if basis is None else _cells_at(x, basis.h, normals)
    return fn.evaluate(i, x, derivatives, cells)


def fine_rules(basis, factor=2, q=None, depth=4):
    """Domain and boundary rules on the grid of width ``basis.h / factor``.

    `q` defaults to ``n + 1`` Gauss points per axis, so the rule is finer
    than the assembly rule both in cells and in points.
    """
    h = basis.h / factor
    q = basis.n + 1 if q is None else q
    cells = classify_cells(basis.domain, h, basis.n)
    rule = domain_quadrature(cells, basis.domain, q, depth)
    brules = {part: boundary_quadrature(part, basis.domain, h, q) for part in (NEUMANN, ROBIN)}
    return rule, brules


# --------------------------------------------------------------------------
# residual measure
# --------------------------------------------------------------------------

def _div_flux(problem, x, d):
    """``div(P grad u)`` from the gradient and Hessian of `u`."""
    if problem.divP is None:
        raise ConfigError("the problem provides no divergence of P")
    P = problem.P(x)
    return (np.einsum("pb,pb->p", problem.divP(x), d["grad"])
            + np.einsum("pab,pab->p", P, d["hess"]))


def strong_residual(solution, x, normals=None):
    """Literal strong residuals ``(r_1, r_2)`` of a discrete solution at `x`.

    ``r_1 = -div(P grad u_1) - tau_2 u_2 - f_1`` and
    ``r_2 = div(P grad u_2) + tau_1 u_1 - f_2``.
    """
    if solution.basis.n < 3:
        raise SecondDerivativeUnavailable(
            f"strong residual needs order >= 3, got {solution.basis.n}")
    pb = solution.problem
    x = np.atleast_2d(np.asarray(x, float))
    d = [_sample(solution, i, x, 2, normals) for i in range(2)]
    div = [_div_flux(pb, x, d[i]) for i in range(2)]
    r1 = -div[0] - pb.tau[1](x) * d[1]["value"] - pb.f[0](x)
    r2 = div[1] + pb.tau[0](x) * d[0]["value"] - pb.f[1](x)
    return r1, r2


def residual_epsilon(solution, rules=None, factor=2, depth=4):
    """Relative strong residual ``||L u_h - f||_0 / ||f||_0`` over the domain.

    Parameters
    ----------
    solution : DiscreteSolution
        Must use splines of order 3 or higher.
    rules : tuple, optional
        ``(rule, brules)``; defaults to :func:`fine_rules` with `factor`.

    Raises
    ------
    SecondDerivativeUnavailable
        For order 2 splines.
    """
    if solution.basis.n < 3:
        raise SecondDerivativeUnavailable(
            f"eps_res needs splines of order >= 3, got {solution.basis.n}")
    rule = (rules or fine_rules(solution.basis, factor, depth=depth))[0]
    x = rule.points
    r1, r2 = strong_residual(solution, x)
    pb = solution.problem
    num = rule.integrate(r1**2 + r2**2)
    den = rule.integrate(pb.f[0](x) ** 2 + pb.f[1](x) ** 2)
    if den <= 0:
        return float(np.sqrt(num))
    return float(np.sqrt(num / den))


# --------------------------------------------------------------------------
# flux reconstruction
# --------------------------------------------------------------------------

@dataclass
class FluxReconstruction:
    """Vector fields ``u*_i`` approximating ``P grad u_i``, one per species.

    ``evaluate(i, x)`` returns a dict with ``value`` (npts, m) and ``div``.
    """

    mode: str
    solution: object
    basis: object = None
    coeffs: tuple = None

    def evaluate(self, i, x, normals=None):
        x = np.atleast_2d(np.asarray(x, float))
        if self.mode == "identity":
            pb = self.solution.problem
            d = _sample(self.solution, i, x, 2, normals)
            return {"value": np.einsum("pab,pb->pa", pb.P(x), d["grad"]),
                    "div": _div_flux(pb, x, d)}
        cells = _cells_at(x, self.basis.h, normals)
        comps = [self.basis.field(c).evaluate(x, 1, cells) for c in self.coeffs[i]]
        value = np.stack([c["value"] for c in comps], axis=1)
        div = sum(c["grad"][:, a] for a, c in enumerate(comps))
        return {"value": value, "div": div}

    def normal_trace(self, i, x, normals):
        return np.sum(self.evaluate(i, x, normals)["value"] * normals, axis=1)


def reconstruct_flux(solution, mode="projection", rules=None, depth=4):
    """Build ``u*_i`` from a discrete solution.

    ``mode="projection"`` projects every component of ``P grad u_i`` in L2
    onto the extended spline space without weight (no boundary
    conditions), which gives a smoothed flux with spline divergence and
    normal trace.  ``mode="identity"`` uses ``u* = P grad u_i`` itself.

    Raises
    ------
    ProjectionSingular
        If the mass matrix of the projection space cannot be factorized.
    """
    if mode not in FLUX_MODES:
        raise ConfigError(f"unknown flux mode {mode!r}; choose from {FLUX_MODES}")
    if mode == "identity":
        if solution.basis.n < 3:
            raise SecondDerivativeUnavailable("identity flux needs order >= 3 for its divergence")
        return FluxReconstruction("identity", solution)
    base = solution.basis
    pbasis = WebBasis(base.domain, base.h, base.n, UnitWeight(), extended=True, cells=base.cells)
    rule = (rules or quadrature_for(pbasis, base.n + 1, depth))[0]
    x, wq = rule.points, rule.weights
    loc = evaluate_local(pbasis, rule, derivatives=0)
    nK = len(pbasis.index.K)
    mass = _triplets(loc["pos"], np.einsum("pa,pb->pab", loc["value"], loc["value"] * wq[:, None]), nK)
    T = pbasis.T
    M = (T.T @ mass @ T).tocsc()
    try:
        lu = spla.splu(M)
    except RuntimeError as exc:
        raise ProjectionSingular(f"flux projection mass matrix is singular: {exc}") from exc
    P = solution.problem.P(x)
    coeffs = []
    for i in range(2):
        grad = solution.evaluate(i, x, 1, rule.cells)["grad"]
        flux = np.einsum("pab,pb->pa", P, grad)
        comps = []
        for a in range(base.dim):
            rhs = T.T @ _vector(loc["pos"], loc["value"] * (flux[:, a] * wq)[:, None], nK)
            c = lu.solve(rhs)
            if not np.all(np.isfinite(c)):
                raise ProjectionSingular("flux projection produced non-finite coefficients")
            comps.append(c)
        coeffs.append(tuple(comps))
    return FluxReconstruction("projection", solution, pbasis, tuple(coeffs))


# --------------------------------------------------------------------------
# the sub-domain where both couplings are bounded below
# --------------------------------------------------------------------------

@dataclass
class OmegaTildePartition:
    """Membership of quadrature points in ``{min_j tau_j >= theta_tilde}``."""

    theta_tilde: float
    inside: np.ndarray

    @property
    def outside(self):
        return ~self.inside


def default_theta_tilde(problem, points):
    """One percent of the largest pointwise ``min_j tau_j`` (at least tiny)."""
    tmin = np.minimum(problem.tau[0](points), problem.tau[1](points))
    top = float(tmin.max()) if len(tmin) else 0.0
    return max(0.01 * top, np.finfo(float).tiny)


def omega_tilde(problem, points, theta_tilde=None):
    if theta_tilde is None:
        theta_tilde = default_theta_tilde(problem, points)
    if not theta_tilde > 0:
        raise ConfigError(f"theta_tilde must be positive, got {theta_tilde}")
    tmin = np.minimum(problem.tau[0](points), problem.tau[1](points))
    return OmegaTildePartition(float(theta_tilde), tmin >= theta_tilde)


# --------------------------------------------------------------------------
# upper bound
# --------------------------------------------------------------------------

@dataclass
class EstimatorBreakdown:
    """Terms of the upper bound per species, plus optional lower bound.

    ``terms[i][name]`` for species ``i`` in ``{0, 1}`` and ``name`` in
    :data:`TERMS`.  The total is the unweighted sum of all terms.
    """

    terms: tuple
    theta_tilde: float
    coupling_mode: str
    flux_mode: str
    lower: float | None = None
    notes: list = field(default_factory=list)

    @property
    def total(self):
        return float(sum(t[name] for t in self.terms for name in TERMS))

    def term(self, name):
        """Sum of one term over both species."""
        return float(sum(t[name] for t in self.terms))

    def to_record(self):
        """Flat ``{key: text}`` record with 17 significant digits."""
        rec = {}
        for i, t in enumerate(self.terms):
            for name in TERMS:
                rec[f"{name}_{i + 1}"] = f"{t[name]:.17g}"
        rec["upper"] = f"{self.total:.17g}"
        rec["lower"] = "" if self.lower is None else f"{self.lower:.17g}"
        rec["theta_tilde"] = f"{self.theta_tilde:.17g}"
        rec["coupling_mode"] = self.coupling_mode
        rec["flux_mode"] = self.flux_mode
        return rec

    def to_text(self):
        return "".join(f"{k}={v}\n" for k, v in self.to_record().items())


def _flux_norm(P, d):
    """``d . P^{-1} d`` pointwise, with a pseudo-inverse where P is singular."""
    try:
        q = np.einsum("pa,pa->p", d, np.linalg.solve(P, d[..., None])[..., 0])
    except np.linalg.LinAlgError:
        q = np.einsum("pa,pab,pb->p", d, np.linalg.pinv(P), d)
    return q


def _volume_terms(solution, flux, problem, rule, part, reference):
    """Residual, degenerate, flux and coupling terms for both species."""
    x, wq = rule.points, rule.weights
    P = problem.P(x)
    uh = [_sample(solution, i, x, 1) for i in range(2)]
    ref = None if reference is None else [_sample(reference, i, x, 0)["value"] for i in range(2)]
    out, notes = [], []
    for i in range(2):
        j = 1 - i
        kappa, fn = problem.normalized(i)[:2]
        us = flux.evaluate(i, x)
        R = fn(x) + us["div"] - kappa(x) * uh[j]["value"]
        tau_j = problem.tau[j](x)
        inside = part.inside
        safe_tau = np.where(inside, tau_j, 1.0)
        d = us["value"] - np.einsum("pab,pb->pa", P, uh[i]["grad"])
        q = _flux_norm(P, d)
        if np.any(q < 0):
            notes.append(f"P is not positive definite at {int(np.sum(q < 0))} points; "
                         f"flux term of species {i + 1} uses |d.P^-1 d|")
            q = np.abs(q)
        terms = {
            "t_resid_interior": float(np.sum(wq * inside * R**2 / safe_tau)),
            "t_degenerate": float(np.sum(wq * ~inside * R**2)),
            "t_flux": float(np.sum(wq * q)),
            "t_coupling": 0.0,
        }
        if ref is not None:
            err = ref[j] - uh[j]["value"]
            terms["t_coupling"] = float(np.sum(wq * inside * tau_j * err**2))
        out.append(terms)
    return out, notes


def _neumann_term(solution, flux, problem, br, i):
    if not len(br):
        return 0.0
    gn = problem.normalized(i)[2]
    r = gn(br.points) - flux.normal_trace(i, br.points, br.normals)
    return br.integrate(r**2)


def _robin_term(solution, flux, problem, br, i):
    if not len(br):
        return 0.0
    hn, sn = problem.normalized(i)[3:5]
    x = br.points
    s = sn(x)
    if np.any(s <= 0):
        warnings.warn("Robin coefficient is not positive; the Robin term uses |sigma|")
        s = np.abs(s)
    u = _sample(solution, i, x, 0, br.normals)["value"]
    r = hn(x) - s * u - flux.normal_trace(i, x, br.normals)
    return br.integrate(r**2 / s)


def _setup(solution, flux, theta_tilde, reference, coupling, rules):
    if coupling not in ("oracle", "surrogate"):
        raise ConfigError(f"unknown coupling mode {coupling!r}")
    rule, brules = rules or fine_rules(solution.basis)
    part = omega_tilde(solution.problem, rule.points, theta_tilde)
    mode = coupling if reference is not None else "omitted"
    return rule, brules, part, mode


def upper_bound(solution, flux, theta_tilde=None, reference=None, coupling="oracle", rules=None):
    """Evaluate every term of the upper bound by quadrature.

    Parameters
    ----------
    solution : DiscreteSolution
    flux : FluxReconstruction
    theta_tilde : float, optional
        Threshold defining the sub-domain where both couplings are at least
        ``theta_tilde``; see :func:`default_theta_tilde`.
    reference : evaluator, optional
        Exact solution (``coupling="oracle"``) or a finer discrete solution
        (``coupling="surrogate"``, not a guaranteed bound) used for the
        coupling term.  Without it the coupling term is 0 and the mode is
        reported as ``"omitted"``.
    rules : tuple, optional
        ``(rule, brules)``; defaults to :func:`fine_rules`.

    Returns
    -------
    EstimatorBreakdown
    """
    problem = solution.problem
    rule, brules, part, mode = _setup(solution, flux, theta_tilde, reference, coupling, rules)
    terms, notes = _volume_terms(solution, flux, problem, rule, part, reference)
    for i in range(2):
        terms[i]["t_neumann"] = _neumann_term(solution, flux, problem, brules[NEUMANN], i)
        terms[i]["t_robin"] = _robin_term(solution, flux, problem, brules[ROBIN], i)
    return EstimatorBreakdown(tuple(terms), part.theta_tilde, mode, flux.mode, notes=notes)


def _require_parts(solution, allowed, label):
    present = set(solution.basis.domain.parts_present())
    if not present <= allowed:
        raise ConfigError(f"{label} bound needs boundary parts within {sorted(allowed)}, "
                          f"got {sorted(present)}")


def upper_bound_dirichlet(solution, flux, theta_tilde=None, reference=None, coupling="oracle",
                          rules=None):
    """Upper bound for a purely Dirichlet boundary.

    Only the interior residual, flux, degenerate and coupling terms exist;
    the boundary terms are reported as 0.
    """
    _require_parts(solution, {DIRICHLET}, "Dirichlet")
    rule, _, part, mode = _setup(solution, flux, theta_tilde, reference, coupling, rules)
    terms, notes = _volume_terms(solution, flux, solution.problem, rule, part, reference)
    for t in terms:
        t["t_neumann"] = t["t_robin"] = 0.0
    return EstimatorBreakdown(tuple(terms), part.theta_tilde, mode, flux.mode, notes=notes)


def upper_bound_dirichlet_neumann(solution, flux, theta_tilde=None, reference=None,
                                  coupling="oracle", rules=None):
    """Upper bound for Dirichlet and Neumann parts only (no Robin part)."""
    _require_parts(solution, {DIRICHLET, NEUMANN}, "Dirichlet/Neumann")
    problem = solution.problem
    rule, brules, part, mode = _setup(solution, flux, theta_tilde, reference, coupling, rules)
    terms, notes = _volume_terms(solution, flux, problem, rule, part, reference)
    for i, t in enumerate(terms):
        t["t_neumann"] = _neumann_term(solution, flux, problem, brules[NEUMANN], i)
        t["t_robin"] = 0.0
    return EstimatorBreakdown(tuple(terms), part.theta_tilde, mode, flux.mode, notes=notes)


def minimal_constant(error, breakdown):
    """Smallest ``C`` with ``error <= C * total``."""
    total = breakdown.total
    if total <= 0:
        return np.inf if error > 0 else 0.0
    return max(error, 0.0) / total


# --------------------------------------------------------------------------
# energy, error form and lower bound
# --------------------------------------------------------------------------

@dataclass
class _Samples:
    dom: list
    neu: list
    rob: list


class _Difference:
    """Pointwise ``a - b`` of two evaluators (cells resolved per operand)."""

    def __init__(self, a, b):
        self.a, self.b = a, b

    def sample(self, i, x, derivatives=1, normals=None):
        da = _sample(self.a, i, x, derivatives, normals)
        db = _sample(self.b, i, x, derivatives, normals)
        return {k: da[k] - db[k] for k in da}


def _samples(fn, rule, brules):
    def ev(i, r, derivatives):
        return _sample(fn, i, r.points, derivatives, r.normals)

    dom = [ev(i, rule, 1) for i in range(2)]
    neu = [ev(i, brules[NEUMANN], 0)["value"] if len(brules[NEUMANN]) else np.zeros(0)
           for i in range(2)]
    rob = [ev(i, brules[ROBIN], 0)["value"] if len(brules[ROBIN]) else np.zeros(0)
           for i in range(2)]
    return _Samples(dom, neu, rob)


def _form(su, sv, problem, rule, brules):
    x, wq = rule.points, rule.weights
    P = problem.P(x)
    br = brules[ROBIN]
    total = 0.0
    for i in range(2):
        j = 1 - i
        kappa, sig = problem.normalized(i)[0], problem.normalized(i)[4]
        dens = np.einsum("pa,pab,pb->p", sv.dom[i]["grad"], P, su.dom[i]["grad"])
        dens += kappa(x) * su.dom[j]["value"] * sv.dom[i]["value"]
        total += float(np.dot(wq, dens))
        if len(br):
            total += br.integrate(sig(br.points) * su.rob[i] * sv.rob[i])
    return total


def _load(sv, problem, rule, brules):
    x = rule.points
    total = 0.0
    for i in range(2):
        _, fn, gn, hn, _ = problem.normalized(i)
        total += rule.integrate(fn(x) * sv.dom[i]["value"])
        if len(brules[NEUMANN]):
            total += brules[NEUMANN].integrate(gn(brules[NEUMANN].points) * sv.neu[i])
        if len(brules[ROBIN]):
            total += brules[ROBIN].integrate(hn(brules[ROBIN].points) * sv.rob[i])
    return total


def bilinear_form(u, v, problem, rules):
    """Normalized ``a(u, v)`` for evaluator pairs `u`, `v` by quadrature."""
    rule, brules = rules
    return _form(_samples(u, rule, brules), _samples(v, rule, brules), problem, rule, brules)


def energy_error(solution, reference, rules=None):
    """``a(u - u_h, u - u_h)`` with `reference` standing in for ``u``."""
    rules = rules or fine_rules(solution.basis)
    e = _samples(_Difference(reference, solution), *rules)
    return _form(e, e, solution.problem, *rules)


def energy(v, problem, rules):
    """Energy ``J(v - U) = a(v*, v*)/2 - G(v*) + a(U, v*)`` of a full pair `v`.

    `v` includes the lift ``U``; only its homogeneous part ``v* = v - U``
    enters the energy.
    """
    rule, brules = rules
    lift = FunctionPair(problem.U)
    sv = _samples(_Difference(v, lift), rule, brules)
    su = _samples(lift, rule, brules)
    return (0.5 * _form(sv, sv, problem, rule, brules) - _load(sv, problem, rule, brules)
            + _form(su, sv, problem, rule, brules))


def refined_solution(solution, factor=2, config=None, depth=4):
    """Solve the same problem on the grid ``h / factor`` with the same weight."""
    base = solution.basis
    fine = WebBasis(base.domain, base.h / factor, base.n, base.weight, extended=base.extended)
    system = assemble(solution.problem, fine, depth=depth)
    x, _ = solve_block(system, config or SolverConfig(tol=1e-10))
    return DiscreteSolution(fine, solution.problem, x)


def lower_bound(solution, candidates=None, rules=None, config=None):
    """``max_v 2 (J(u_h) - J(v))`` over candidate pairs sharing the lift.

    `candidates` defaults to the solution on the once-refined grid.  The
    discrete solution itself is always a candidate, so the result is at
    least 0.  All energies use the common rule `rules` (default
    :func:`fine_rules`).
    """
    rules = rules or fine_rules(solution.basis)
    if candidates is None:
        candidates = [refined_solution(solution, config=config)]
    jh = energy(solution, solution.problem, rules)
    best = 0.0
    for v in candidates:
        best = max(best, 2.0 * (jh - energy(v, solution.problem, rules)))
    return best
