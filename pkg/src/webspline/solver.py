"""SSOR-preconditioned conjugate gradients and block-system solves.

The literal block operator is in general neither symmetric nor definite, so
:func:`solve_block` probes the matrix and falls back to a Krylov method that
does not need definiteness.  Every path stops on the relative residual
``||b - A x|| / ||b|| <= tol``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MaxIterExceeded, NotPositiveDefinite, NotSymmetric, SingularSystem

log = logging.getLogger(__name__)

METHODS = ("auto", "ssor_cg", "minres", "gmres", "normal_cg")


@dataclass
class SolverConfig:
    """Stopping rule and method selection.

    ``method="auto"`` uses SSOR-CG when the matrix passes the SPD probe and
    otherwise MINRES (symmetric) or ILU-preconditioned GMRES (nonsymmetric),
    with CG on the normal equations as the last resort.
    """

    tol: float = 1e-6
    max_iter: int | None = None
    ssor_omega: float = 1.2
    method: str = "auto"
    seed: int = 0
    probes: int = 5

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if not 0 < self.ssor_omega < 2:
            raise ValueError(f"ssor_omega must lie in (0, 2), got {self.ssor_omega}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")

    def iterations_for(self, size):
        return self.max_iter if self.max_iter is not None else 10 * size


@dataclass
class SolveReport:
    iterations: int
    final_rel_residual: float
    method_used: str
    definiteness: str = "Unknown"
    converged: bool = True
    history: list = field(default_factory=list)


def relative_residual(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - A @ x)
    return r / nb if nb > 0 else r


def is_symmetric(A, rtol=1e-10):
    A = sp.csr_matrix(A)
    scale = abs(A).max() if A.nnz else 0.0
    if scale == 0:
        return True
    diff = A - A.T
    return (abs(diff).max() if diff.nnz else 0.0) <= rtol * scale


def probe_definiteness(A, count=5, seed=0):
    """Sign of ``v^T A v`` for seeded random vectors: 'SPD' or 'Indefinite'."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        v = rng.standard_normal(A.shape[0])
        if v @ (A @ v) <= 0:
            return "Indefinite"
    return "SPD"


class SSORPreconditioner:
    """Apply ``M^{-1}`` for ``M = w/(2-w) (D/w + L) D^{-1} (D/w + L)^T``."""

    def __init__(self, A, omega=1.2):
        A = sp.csr_matrix(A)
        self.omega = omega
        self.d = A.diagonal()
        if np.any(self.d <= 0):
            raise NotPositiveDefinite("SSOR needs a positive diagonal")
        lower = sp.tril(A, k=-1, format="csr")
        self.lower = (lower + sp.diags(self.d / omega)).tocsr()
        self.upper = self.lower.T.tocsr()

    def __call__(self, r):
        y = spla.spsolve_triangular(self.lower, r, lower=True)
        z = spla.spsolve_triangular(self.upper, self.d * y, lower=False)
        return (2.0 - self.omega) / self.omega * z


def ssor_cg(A, b, config=None, x0=None, callback=None, check=True):
    """Solve ``A x = b`` for sparse SPD `A` with SSOR-preconditioned CG.

    Parameters
    ----------
    A : sparse or dense (N, N) array
    b : (N,) array
    config : SolverConfig, optional
    x0 : array, optional
        Initial guess (zero by default).
    callback : callable, optional
        Called with a copy of every iterate.
    check : bool
        Verify symmetry and probe definiteness before iterating.

    Returns
    -------
    x, SolveReport

    Raises
    ------
    NotSymmetric, NotPositiveDefinite, MaxIterExceeded
    """
    config = config or SolverConfig()
    A = sp.csr_matrix(A)
    b = np.asarray(b, float)
    n = A.shape[0]
    if check:
        if not is_symmetric(A):
            raise NotSymmetric("matrix is not symmetric")
        if probe_definiteness(A, config.probes, config.seed) != "SPD":
            raise NotPositiveDefinite("Rayleigh-quotient probe found a nonpositive direction")
    precond = SSORPreconditioner(A, config.ssor_omega)
    nb = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, float)
    if nb == 0:
        return np.zeros(n), SolveReport(0, 0.0, "ssor_cg", "SPD")
    r = b - A @ x
    history = [np.linalg.norm(r) / nb]
    if history[0] <= config.tol:
        return x, SolveReport(0, history[0], "ssor_cg", "SPD", True, history)
    z = precond(r)
    p = z.copy()
    rz = r @ z
    max_iter = config.iterations_for(n)
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise NotPositiveDefinite(f"p^T A p = {pAp:.3e} at iteration {it}", x,
                                      SolveReport(it, history[-1], "ssor_cg", "Indefinite", False, history))
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if callback is not None:
            callback(x.copy())
        history.append(np.linalg.norm(r) / nb)
        if history[-1] <= config.tol:
            # confirm with the true residual; recursion drift is possible
            true = relative_residual(A, x, b)
            if true <= config.tol:
                history[-1] = true
                return x, SolveReport(it, true, "ssor_cg", "SPD", True, history)
            r = b - A @ x
        z = precond(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    report = SolveReport(max_iter, history[-1], "ssor_cg", "SPD", False, history)
    raise MaxIterExceeded(f"no convergence to {config.tol:g} in {max_iter} iterations", x, report)


def normal_cg(A, b, config=None):
    """CG on the normal equations ``A^T A x = A^T b`` (CGNR).

    Stops on the residual of the original system.
    """
    config = config or SolverConfig()
    A = sp.csr_matrix(A)
    AT = A.T.tocsr()
    nb = np.linalg.norm(b)
    n = A.shape[1]
    x = np.zeros(n)
    if nb == 0:
        return x, SolveReport(0, 0.0, "normal_cg")
    r = b.copy()
    s = AT @ r
    p = s.copy()
    ss = s @ s
    history = [1.0]
    max_iter = config.iterations_for(n)
    for it in range(1, max_iter + 1):
        q = A @ p
        qq = q @ q
        if qq == 0:
            raise SingularSystem("zero step in CGNR", x, SolveReport(it, history[-1], "normal_cg", converged=False, history=history))
        alpha = ss / qq
        x += alpha * p
        r -= alpha * q
        history.append(np.linalg.norm(r) / nb)
        if history[-1] <= config.tol:
            true = relative_residual(A, x, b)
            if true <= config.tol:
                return x, SolveReport(it, true, "normal_cg", history=history)
        s = AT @ r
        ss_new = s @ s
        p = s + (ss_new / ss) * p
        ss = ss_new
    raise MaxIterExceeded(f"CGNR did not reach {config.tol:g}", x,
                          SolveReport(max_iter, history[-1], "normal_cg", converged=False, history=history))


def _jacobi(A):
    d = A.diagonal()
    d = np.where(np.abs(d) > 0, np.abs(d), 1.0)
    return spla.LinearOperator(A.shape, matvec=lambda v: v / d)


def _ilu(A):
    """Incomplete LU preconditioner, Jacobi if the factorization breaks down."""
    try:
        ilu = spla.spilu(sp.csc_matrix(A), drop_tol=1e-5, fill_factor=20)
    except RuntimeError:
        return _jacobi(A)
    return spla.LinearOperator(A.shape, matvec=ilu.solve)


def _krylov(method, A, b, config):
    """MINRES or restarted GMRES, restarted on the true residual.

    Both scipy routines stop on an internal (possibly preconditioned or
    recursively updated) residual, so the outer loop re-solves for the
    correction until the true relative residual meets the tolerance or the
    iteration budget is spent.
    """
    n = A.shape[0]
    budget = config.iterations_for(n)
    nb = np.linalg.norm(b)
    x = np.zeros(n)
    count = [0]

    def cb(*_):
        count[0] += 1

    restart = min(n, 200)
    M = _ilu(A) if method == "gmres" else None
    for _ in range(8):
        r = b - A @ x
        nr = np.linalg.norm(r)
        if nb == 0 or nr <= config.tol * nb or count[0] >= budget:
            break
        rtol = min(0.5, 0.1 * config.tol * nb / nr)
        left = max(1, budget - count[0])
        if method == "minres":
            dx, _ = spla.minres(A, r, rtol=rtol, maxiter=left, callback=cb)
        else:
            dx, _ = spla.gmres(A, r, rtol=rtol, atol=0.0, restart=restart,
                               maxiter=max(1, -(-left // restart)), M=M, callback=cb,
                               callback_type="pr_norm")
        x = x + dx
    return x, count[0]


def solve_linear(A, b, config=None):
    """Solve with the configured method; returns ``(x, SolveReport)``."""
    config = config or SolverConfig()
    A = sp.csr_matrix(A)
    b = np.asarray(b, float)
    symmetric = is_symmetric(A)
    definiteness = probe_definiteness(A, config.probes, config.seed) if symmetric else "Indefinite"
    method = config.method
    if method == "auto":
        if symmetric and definiteness == "SPD":
            try:
                return ssor_cg(A, b, config, check=False)
            except (NotPositiveDefinite, MaxIterExceeded) as exc:
                log.warning("SSOR-CG failed (%s); falling back", exc)
                definiteness = "Indefinite" if isinstance(exc, NotPositiveDefinite) else definiteness
        chain = ["minres", "gmres", "normal_cg"] if symmetric else ["gmres", "normal_cg"]
    else:
        chain = [method]
    last = None
    for m in chain:
        if m == "ssor_cg":
            x, rep = ssor_cg(A, b, config)
            rep.definiteness = definiteness
            return x, rep
        if m == "normal_cg":
            x, rep = normal_cg(A, b, config)
            rep.definiteness = definiteness
            return x, rep
        x, its = _krylov(m, A, b, config)
        res = relative_residual(A, x, b)
        rep = SolveReport(its, res, m, definiteness, res <= config.tol)
        if res <= config.tol:
            return x, rep
        log.warning("%s stopped at relative residual %.3e > %.1e", m, res, config.tol)
        last = (x, rep)
    x, rep = last
    raise MaxIterExceeded(f"no method reached relative residual {config.tol:g}", x, rep)


def solve_block(system, config=None):
    """Solve an assembled :class:`~webspline.assembly.BlockSystem`."""
    return solve_linear(system.A, system.b, config)
