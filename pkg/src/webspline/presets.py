"""Built-in problems: the population model and manufactured test cases.

Boundary data are given here in the *normalized* form shared by both
species (``nu.P grad u_i = g_i``, ``nu.P grad u_i + sigma_i u_i = h_i``) and
converted to the literal convention of :class:`ProblemData` by
:func:`_from_normalized`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import ProblemData, ScalarFunction
from .domain import DIRICHLET, NEUMANN, ROBIN, Interval, QuarterAnnulus, Rectangle
from .errors import UnknownKind
from .web import AnnulusWeight, PrimitiveWeight, ProductWeight, weight_rfunction


@dataclass
class ProblemPreset:
    name: str
    domain: object
    data: ProblemData
    weight: object
    exact: tuple | None = None
    warn_nonelliptic: bool = False
    notes: str = ""
    params: dict = field(default_factory=dict)

    @property
    def dirichlet_only(self):
        return set(self.domain.parts_present()) == {DIRICHLET}

    @property
    def has_neumann(self):
        return NEUMANN in self.domain.parts_present()

    @property
    def has_robin(self):
        return ROBIN in self.domain.parts_present()


def _from_normalized(gn, hn, sn):
    """Literal ``(g, h, sigma)`` pairs from normalized boundary data."""
    sign = (1.0, -1.0)
    g = tuple((lambda x, i=i: sign[i] * gn[i](x)) for i in range(2))
    h = tuple((lambda x, i=i: sign[i] * hn[i](x)) for i in range(2))
    s = tuple((lambda x, i=i: sign[i] * sn[i](x)) for i in range(2))
    return g, h, s


def _const(c):
    return lambda x: np.full(len(np.atleast_2d(x)), float(c))


# --------------------------------------------------------------------------
# population dynamics
# --------------------------------------------------------------------------

def _population_data(sigma):
    def P(x):
        X, Y = x[:, 0], x[:, 1]
        out = np.empty((len(x), 2, 2))
        out[:, 0, 0] = X**2 * Y
        out[:, 0, 1] = out[:, 1, 0] = Y
        out[:, 1, 1] = Y
        return out

    def divP(x):
        X, Y = x[:, 0], x[:, 1]
        return np.stack([2 * X * Y + 1.0, np.ones(len(x))], axis=1)

    tau = (lambda x: 2.0 * x[:, 0] ** 2, lambda x: 0.05 * x[:, 1])
    f = (lambda x: -np.exp(x[:, 0] + x[:, 1]),) * 2
    g, h, s = _from_normalized((_const(1.0),) * 2, (_const(0.0),) * 2, (_const(sigma[0]), _const(sigma[1])))
    lift = ScalarFunction(lambda x: x[:, 1].copy(),
                          lambda x: np.tile([0.0, 1.0], (len(x), 1)),
                          lambda x: np.zeros((len(x), 2, 2)))
    return ProblemData(2, P, tau, f, sigma=s, g=g, hdat=h, U=(lift, lift), divP=divP)


def preset_population(sigma=(1.0, 1.0)):
    """Adult/child population model on the quarter disk.

    ``u = y`` on ``x = 0``, unit outflux on ``y = 0`` and a homogeneous Robin
    condition with coefficients `sigma` on the arc.  The weight is ``w = x``.
    """
    domain = QuarterAnnulus(0.0, 1.0, parts={"x=0": DIRICHLET, "y=0": NEUMANN, "outer": ROBIN},
                            name="quarter_disk")
    data = _population_data(sigma)
    return ProblemPreset("population", domain, data, weight_rfunction(domain), None, True,
                         "P = [[x^2 y, y], [y, y]] is indefinite inside the unit disk",
                         {"sigma": tuple(sigma)})


def preset_population_annulus(sigma=(1.0, 1.0)):
    """The population equations on the quarter annulus ``1 <= r <= 2``.

    The weight ``(r^2 - 1)(4 - r^2)`` vanishes on both arcs, which therefore
    carry the Dirichlet data ``u = y``; ``y = 0`` keeps the unit outflux and
    ``x = 0`` the homogeneous Robin condition.
    """
    domain = QuarterAnnulus(1.0, 2.0, parts={"inner": DIRICHLET, "outer": DIRICHLET,
                                             "y=0": NEUMANN, "x=0": ROBIN})
    data = _population_data(sigma)
    return ProblemPreset("population_annulus", domain, data, AnnulusWeight(1.0, 2.0), None, True,
                         "P = [[x^2 y, y], [y, y]] is indefinite wherever x < 1",
                         {"sigma": tuple(sigma)})


# --------------------------------------------------------------------------
# manufactured solutions
# --------------------------------------------------------------------------

def _trig_term(a, b, ytrig):
    """``sin(a x) Y(b y)`` with Y = sin or cos, with gradient and Hessian."""
    Ys, dY = (np.sin, np.cos) if ytrig == "sin" else (np.cos, lambda t: -np.sin(t))

    def val(x):
        return np.sin(a * x[:, 0]) * Ys(b * x[:, 1])

    def grad(x):
        X, Y = x[:, 0], x[:, 1]
        return np.stack([a * np.cos(a * X) * Ys(b * Y), b * np.sin(a * X) * dY(b * Y)], axis=1)

    def hess(x):
        X, Y = x[:, 0], x[:, 1]
        H = np.empty((len(x), 2, 2))
        H[:, 0, 0] = -a * a * np.sin(a * X) * Ys(b * Y)
        H[:, 1, 1] = -b * b * np.sin(a * X) * Ys(b * Y)
        H[:, 0, 1] = H[:, 1, 0] = a * b * np.cos(a * X) * dY(b * Y)
        return H

    return val, grad, hess


def _plus(fa, fb):
    return ScalarFunction(lambda x: fa[0](x) + fb[0](x), lambda x: fa[1](x) + fb[1](x),
                          lambda x: fa[2](x) + fb[2](x))


def _poly(kind):
    if kind == "1+x+y":
        return (lambda x: 1.0 + x[:, 0] + x[:, 1], lambda x: np.tile([1.0, 1.0], (len(x), 1)),
                lambda x: np.zeros((len(x), 2, 2)))

    def hess(x):
        H = np.zeros((len(x), 2, 2))
        H[:, 0, 1] = H[:, 1, 0] = 1.0
        return H

    return (lambda x: x[:, 0] * x[:, 1], lambda x: x[:, ::-1].copy(), hess)


def _square_normal(x, tol=1e-9):
    nu = np.zeros_like(x)
    nu[np.abs(x[:, 0]) <= tol, 0] = -1.0
    nu[np.abs(x[:, 0] - 1.0) <= tol, 0] = 1.0
    nu[np.abs(x[:, 1]) <= tol, 1] = -1.0
    nu[np.abs(x[:, 1] - 1.0) <= tol, 1] = 1.0
    return nu


def _square_problem(name, parts, ytrig, tau, sigma):
    """Manufactured pair on the unit square with ``P = I``.

    ``u_1 = sin(pi x) Y(pi y) + 1 + x + y`` and
    ``u_2 = sin(2 pi x) Y(pi y) + x y``; lifts ``U_1 = 1 + x + y`` and
    ``U_2 = x y`` match the exact values wherever ``sin(k pi x) Y(pi y)``
    vanishes, which covers every Dirichlet side used here.
    """
    domain = Rectangle(0, 1, 0, 1, parts=parts, name="unit_square")
    t1, t2 = tau
    p1, p2 = _poly("1+x+y"), _poly("xy")
    w1 = _trig_term(np.pi, np.pi, ytrig)
    w2 = _trig_term(2 * np.pi, np.pi, ytrig)
    u = (_plus(w1, p1), _plus(w2, p2))
    lifts = (ScalarFunction(*p1), ScalarFunction(*p2))
    lap = (lambda x: -2 * np.pi**2 * w1[0](x), lambda x: -5 * np.pi**2 * w2[0](x))

    def eye(x):
        return np.broadcast_to(np.eye(2), (len(x), 2, 2)).copy()

    # literal strong form: -lap u1 - t2 u2 = f1, lap u2 + t1 u1 = f2
    f = (lambda x: -lap[0](x) - t2 * u[1](x), lambda x: lap[1](x) + t1 * u[0](x))

    def flux(i):
        return lambda x: np.sum(_square_normal(x) * u[i].evaluate(x)["grad"], axis=1)

    gn = (flux(0), flux(1))
    hn = tuple((lambda x, i=i: flux(i)(x) + sigma[i] * u[i](x)) for i in range(2))
    g, h, s = _from_normalized(gn, hn, (_const(sigma[0]), _const(sigma[1])))
    data = ProblemData(2, eye, (_const(t1), _const(t2)), f, sigma=s, g=g, hdat=h, U=lifts,
                       divP=lambda x: np.zeros((len(x), 2)))
    # smooth product of line factors; the R-conjunction kinks at corners cost order
    weight = ProductWeight(*(PrimitiveWeight(p) for p in domain.pieces_of(DIRICHLET)))
    return ProblemPreset(name, domain, data, weight, u, params={"tau": tau, "sigma": sigma})


def _poisson1d():
    domain = Interval(0.0, 1.0)
    one = ScalarFunction(lambda x: 0.5 * x[:, 0] * (1 - x[:, 0]),
                         lambda x: (0.5 - x[:, 0])[:, None],
                         lambda x: np.full((len(x), 1, 1), -1.0))
    zero = ScalarFunction.constant(0.0, 1)
    data = ProblemData(1, lambda x: np.ones((len(x), 1, 1)), (_const(0.0), _const(0.0)),
                       (_const(1.0), _const(-1.0)), U=(zero, zero),
                       divP=lambda x: np.zeros((len(x), 1)))
    weight = ProductWeight(*(PrimitiveWeight(p) for p in domain.pieces))
    return ProblemPreset("poisson1d", domain, data, weight, (one, one),
                         notes="-u'' = 1 on (0, 1), u(0) = u(1) = 0, for both species")


def preset_manufactured(kind, tau=(1.0, 1.0), sigma=(1.0, 1.0)):
    """Manufactured problem with known exact solution.

    kind : {'poisson1d', 'coupled_smooth', 'dirichlet_only', 'dirichlet_neumann'}
    """
    if kind == "poisson1d":
        return _poisson1d()
    if kind == "coupled_smooth":
        parts = {"left": DIRICHLET, "bottom": NEUMANN, "top": NEUMANN, "right": ROBIN}
        return _square_problem(kind, parts, "cos", tau, sigma)
    if kind == "dirichlet_only":
        return _square_problem(kind, {}, "sin", tau, sigma)
    if kind == "dirichlet_neumann":
        parts = {"left": DIRICHLET, "right": DIRICHLET, "bottom": NEUMANN, "top": NEUMANN}
        return _square_problem(kind, parts, "cos", tau, sigma)
    raise UnknownKind(f"unknown manufactured problem {kind!r}")


PRESETS = ("population", "population_annulus", "poisson1d", "coupled_smooth",
           "dirichlet_only", "dirichlet_neumann")


def get_preset(name, **kwargs):
    """Look up a preset by its CLI name."""
    if name == "population":
        return preset_population(**kwargs)
    if name == "population_annulus":
        return preset_population_annulus(**kwargs)
    if name in PRESETS:
        return preset_manufactured(name, **kwargs)
    raise UnknownKind(f"unknown problem {name!r}; choose from {', '.join(PRESETS)}")
