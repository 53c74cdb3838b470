import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from webspline.bspline import BSplineBasis
from webspline.domain import DIRICHLET, NEUMANN, ROBIN, QuarterAnnulus, Rectangle, Segment
from webspline.errors import NoInnerArray, UnsupportedBoundary
from webspline.web import (AnnulusWeight, PrimitiveWeight, RConjunction, UnitWeight, WebBasis,
                           closest_index_array, extension_bound, extension_coeffs, full_arrays,
                           weight_rfunction)


def quarter_disk(**parts):
    return QuarterAnnulus(0.0, 1.0, parts=parts or None)


# --------------------------------------------------------------------------
# weights
# --------------------------------------------------------------------------

def test_annulus_weight_examples():
    w = AnnulusWeight(1.0, 2.0)
    assert w.value([[1.0, 0.0]])[0] == pytest.approx(0.0, abs=1e-15)
    assert w.value([[1.5, 0.0]])[0] == pytest.approx(2.1875)


def test_half_plane_primitive():
    piece = Segment("x=0", (0.0, 1.0), (0.0, 0.0), (-1.0, 0.0), DIRICHLET)
    assert PrimitiveWeight(piece).value([[0.3, 0.7]])[0] == pytest.approx(0.3)


def _weights():
    disk = quarter_disk(**{"x=0": DIRICHLET, "y=0": DIRICHLET, "outer": DIRICHLET})
    return [weight_rfunction(disk), AnnulusWeight(1.0, 2.0),
            weight_rfunction(Rectangle(0, 1, 0, 1)),
            weight_rfunction(quarter_disk(**{"x=0": DIRICHLET, "y=0": NEUMANN, "outer": ROBIN}))]


@pytest.mark.parametrize("w", _weights())
def test_weight_derivatives_match_finite_differences(w, rng):
    x = rng.uniform(0.1, 0.6, (20, 2)) + 0.05
    step = 1e-5
    v, g, H = w.evaluate(x)
    for mu, e in enumerate(np.eye(2)):
        fd = (w.value(x + step * e) - w.value(x - step * e)) / (2 * step)
        assert np.allclose(g[:, mu], fd, rtol=1e-6, atol=1e-6)
        fdg = (w.gradient(x + step * e) - w.gradient(x - step * e)) / (2 * step)
        assert np.allclose(H[:, :, mu], fdg, rtol=1e-5, atol=1e-5)


def test_rfunction_weight_vanishes_on_dirichlet_only(rng):
    dom = quarter_disk(**{"x=0": DIRICHLET, "y=0": DIRICHLET, "outer": NEUMANN})
    w = weight_rfunction(dom)
    t = rng.uniform(0, 1, 100)
    assert np.all(np.abs(w.value(np.stack([0 * t, t], 1))) <= 1e-14)
    assert np.all(np.abs(w.value(np.stack([t, 0 * t], 1))) <= 1e-14)
    inside = rng.uniform(0.02, 0.6, (100, 2))
    assert np.all(w.value(inside) > 0)
    a = rng.uniform(0.05, np.pi / 2 - 0.05, 50)
    arc = np.stack([np.cos(a), np.sin(a)], 1)
    assert np.all(w.value(arc) > 0)


def test_rfunction_without_dirichlet_is_unit():
    dom = quarter_disk(**{"x=0": NEUMANN, "y=0": NEUMANN, "outer": ROBIN})
    assert isinstance(weight_rfunction(dom), UnitWeight)


def test_unsupported_primitive():
    dom = Rectangle(0, 1, 0, 1)
    dom.pieces[0].kind = "spline"
    with pytest.raises(UnsupportedBoundary):
        weight_rfunction(dom)


def test_rconjunction_requires_operand():
    with pytest.raises(ValueError):
        RConjunction()


# --------------------------------------------------------------------------
# closest arrays and extension coefficients
# --------------------------------------------------------------------------

def test_closest_array_one_dimensional_example():
    inner = [[1], [2], [3], [4]]
    alpha = closest_index_array([5], inner, 2)
    assert alpha.tolist() == [3]
    idx, e = extension_coeffs([5], alpha, 2)
    assert idx[:, 0].tolist() == [3, 4]
    assert e.tolist() == pytest.approx([-1.0, 2.0])
    assert e.sum() == pytest.approx(1.0)


def test_single_block_is_the_only_candidate():
    inner = [list(i) for i in itertools.product(range(3), range(3))]
    for j in ([5, -2], [-1, 1], [3, 3]):
        assert closest_index_array(j, inner, 3).tolist() == [0, 0]


def test_node_coincides_with_j():
    idx, e = extension_coeffs([4, 7], [3, 6], 3)
    hit = np.all(idx == [4, 7], axis=1)
    assert e[hit] == pytest.approx([1.0])
    assert np.allclose(e[~hit], 0.0)


def test_no_inner_array():
    with pytest.raises(NoInnerArray):
        closest_index_array([0, 0], [[1, 1], [1, 2]], 2)


def _enumerate_closest(j, inner, n):
    """Brute-force oracle: best Chebyshev gap over all full arrays."""
    inner = {tuple(i) for i in inner}
    best = None
    lo = np.min(list(inner), axis=0)
    hi = np.max(list(inner), axis=0)
    for alpha in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
        members = itertools.product(*[range(a, a + n) for a in alpha])
        if all(m in inner for m in members):
            gap = max(max(a - jj, jj - (a + n - 1), 0) for a, jj in zip(alpha, j))
            if best is None or gap < best:
                best = gap
    return best


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 3))
def test_closest_array_minimizes_chebyshev_gap(seed, n):
    rng = np.random.default_rng(seed)
    inner = [list(i) for i in itertools.product(range(6), range(6)) if rng.uniform() < 0.85]
    if len(full_arrays(inner, n)) == 0:
        return
    j = rng.integers(-3, 9, 2)
    alpha = closest_index_array(j, inner, n)
    members = {tuple(i) for i in inner}
    assert all(tuple(alpha + np.array(o)) in members for o in itertools.product(range(n), repeat=2))
    gap = max(max(a - jj, jj - (a + n - 1), 0) for a, jj in zip(alpha, j))
    assert gap == _enumerate_closest(j, inner, n)


def _poly_oracle(j, alpha, n):
    """Extension row from explicit polynomial fitting (Vandermonde solve)."""
    m = len(j)
    nodes = np.array(list(itertools.product(*[range(a, a + n) for a in alpha])), float)
    exps = list(itertools.product(range(n), repeat=m))
    V = np.array([[np.prod(x ** np.array(p)) for p in exps] for x in nodes])
    vj = np.array([np.prod(np.asarray(j, float) ** np.array(p)) for p in exps])
    # e solves V^T e = v(j): the row reproduces every monomial at j
    return np.linalg.solve(V.T, vj)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), m=st.integers(1, 2), n=st.integers(2, 3))
def test_extension_matches_polynomial_oracle(seed, m, n):
    rng = np.random.default_rng(seed)
    alpha = rng.integers(-4, 4, m)
    j = alpha + rng.integers(-n, 2 * n, m)
    idx, e = extension_coeffs(j, alpha, n)
    # shift to the array origin for a well-conditioned oracle
    ref = _poly_oracle(j - alpha, np.zeros(m, int), n)
    assert np.allclose(e, ref, atol=1e-12, rtol=1e-12)
    for p in itertools.product(range(n), repeat=m):
        vals = np.prod(idx.astype(float) ** np.array(p), axis=1)
        assert np.dot(e, vals) == pytest.approx(np.prod(np.asarray(j, float) ** np.array(p)),
                                                rel=1e-12, abs=1e-9)


# --------------------------------------------------------------------------
# the basis
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def disk_basis():
    dom = quarter_disk(**{"x=0": DIRICHLET, "y=0": DIRICHLET, "outer": DIRICHLET})
    return WebBasis(dom, 0.125, 3)


def test_basis_sizes():
    dom = quarter_disk(**{"x=0": DIRICHLET, "y=0": NEUMANN, "outer": ROBIN})
    sizes = [WebBasis(dom, 2.0**-k, 3).size for k in range(1, 5)]
    assert sizes == [9, 24, 73, 247]


def test_extension_bound_and_sparsity(disk_basis):
    B = disk_basis
    E = B.E.tocsr()
    assert np.abs(E.data).max() <= extension_bound(3, 2)
    outer = B.index.outer_positions
    for p in outer:
        assert E[p].nnz <= 3**2
        j = B.index.K[p]
        alpha = B.alpha[tuple(j)]
        cols = E[p].indices
        members = B.index.K[B.columns[cols]]
        assert np.all((members >= alpha) & (members <= alpha + 2))


def test_prefactor_is_one_at_reference_point(disk_basis):
    B = disk_basis
    fn = B.function(5)
    xi = fn.x_i[None]
    b = BSplineBasis(3, B.h, 2).value(fn.i, xi[0])
    outer = sum(e * BSplineBasis(3, B.h, 2).value(j, xi[0]) for j, e in fn.outer_terms)
    assert fn.value(xi)[0] == pytest.approx(b + outer, rel=1e-12)


def test_definition_matches_evaluation(disk_basis, rng):
    B = disk_basis
    bs = BSplineBasis(3, B.h, 2)
    x = rng.uniform(0, 1, (200, 2))
    x = x[B.domain.inside(x)]
    w = B.weight.value(x)
    for c in (0, 7, len(B) - 1):
        fn = B.function(c)
        wi = B.weight.value(fn.x_i[None])[0]
        ref = bs.value(fn.i, x) + sum(e * bs.value(j, x) for j, e in fn.outer_terms)
        assert np.allclose(fn.value(x), w / wi * ref, atol=1e-13)


def test_unit_weight_without_outer_splines_is_plain_bspline():
    dom = Rectangle(0, 1, 0, 1, parts={"left": NEUMANN, "right": NEUMANN, "bottom": NEUMANN,
                                       "top": NEUMANN})
    B = WebBasis(dom, 0.25, 3)
    assert len(B.index.J) == 0
    bs = BSplineBasis(3, 0.25, 2)
    x = np.random.default_rng(1).uniform(0, 1, (50, 2))
    for c in range(0, len(B), 7):
        fn = B.function(c)
        assert np.allclose(fn.value(x), bs.value(fn.i, x), atol=1e-14)


def test_basis_gradient_central_differences(disk_basis, rng):
    B = disk_basis
    x = rng.uniform(0.05, 0.65, (20, 2))
    step = 1e-5
    cols = [0, 3, 11, len(B) - 2]
    g = B.eval_functions(x, cols)["grad"]
    for mu, e in enumerate(np.eye(2)):
        fd = (B.eval_functions(x + step * e, cols)["value"]
              - B.eval_functions(x - step * e, cols)["value"]) / (2 * step)
        assert np.allclose(g[..., mu], fd, rtol=1e-6, atol=1e-6)


def test_basis_hessian_central_differences(disk_basis, rng):
    B = disk_basis
    x = rng.uniform(0.05, 0.65, (10, 2))
    step = 1e-6
    H = B.eval_functions(x, derivatives=2)["hess"]
    for mu, e in enumerate(np.eye(2)):
        fd = (B.eval_functions(x + step * e)["grad"] - B.eval_functions(x - step * e)["grad"]) / (2 * step)
        assert np.allclose(H[..., mu], fd, rtol=1e-4, atol=1e-4)


def test_conformity_on_dirichlet_part(disk_basis, rng):
    B = disk_basis
    t = rng.uniform(0, 1, 34)
    a = rng.uniform(0, np.pi / 2, 33)
    pts = np.concatenate([np.stack([0 * t, t], 1), np.stack([t, 0 * t], 1),
                          np.stack([np.cos(a), np.sin(a)], 1)])
    vals = B.eval_functions(pts)["value"]
    assert np.abs(vals).max() <= 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_weighted_polynomial_reproduction(n, rng):
    dom = quarter_disk(**{"x=0": DIRICHLET, "y=0": NEUMANN, "outer": DIRICHLET})
    B = WebBasis(dom, 0.125, n)
    from webspline.domain import CellClass
    interior = B.cells.cells(CellClass.INTERIOR)
    pts = (interior[:, None, :] + rng.uniform(0, 1, (1, 6, 2))).reshape(-1, 2) * B.h
    F = B.eval_functions(pts)["value"]
    w = B.weight.value(pts)
    for p in itertools.product(range(n), repeat=2):
        target = w * pts[:, 0] ** p[0] * pts[:, 1] ** p[1]
        c, *_ = np.linalg.lstsq(F, target, rcond=None)
        assert np.abs(F @ c - target).max() <= 1e-9


def test_unextended_basis_has_all_relevant_splines():
    dom = quarter_disk(**{"x=0": DIRICHLET, "y=0": NEUMANN, "outer": ROBIN})
    B = WebBasis(dom, 0.25, 3, extended=False)
    assert len(B) == len(B.index.K)
