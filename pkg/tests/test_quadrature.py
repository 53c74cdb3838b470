import itertools

import numpy as np
import pytest

from webspline.domain import DIRICHLET, NEUMANN, ROBIN, CellClass, QuarterAnnulus, Rectangle, classify_cells
from webspline.quadrature import boundary_quadrature, cell_quadrature, domain_quadrature, gauss_box


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_gauss_box_exactness(q):
    lo, hi = np.array([0.2, -1.0]), np.array([0.7, 0.5])
    pts, wts = gauss_box(lo, hi, q)
    assert np.all(wts > 0)
    for a, b in itertools.product(range(2 * q), repeat=2):
        exact = ((hi[0] ** (a + 1) - lo[0] ** (a + 1)) / (a + 1)
                 * (hi[1] ** (b + 1) - lo[1] ** (b + 1)) / (b + 1))
        assert np.dot(wts, pts[:, 0] ** a * pts[:, 1] ** b) == pytest.approx(exact, rel=1e-12, abs=1e-14)


def test_quarter_disk_area():
    dom = QuarterAnnulus(0, 1)
    rule = domain_quadrature(classify_cells(dom, 1 / 16, 3), dom, 3, 4)
    assert rule.integrate(np.ones(len(rule))) == pytest.approx(np.pi / 4, abs=2e-3)
    assert np.all(dom.inside(rule.points))
    assert np.all(rule.weights > 0)


def test_arc_and_segment_lengths():
    dom = QuarterAnnulus(0, 1, parts={"x=0": DIRICHLET, "y=0": NEUMANN, "outer": ROBIN})
    arc = boundary_quadrature(ROBIN, dom, 1 / 8, 3)
    assert arc.integrate(np.ones(len(arc))) == pytest.approx(np.pi / 2, abs=1e-8)
    seg = boundary_quadrature(NEUMANN, dom, 1 / 8, 3)
    assert seg.integrate(np.ones(len(seg))) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(seg.normals, [0.0, -1.0])
    assert np.allclose(np.linalg.norm(arc.points, axis=1), 1.0)
    assert np.allclose(arc.normals, arc.points)


def test_boundary_rule_integrates_polynomials_on_arc():
    dom = QuarterAnnulus(0, 1, parts={"x=0": DIRICHLET, "y=0": DIRICHLET, "outer": ROBIN})
    arc = boundary_quadrature(ROBIN, dom, 1 / 4, 4)
    # integral of x^2 over the quarter arc is pi/4
    assert arc.integrate(arc.points[:, 0] ** 2) == pytest.approx(np.pi / 4, rel=1e-8)


def test_boundary_points_own_domain_cells():
    dom = QuarterAnnulus(0, 1, parts={"x=0": DIRICHLET, "y=0": NEUMANN, "outer": ROBIN})
    cells = classify_cells(dom, 0.125, 3)
    for part in (NEUMANN, ROBIN):
        br = boundary_quadrature(part, dom, 0.125, 3)
        assert all(cells[tuple(c)] != CellClass.EXTERIOR for c in br.cells)


def test_empty_part_gives_empty_rule():
    dom = Rectangle(0, 1, 0, 1)
    assert len(boundary_quadrature(ROBIN, dom, 0.25, 3)) == 0


def test_exterior_cell_raises():
    with pytest.raises(ValueError):
        cell_quadrature((5, 5), CellClass.EXTERIOR, QuarterAnnulus(0, 1), 0.25)


def test_cut_cell_volume_converges_with_depth():
    dom = QuarterAnnulus(0, 1)
    cells = classify_cells(dom, 0.25, 3)
    errs = []
    for depth in (1, 3, 5):
        rule = domain_quadrature(cells, dom, 2, depth)
        errs.append(abs(rule.integrate(np.ones(len(rule))) - np.pi / 4))
    assert errs[2] < errs[0]
    assert errs[2] <= 1e-3
