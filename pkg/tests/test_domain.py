import itertools

import numpy as np
import pytest

from webspline.domain import (DIRICHLET, NEUMANN, ROBIN, CellClass, Interval, QuarterAnnulus,
                              Rectangle, build_index_sets, classify_cells)
from webspline.errors import DegenerateDomain


@pytest.fixture(scope="module")
def quarter_disk():
    return QuarterAnnulus(0.0, 1.0)


def test_quarter_disk_cell_examples(quarter_disk):
    cells = classify_cells(quarter_disk, 0.25, 3)
    assert cells[(0, 0)] == CellClass.INTERIOR
    assert cells[(3, 3)] == CellClass.EXTERIOR
    assert cells[(3, 0)] == CellClass.BOUNDARY


def test_exact_and_sampled_classification_agree(quarter_disk):
    """The analytic quarter-disk test against the generic lattice test."""
    from webspline.domain import Domain
    for h in (0.5, 0.25, 0.125):
        cells = classify_cells(quarter_disk, h, 3)
        for idx in np.ndindex(*cells.status.shape):
            l = cells.lmin + np.array(idx)
            lo, hi = h * l, h * (l + 1)
            sampled = Domain.box_status(quarter_disk, lo, hi)
            exact = CellClass(int(cells.status[idx]))
            # the lattice can miss a thin sliver but never contradicts a sure answer
            if sampled == CellClass.INTERIOR:
                assert exact != CellClass.EXTERIOR
            if exact == CellClass.INTERIOR:
                assert sampled == CellClass.INTERIOR


def test_boundary_cells_really_straddle(quarter_disk):
    h = 0.125
    cells = classify_cells(quarter_disk, h, 3)
    s = (np.arange(32) + 0.5) / 32
    pts = np.array(list(itertools.product(s, s)))
    for l in cells.cells(CellClass.BOUNDARY):
        flags = quarter_disk.inside(h * (l + pts))
        corners = quarter_disk.inside(h * (l + np.array(list(itertools.product((0, 1), repeat=2)))))
        assert flags.any() or corners.any()
        assert not flags.all() or not corners.all()
    for l in cells.cells(CellClass.INTERIOR):
        assert quarter_disk.inside(h * (l + pts)).all()
    for l in cells.cells(CellClass.EXTERIOR):
        assert not quarter_disk.inside(h * (l + pts)).any()


def test_refinement_never_turns_interior_into_exterior(quarter_disk, rng):
    pts = rng.uniform(0, 1, (500, 2))
    prev = None
    for h in (0.5, 0.25, 0.125, 0.0625):
        cells = classify_cells(quarter_disk, h, 3)
        tags = np.array([cells[tuple(l)] for l in np.floor(pts / h).astype(int)])
        if prev is not None:
            assert not np.any((prev == CellClass.INTERIOR) & (tags == CellClass.EXTERIOR))
        prev = tags


def test_interval_index_sets():
    dom = Interval(0.0, 1.0)
    cells = classify_cells(dom, 0.5, 2)
    idx = build_index_sets(cells, 2)
    assert idx.K[:, 0].tolist() == [-1, 0, 1]
    assert idx.I[:, 0].tolist() == [-1, 0, 1]
    assert len(idx.J) == 0


def test_quarter_disk_index_sets(quarter_disk):
    cells = classify_cells(quarter_disk, 0.25, 3)
    idx = build_index_sets(cells, 3)
    assert len(idx.J) > 0
    K = {tuple(k) for k in idx.K}
    assert K == {tuple(k) for k in idx.I} | {tuple(j) for j in idx.J}
    assert not ({tuple(k) for k in idx.I} & {tuple(j) for j in idx.J})
    n = 3
    offsets = list(itertools.product(range(n), repeat=2))
    for r, i in enumerate(idx.I):
        cell = idx.cell_of_inner[r]
        assert cells[cell] == CellClass.INTERIOR
        assert np.all(cell - i >= 0) and np.all(cell - i < n)
        # the smallest interior offset in lexicographic order
        first = next(o for o in offsets if cells[i + np.array(o)] == CellClass.INTERIOR)
        assert tuple(cell - i) == first
        assert np.allclose(idx.center_of_inner[r], 0.25 * (cell + 0.5))
    for j in idx.J:
        assert all(cells[j + np.array(o)] != CellClass.INTERIOR for o in offsets)
        assert any(cells[j + np.array(o)] == CellClass.BOUNDARY for o in offsets)


def test_exterior_only_index_not_relevant(quarter_disk):
    cells = classify_cells(quarter_disk, 0.25, 3)
    idx = build_index_sets(cells, 3)
    assert (10, 10) not in idx.position
    assert (-5, 0) not in idx.position


def test_degenerate_domain():
    with pytest.raises(DegenerateDomain):
        classify_cells(Rectangle(0, 0.1, 0, 0.1), 0.5, 3)


def test_boundary_parts_quarter_disk(rng):
    dom = QuarterAnnulus(0, 1, parts={"x=0": DIRICHLET, "y=0": NEUMANN, "outer": ROBIN})
    assert dom.boundary_part([[0.0, 0.5]])[0] == DIRICHLET
    assert dom.boundary_part([[0.5, 0.0]])[0] == NEUMANN
    t = rng.uniform(0.01, np.pi / 2 - 0.01, 50)
    assert np.all(dom.boundary_part(np.stack([np.cos(t), np.sin(t)], 1)) == ROBIN)
    assert dom.boundary_part([[0.3, 0.3]])[0] == 0
    # corner shared by Dirichlet and Robin pieces goes to Dirichlet
    assert dom.boundary_part([[0.0, 1.0]])[0] == DIRICHLET


def test_boundary_lengths():
    dom = QuarterAnnulus(1.0, 2.0)
    lengths = {p.name: p.length for p in dom.pieces}
    assert lengths["outer"] == pytest.approx(np.pi)
    assert lengths["inner"] == pytest.approx(np.pi / 2)
    assert lengths["x=0"] == pytest.approx(1.0)
