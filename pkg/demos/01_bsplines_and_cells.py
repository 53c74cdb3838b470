"""Cardinal B-splines, the grid classification and the index sets of a
WEB basis on the quarter disk."""
import numpy as np

from webspline import BSplineBasis, CellClass, QuarterAnnulus, build_index_sets, classify_cells

# the quadratic cardinal B-spline and its partition of unity
x = np.linspace(0, 3, 7)
B = BSplineBasis(3, 1.0, 1)
print("b(x) at", x, "=", np.round([B.value((0,), [t]) for t in x], 4))

B2 = BSplineBasis(3, 0.25, 2)
pts = np.random.default_rng(0).uniform(0, 1, (5, 2))
print("sum of active tensor splines:", B2.local(pts)["value"].sum(axis=1))

# interior / boundary / exterior cells
disk = QuarterAnnulus(0.0, 1.0)
for h in (0.5, 0.25, 0.125):
    cells = classify_cells(disk, h, 3)
    counts = {c.name: len(cells.cells(c)) for c in CellClass}
    idx = build_index_sets(cells, 3)
    print(f"h={h:<6g} cells {counts}  |K|={len(idx.K)} |I|={len(idx.I)} |J|={len(idx.J)}")
