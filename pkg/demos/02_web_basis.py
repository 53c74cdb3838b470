"""Weights, extension coefficients and the WEB basis itself."""
import numpy as np

from webspline import DIRICHLET, NEUMANN, ROBIN, QuarterAnnulus, WebBasis, extension_coeffs
from webspline.web import AnnulusWeight

# the annulus weight vanishes on both arcs
w = AnnulusWeight(1.0, 2.0)
print("annulus weight at r = 1, 1.5, 2:", w.value([[1.0, 0.0], [1.5, 0.0], [2.0, 0.0]]))

# extrapolating a linear spline to the node one step to the right
idx, e = extension_coeffs([5], [3], 2)
print("extension of j=5 from {3, 4}:", dict(zip(idx[:, 0], e)))

dom = QuarterAnnulus(0, 1, parts={"x=0": DIRICHLET, "y=0": NEUMANN, "outer": ROBIN})
basis = WebBasis(dom, 0.125, 3)
print(f"{len(basis)} WEB splines, {len(basis.index.J)} outer splines absorbed")
print("max |extension coefficient|:", np.abs(basis.E.data).max())

# every basis function vanishes on the Dirichlet side x = 0
t = np.linspace(0, 1, 11)
side = np.stack([0 * t, t], 1)
print("max |B_i| on x=0:", np.abs(basis.eval_functions(side, derivatives=0)["value"]).max())
