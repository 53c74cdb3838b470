"""The adult/child population model on the quarter disk.

The diffusion matrix [[x^2 y, y], [y, y]] has determinant y^2 (x^2 - 1),
which is negative everywhere inside the unit disk, so the problem is not
elliptic there.  The solver still reaches its tolerance (the block system
is nonsymmetric and indefinite anyway), but the strong residual does not
decrease under refinement.
"""
import numpy as np

from webspline import DiscreteSolution, WebBasis, assemble, get_preset, solve_block
from webspline.estimate import residual_epsilon

pr = get_preset("population")
c1, c2 = pr.data.sample_ellipticity(np.random.default_rng(0).uniform(0, 0.7, (400, 2)))
print(f"Rayleigh quotients of P range over [{c1:.3f}, {c2:.3f}]")

for h in (0.5, 0.25, 0.125, 0.0625):
    basis = WebBasis(pr.domain, h, 3, pr.weight)
    x, rep = solve_block(assemble(pr.data, basis))
    sol = DiscreteSolution(basis, pr.data, x)
    print(f"h={h:<7g} dofs={2 * len(basis):5d} {rep.method_used:>6} "
          f"res={rep.final_rel_residual:.1e} eps_res={residual_epsilon(sol):.3e}")
