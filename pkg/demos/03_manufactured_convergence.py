"""Solve the manufactured coupled problem on a sequence of grids and watch
the energy error fall at the expected rate."""
import numpy as np

from webspline import DiscreteSolution, WebBasis, assemble, energy_error, get_preset, solve_block
from webspline.estimate import FunctionPair, residual_epsilon

pr = get_preset("coupled_smooth")
exact = FunctionPair(pr.exact)
hs, errs = [], []
print(f"{'h':>8} {'dofs':>6} {'its':>5} {'method':>8} {'energy err':>12} {'eps_res':>10}")
for h in (0.5, 0.25, 0.125, 0.0625):
    basis = WebBasis(pr.domain, h, 3, pr.weight)
    system = assemble(pr.data, basis)
    x, rep = solve_block(system)
    sol = DiscreteSolution(basis, pr.data, x)
    err = energy_error(sol, exact)
    hs.append(h)
    errs.append(err)
    print(f"{h:8g} {2 * len(basis):6d} {rep.iterations:5d} {rep.method_used:>8} "
          f"{err:12.3e} {residual_epsilon(sol):10.3e}")

print("observed order in a(e, e):", np.polyfit(np.log(hs), np.log(errs), 1)[0])
