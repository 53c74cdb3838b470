"""Upper and lower a-posteriori bounds, term by term."""
from webspline import DiscreteSolution, WebBasis, assemble, get_preset, solve_block
from webspline import estimate as est

pr = get_preset("coupled_smooth")
exact = est.FunctionPair(pr.exact)
for h in (0.25, 0.125):
    basis = WebBasis(pr.domain, h, 3, pr.weight)
    x, _ = solve_block(assemble(pr.data, basis))
    sol = DiscreteSolution(basis, pr.data, x)

    flux = est.reconstruct_flux(sol)           # L2-projected P grad u_h
    bound = est.upper_bound(sol, flux, reference=exact)
    low = est.lower_bound(sol)                 # energy drop to the h/2 solution
    err = est.energy_error(sol, exact)

    print(f"\nh = {h}: {low:.3e} <= {err:.3e} <= {bound.total:.3e}")
    for name in est.TERMS:
        print(f"  {name:17s} {bound.term(name):.3e}")
    print("  efficiency of the upper bound:", bound.total / err)
