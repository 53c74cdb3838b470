"""Weighted extended B-spline (WEB-spline) Galerkin solver for coupled
non-cooperative elliptic systems, with a-posteriori error bounds.

Typical use::

    from webspline import get_preset, WebBasis, assemble, solve_block, DiscreteSolution

    pr = get_preset("coupled_smooth")
    basis = WebBasis(pr.domain, 0.125, 3, pr.weight)
    system = assemble(pr.data, basis)
    x, report = solve_block(system)
    u = DiscreteSolution(basis, pr.data, x)
"""
from .assembly import BlockSystem, DiscreteSolution, ProblemData, ScalarFunction, assemble, energy_functional
from .bspline import BSplineBasis, eval_cardinal, eval_cardinal_derivative, eval_gradient, eval_tensor
from .domain import (DIRICHLET, NEUMANN, ROBIN, CellClass, CellMap, Interval, QuarterAnnulus,
                     Rectangle, build_index_sets, classify_cells)
from .errors import *  # noqa: F401,F403
from .estimate import (EstimatorBreakdown, FluxReconstruction, FunctionPair, OmegaTildePartition,
                       energy, energy_error, lower_bound, omega_tilde, reconstruct_flux,
                       residual_epsilon, upper_bound, upper_bound_dirichlet,
                       upper_bound_dirichlet_neumann)
from .presets import PRESETS, ProblemPreset, get_preset, preset_manufactured, preset_population
from .quadrature import QuadratureRule, boundary_quadrature, cell_quadrature, domain_quadrature
from .solver import SolveReport, SolverConfig, solve_block, solve_linear, ssor_cg
from .web import (AnnulusWeight, ProductWeight, RConjunction, UnitWeight, WebBasis,
                  closest_index_array, extension_bound, extension_coeffs, weight_rfunction)

__version__ = "0.1.0"
