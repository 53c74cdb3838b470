import warnings

import numpy as np
import pytest

from conftest import preset, solved
from webspline import DiscreteSolution, WebBasis, assemble, solve_block, SolverConfig
from webspline import estimate as est
from webspline.errors import ConfigError, SecondDerivativeUnavailable
from webspline.presets import preset_manufactured


def _bound(name, h, flux="projection", **kw):
    pr, basis, system, sol = solved(name, h)
    exact = est.FunctionPair(pr.exact) if pr.exact is not None else None
    return pr, sol, est.upper_bound(sol, est.reconstruct_flux(sol, flux), reference=exact, **kw)


@pytest.mark.parametrize("flux", ["projection", "identity"])
def test_solution_in_space_gives_vanishing_terms(flux):
    # u = x(1 - x)/2 is the weight times a constant
    pr, sol, bd = _bound("poisson1d", 0.25, flux)
    for t in bd.terms:
        for name in est.TERMS:
            assert 0 <= t[name] <= 1e-9, name
    assert bd.coupling_mode == "oracle"


@pytest.mark.parametrize("name,special", [("dirichlet_only", est.upper_bound_dirichlet),
                                          ("dirichlet_neumann", est.upper_bound_dirichlet_neumann)])
def test_specializations_equal_general_path(name, special):
    pr, basis, system, sol = solved(name, 0.25)
    flux = est.reconstruct_flux(sol)
    ref = est.FunctionPair(pr.exact)
    rules = est.fine_rules(basis)
    general = est.upper_bound(sol, flux, reference=ref, rules=rules)
    short = special(sol, flux, reference=ref, rules=rules)
    for a, b in zip(general.terms, short.terms):
        for k in est.TERMS:
            assert abs(a[k] - b[k]) <= 1e-12 * max(1.0, abs(a[k]))


def test_specialization_rejects_other_parts():
    pr, basis, system, sol = solved("coupled_smooth", 0.25)
    flux = est.reconstruct_flux(sol)
    with pytest.raises(ConfigError):
        est.upper_bound_dirichlet(sol, flux)
    with pytest.raises(ConfigError):
        est.upper_bound_dirichlet_neumann(sol, flux)


def test_sandwich_on_smooth_problem():
    pr, sol, bd = _bound("coupled_smooth", 0.125)
    err = est.energy_error(sol, est.FunctionPair(pr.exact))
    low = est.lower_bound(sol)
    assert low <= err * (1 + 1e-8)
    assert err <= bd.total
    assert est.minimal_constant(err, bd) <= 1.0


def test_terms_stable_under_finer_quadrature():
    pr, basis, system, sol = solved("coupled_smooth", 0.25)
    flux = est.reconstruct_flux(sol)
    ref = est.FunctionPair(pr.exact)
    a = est.upper_bound(sol, flux, reference=ref, rules=est.fine_rules(basis, 2))
    b = est.upper_bound(sol, flux, reference=ref, rules=est.fine_rules(basis, 4))
    for name in est.TERMS:
        ta, tb = a.term(name), b.term(name)
        assert abs(ta - tb) <= 0.01 * max(abs(tb), 1e-12), name


def test_theta_tilde_partition_monotone():
    pr, basis, system, sol = solved("population", 0.25)
    x = est.fine_rules(basis)[0].points
    prev = None
    for theta in (1e-4, 1e-3, 1e-2, 1e-1):
        part = est.omega_tilde(pr.data, x, theta)
        assert np.all(part.inside ^ part.outside)
        if prev is not None:
            assert np.all(part.inside <= prev.inside)
        prev = part
    with pytest.raises(ConfigError):
        est.omega_tilde(pr.data, x, 0.0)


def test_degenerate_term_grows_with_threshold():
    pr, basis, system, sol = solved("population", 0.25)
    flux = est.reconstruct_flux(sol)
    rules = est.fine_rules(basis)
    vals = [est.upper_bound(sol, flux, theta, rules=rules).term("t_degenerate")
            for theta in (1e-3, 1e-2, 1e-1)]
    assert vals[0] <= vals[1] <= vals[2]


def test_default_theta_tilde():
    pr = preset("coupled_smooth")
    x = np.random.default_rng(0).uniform(0, 1, (50, 2))
    assert est.default_theta_tilde(pr.data, x) == pytest.approx(0.01)


def test_projection_reproduces_polynomial_flux():
    pr, basis, system, _ = solved("coupled_smooth", 0.25)
    lift = DiscreteSolution(basis, pr.data, np.zeros(2 * basis.size))
    flux = est.reconstruct_flux(lift)
    x = np.random.default_rng(2).uniform(0, 1, (40, 2))
    v0, v1 = flux.evaluate(0, x), flux.evaluate(1, x)
    assert np.allclose(v0["value"], 1.0, atol=1e-10)
    assert np.allclose(v1["value"], x[:, ::-1], atol=1e-10)
    assert np.allclose(v0["div"], 0.0, atol=1e-8)


def test_flux_term_decreases_with_h():
    a = _bound("coupled_smooth", 0.25)[2].term("t_flux")
    b = _bound("coupled_smooth", 0.125)[2].term("t_flux")
    assert b < a


def test_lower_bound_with_discrete_solution_is_zero():
    pr, basis, system, sol = solved("coupled_smooth", 0.25)
    assert est.lower_bound(sol, [sol]) == 0.0


def test_energy_identity_on_nested_spaces():
    pr, basis, system, coarse = solved("coupled_smooth", 0.25)
    _, fbasis, fsystem, fine = solved("coupled_smooth", 0.125)
    # the fine solution is Galerkin-exact for its own assembly rule
    rules = fsystem.quad, fsystem.bquad
    gap = est.energy(coarse, pr.data, rules) - est.energy(fine, pr.data, rules)
    half = 0.5 * est.energy_error(coarse, fine, rules)
    assert gap == pytest.approx(half, rel=1e-8)


def test_residual_epsilon_decreases():
    eps = [est.residual_epsilon(solved("coupled_smooth", h)[3]) for h in (0.5, 0.25, 0.125)]
    assert eps[0] > eps[1] > eps[2]


def test_residual_epsilon_of_in_space_solution():
    assert est.residual_epsilon(solved("poisson1d", 0.25)[3]) <= 1e-10


def test_lower_bound_with_exact_minimizer_equals_error():
    pr, basis, system, sol = solved("coupled_smooth", 0.125)
    exact = est.FunctionPair(pr.exact)
    rules = est.fine_rules(basis, 4)
    low = est.lower_bound(sol, [exact], rules)
    assert low == pytest.approx(est.energy_error(sol, exact, rules), rel=1e-8)


def test_order_two_has_no_strong_residual():
    pr, basis, system, sol = solved("poisson1d", 0.25, n=2)
    with pytest.raises(SecondDerivativeUnavailable):
        est.residual_epsilon(sol)
    with pytest.raises(SecondDerivativeUnavailable):
        est.reconstruct_flux(sol, "identity")


def test_record_format():
    pr, sol, bd = _bound("coupled_smooth", 0.25)
    rec = bd.to_record()
    assert set(rec) >= {f"{t}_{i}" for t in est.TERMS for i in (1, 2)}
    assert float(rec["upper"]) == bd.total
    assert rec["lower"] == ""
    assert "t_flux_1=" in bd.to_text()


def test_nonpositive_robin_coefficient_warns():
    pr = preset_manufactured("coupled_smooth", sigma=(-1.0, 1.0))
    basis = WebBasis(pr.domain, 0.5, 3, pr.weight)
    x, _ = solve_block(assemble(pr.data, basis), SolverConfig(tol=1e-10))
    sol = DiscreteSolution(basis, pr.data, x)
    with pytest.warns(UserWarning):
        bd = est.upper_bound(sol, est.reconstruct_flux(sol))
    assert bd.term("t_robin") >= 0


def test_indefinite_diffusion_is_noted():
    pr, sol, bd = _bound("population", 0.25)
    assert bd.notes and all(t["t_flux"] >= 0 for t in bd.terms)
    assert bd.coupling_mode == "omitted"


def test_unknown_modes():
    pr, basis, system, sol = solved("coupled_smooth", 0.5)
    with pytest.raises(ConfigError):
        est.reconstruct_flux(sol, "raviart")
    with pytest.raises(ConfigError):
        est.upper_bound(sol, est.reconstruct_flux(sol), reference=sol, coupling="guess")
