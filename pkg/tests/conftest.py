"""Shared, cached problem builds (solves are the expensive part)."""
from functools import lru_cache

import numpy as np
import pytest

from webspline import (DiscreteSolution, SolverConfig, WebBasis, assemble, get_preset,
                       solve_block)
from webspline.assembly import quadrature_for


@lru_cache(maxsize=None)
def preset(name):
    return get_preset(name)


@lru_cache(maxsize=None)
def solved(name, h, n=3, tol=1e-12):
    """``(preset, basis, system, solution)`` for a preset at grid width `h`."""
    pr = preset(name)
    basis = WebBasis(pr.domain, h, n, pr.weight)
    system = assemble(pr.data, basis, rules=quadrature_for(basis))
    x, _ = solve_block(system, SolverConfig(tol=tol))
    return pr, basis, system, DiscreteSolution(basis, pr.data, x)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
