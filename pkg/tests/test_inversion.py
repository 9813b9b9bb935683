from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from romscatter.experiments import DEFAULT_TRUE_POTENTIAL
from romscatter.forward import SpatialGrid
from romscatter.inversion import (IllPosedWarning, LSKernel, PiecewiseConstantBasis,
                                  assemble_kernel, misfit, tikhonov_path, tikhonov_solve)

ALPHAS = [10.0**p for p in range(-4, 3)]


def test_discrete_identity_with_true_states(default_data, free_data, grid):
    # f - f0 = 1/(2ik) sum_x w u0 u (q - q0) holds exactly on the grid; the
    # tolerance covers rounding in the two n=1000 solves
    spec, states = default_data
    spec0, states0 = free_data
    q = DEFAULT_TRUE_POTENTIAL.on(grid)
    for i, k in enumerate(spec.wavenumbers):
        lhs = spec.f[i] - spec0.f[i]
        rhs = np.sum(grid.weights * states0[i].values * states[i].values * q) / (2j * k)
        assert abs(lhs - rhs) < 1e-9 * abs(lhs)


def test_kernel_consistent_with_projected_potential(default_data, free_data, grid):
    spec, states = default_data
    spec0, states0 = free_data
    basis = PiecewiseConstantBasis(100)
    K = assemble_kernel(states0, states, spec, spec0, basis, grid)
    qc = basis.project(DEFAULT_TRUE_POTENTIAL.on(grid), grid)
    # piecewise-constant projection error only
    assert np.linalg.norm(K.K @ qc - K.rhs) < 5e-3 * np.linalg.norm(K.rhs)


def test_quadrature_partition_of_unity(grid):
    P = PiecewiseConstantBasis(100).quadrature(grid)
    assert np.isclose(P.sum(), 1.0, rtol=1e-14)
    assert np.allclose(P.sum(axis=0), 0.01, rtol=1e-12)
    P2 = PiecewiseConstantBasis(10, (0.2, 0.6)).quadrature(grid)
    assert np.isclose(P2.sum(), 0.4, rtol=1e-12)


def test_project_constant(grid):
    basis = PiecewiseConstantBasis(20)
    assert np.allclose(basis.project(np.full(grid.n + 1, 3.0), grid), 3.0)
    with pytest.raises(ValueError):
        PiecewiseConstantBasis(0)


def _random_kernel(rng, m=10, nq=30):
    K = rng.normal(size=(m, nq)) + 1j * rng.normal(size=(m, nq))
    rhs = rng.normal(size=m) + 1j * rng.normal(size=m)
    return LSKernel(K, rhs, PiecewiseConstantBasis(nq), np.arange(1.0, m + 1))


def test_zero_rhs_gives_zero(rng):
    kern = _random_kernel(rng)
    kern = LSKernel(kern.K, np.zeros_like(kern.rhs), kern.basis, kern.wavenumbers)
    assert np.all(tikhonov_path(kern, ALPHAS) == 0.0)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_tikhonov_monotone(seed):
    kern = _random_kernel(np.random.default_rng(seed))
    path = tikhonov_path(kern, ALPHAS)
    norms = np.linalg.norm(path, axis=1)
    mis = [misfit(kern, p) for p in path]
    assert np.all(np.diff(norms) <= 1e-12 * norms[0])
    assert np.all(np.diff(mis) >= -1e-12 * max(mis))


def test_tikhonov_matches_normal_equations(rng):
    kern = _random_kernel(rng)
    A, y = kern.stacked()
    alpha = 1e-2
    ref = np.linalg.solve(A.T @ A + alpha * np.eye(A.shape[1]), A.T @ y)
    assert np.allclose(tikhonov_path(kern, [alpha])[0], ref, rtol=1e-10, atol=1e-12)
    q = tikhonov_solve(kern, alpha)
    assert q.kind == "piecewise-constant" and np.allclose(q.coefficients, ref)


def test_alpha_zero_minimum_norm(rng):
    kern = _random_kernel(rng)
    A, y = kern.stacked()
    with pytest.warns(IllPosedWarning):
        x = tikhonov_path(kern, [0.0])[0]
    assert np.allclose(x, np.linalg.pinv(A) @ y)
    with pytest.raises(ValueError):
        tikhonov_path(kern, [-1.0])


def test_kernel_shape_checks(default_data, free_data, grid):
    spec, states = default_data
    spec0, states0 = free_data
    with pytest.raises(ValueError):
        assemble_kernel(states0[:-1], states, spec, spec0)
    bad = [SimpleNamespace(values=s.values[:-1]) for s in states]
    with pytest.raises(ValueError):
        assemble_kernel(states0, bad, spec, spec0)
    other = SpatialGrid(50)
    with pytest.raises(ValueError):
        assemble_kernel(states0, states, spec, spec0, grid=other)
