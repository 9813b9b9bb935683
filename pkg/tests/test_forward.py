import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from romscatter.errors import ResonantWavenumberError, SpectrumError
from romscatter.experiments import DEFAULT_TRUE_POTENTIAL
from romscatter.forward import (BoundarySpectrum, PotentialModel, SpatialGrid, StateField,
                                boundary_trace, generate_spectrum, solve_bvp, solve_sensitivity,
                                wavenumber_grid, weak_residual)


def test_free_space_state_is_plane_wave(grid):
    u = solve_bvp(PotentialModel.zero(), 3.0, grid)
    exact = np.exp(1j * 3.0 * grid.nodes)
    assert np.max(np.abs(u.values - exact)) < 1e-4


def test_free_space_trace_error_is_second_order():
    errs = []
    for n in (100, 200, 400):
        f, g = boundary_trace(solve_bvp(PotentialModel.zero(), 5.0, SpatialGrid(n)))
        errs.append(abs(f - 1.0))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.9)


def test_convergence_order_smooth_potential():
    q = DEFAULT_TRUE_POTENTIAL
    ref = solve_bvp(q, 7.0, SpatialGrid(6400)).values
    errs = []
    for n in (200, 400, 800):
        u = solve_bvp(q, 7.0, SpatialGrid(n)).values
        errs.append(np.sqrt(np.mean(np.abs(u - ref[:: 6400 // n]) ** 2)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates >= 1.9), rates


@given(k=st.floats(0.2, 12.0), a=st.floats(-5.0, 5.0))
@settings(max_examples=20, deadline=None)
def test_weak_residual_vanishes(k, a):
    grid = SpatialGrid(300)
    q = PotentialModel.gaussian([(a, 0.4, 0.1)])
    u = solve_bvp(q, k, grid)
    assert np.linalg.norm(weak_residual(q, k, u)) < 1e-10 * np.linalg.norm(u.values)


def test_sensitivity_matches_finite_difference(grid, ks):
    q = DEFAULT_TRUE_POTENTIAL
    spec = generate_spectrum(q, ks, grid)
    d = 1e-4
    for i, k in enumerate(ks):
        fp, gp = boundary_trace(solve_bvp(q, k + d, grid))
        fm, gm = boundary_trace(solve_bvp(q, k - d, grid))
        assert abs((fp - fm) / (2 * d) - spec.fprime[i]) < 1e-5 * abs(spec.fprime[i])
        assert abs((gp - gm) / (2 * d) - spec.gprime[i]) < 1e-5 * abs(spec.gprime[i])


def test_sensitivity_direct_call_matches_family(grid):
    q = DEFAULT_TRUE_POTENTIAL
    u = solve_bvp(q, 4.0, grid)
    w = solve_sensitivity(q, 4.0, u)
    spec = generate_spectrum(q, [4.0], grid)
    assert np.isclose(w.values[0], spec.fprime[0], rtol=1e-14)


def test_reference_equals_true_when_same_potential(grid, ks):
    a = generate_spectrum(DEFAULT_TRUE_POTENTIAL, ks, grid)
    b = generate_spectrum(PotentialModel.gaussian([(4.0, 0.5, 0.08)]), ks, grid)
    assert np.array_equal(a.f, b.f) and np.array_equal(a.gprime, b.gprime)


def test_wavenumber_rules():
    assert np.allclose(wavenumber_grid(4, 10.0), [2, 4, 6, 8])
    assert np.allclose(wavenumber_grid(4, 10.0, "right"), [2.5, 5, 7.5, 10])
    with pytest.raises(ValueError):
        wavenumber_grid(4, 10.0, "closed")
    with pytest.raises(ValueError):
        wavenumber_grid(0)


def test_potential_truncated_outside_support():
    q = DEFAULT_TRUE_POTENTIAL
    x = np.array([0.0, 0.05, 0.5, 0.95, 1.0])
    v = q.evaluate(x)
    assert v[0] == v[1] == v[3] == v[4] == 0.0
    assert np.isclose(v[2], 4.0)


def test_piecewise_constant_potential():
    q = PotentialModel.piecewise_constant([1.0, 2.0], support=(0.0, 1.0))
    assert np.allclose(q.evaluate(np.array([0.25, 0.75])), [1.0, 2.0])


def test_invalid_k_and_potential(grid):
    with pytest.raises(ValueError):
        solve_bvp(PotentialModel.zero(), 0.0, grid)
    with pytest.raises(ValueError):
        solve_bvp(PotentialModel.zero(), float("nan"), grid)
    with pytest.raises(ValueError):
        solve_bvp(np.full(grid.n + 1, np.nan), 1.0, grid)


def test_spectrum_validation():
    with pytest.raises(SpectrumError):
        BoundarySpectrum([2.0, 1.0], [1, 1], [1, 1])
    with pytest.raises(SpectrumError):
        BoundarySpectrum([-1.0], [1], [1])
    with pytest.raises(SpectrumError):
        BoundarySpectrum([1.0, 2.0], [1], [1, 1])
    with pytest.raises(SpectrumError):
        generate_spectrum(PotentialModel.zero(), [1.0, 1.0])


def test_state_shape_checked(grid):
    with pytest.raises(ValueError):
        StateField(1.0, np.zeros(5), grid)


def test_resonance_flagged():
    from romscatter.forward import _TridiagonalLU
    diag = np.array([1.0, 1.0], dtype=complex)
    off = np.array([1.0], dtype=complex)
    with pytest.raises(ResonantWavenumberError) as info:
        _TridiagonalLU(diag, off, 2.0)
    assert info.value.k == 2.0 and info.value.pivot < 1e-12
