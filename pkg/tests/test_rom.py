import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from romscatter.errors import RomSolveError, SpectrumError
from romscatter.forward import (BoundarySpectrum, PotentialModel, SpatialGrid, generate_spectrum,
                                solve_bvp)
from romscatter.experiments import DEFAULT_TRUE_POTENTIAL
from romscatter.rom import (RomSystem, assemble_direct, assemble_from_data, interpolate_data,
                            rom_solve)


def _free_spectrum(ks):
    """Exact continuum data for q = 0: u = exp(i k x)."""
    ks = np.asarray(ks, dtype=float)
    return BoundarySpectrum(ks, np.ones_like(ks, dtype=complex), np.exp(1j * ks),
                            np.zeros_like(ks, dtype=complex), 1j * np.exp(1j * ks))


def rel_fro(A, B):
    return np.linalg.norm(A - B) / np.linalg.norm(B)


def test_free_space_off_diagonal_closed_form():
    rom = assemble_from_data(_free_spectrum([1.0, 2.0]))
    d = 2.0 - 1.0
    exact = (np.exp(1j * d) - 1) / (1j * d)  # int exp(i k1 x) exp(-i k0 x) dx
    assert np.isclose(rom.M[0, 1], exact, rtol=1e-14)
    assert np.isclose(rom.M[1, 0], np.conj(exact), rtol=1e-14)
    # S_01 = k0 k1 M_01 for plane waves
    assert np.isclose(rom.S[0, 1], 2.0 * exact, rtol=1e-14)


@given(k=st.floats(0.1, 20.0))
@settings(max_examples=30, deadline=None)
def test_free_space_diagonal_is_unit(k):
    rom = assemble_from_data(_free_spectrum([k]))
    assert np.isclose(rom.M[0, 0], 1.0, rtol=1e-12)
    assert np.isclose(rom.S[0, 0], k**2, rtol=1e-12)


def test_data_matches_gram_oracle(default_data):
    spec, states = default_data
    rom = assemble_from_data(spec)
    direct = assemble_direct(states, DEFAULT_TRUE_POTENTIAL)
    assert rel_fro(rom.S, direct.S) < 1e-6
    assert rel_fro(rom.M, direct.M) < 1e-6
    assert np.max(np.abs(rom.S - direct.S)) < 1e-6 * np.max(np.abs(direct.S))


def test_uncorrected_s_diagonal_disagrees_with_oracle(default_data):
    spec, states = default_data
    direct = assemble_direct(states, DEFAULT_TRUE_POTENTIAL)
    alt = assemble_from_data(spec, s_diagonal="uncorrected")
    assert rel_fro(alt.S, direct.S) > 1e-2
    with pytest.raises(ValueError):
        assemble_from_data(spec, s_diagonal="other")


def test_invariants(default_data):
    rom = assemble_from_data(default_data[0])
    rep = rom.invariant_report()
    assert rep["S_asymmetry"] < 1e-10 and rep["M_asymmetry"] < 1e-10
    assert rep["B_asymmetry"] < 1e-15
    assert rep["S_diag_imag"] == 0.0 and rep["M_diag_imag"] == 0.0
    assert rep["B_third_singular_ratio"] < 1e-12
    assert np.min(np.linalg.eigvalsh(rom.B)) > -1e-12 * np.max(np.abs(rom.B))
    rom.check_invariants()


def test_b_structure_exact(default_data):
    spec = default_data[0]
    rom = assemble_from_data(spec)
    f, g = spec.f, spec.g
    i, j = 3, 7
    assert abs(rom.B[i, j] - (f[j] * np.conj(f[i]) + g[j] * np.conj(g[i]))) < 4e-16 * abs(rom.B[i, j])


def test_direct_single_free_state():
    grid = SpatialGrid(2000)
    u = solve_bvp(PotentialModel.zero(), 1.0, grid)
    rom = assemble_direct([u], PotentialModel.zero())
    assert np.isclose(rom.M[0, 0].real, 1.0, atol=1e-5)
    assert np.isclose(rom.S[0, 0].real, 1.0, atol=1e-5)


def test_direct_two_free_states_closed_form():
    grid = SpatialGrid(4000)
    states = [solve_bvp(PotentialModel.zero(), k, grid) for k in (1.0, 2.0)]
    rom = assemble_direct(states, PotentialModel.zero())
    assert abs(rom.M[0, 1] - (np.exp(1j) - 1) / 1j) < 1e-5


def test_direct_rejects_mixed_grids():
    a = solve_bvp(PotentialModel.zero(), 1.0, SpatialGrid(10))
    b = solve_bvp(PotentialModel.zero(), 2.0, SpatialGrid(20))
    with pytest.raises(ValueError):
        assemble_direct([a, b], PotentialModel.zero())


def test_rejects_bad_data(default_data):
    spec = default_data[0]
    with pytest.raises(SpectrumError):
        assemble_from_data(spec.replace(fprime=None))
    bad = spec.f.copy()
    bad[2] = np.nan
    with pytest.raises(SpectrumError):
        assemble_from_data(spec.replace(f=bad))
    ks = spec.wavenumbers.copy()
    ks[1] = ks[0] * (1 + 1e-12)
    with pytest.raises(SpectrumError):
        assemble_from_data(spec.replace(wavenumbers=ks))


def test_scalar_solve():
    grid = SpatialGrid(500)
    spec = generate_spectrum(PotentialModel.zero(), [2.0], grid)
    rom = assemble_from_data(spec)
    k = 3.3
    c = rom_solve(rom, k).c
    expect = rom.rhs(k)[0] / (rom.S[0, 0] - k**2 * rom.M[0, 0] - 1j * k * rom.B[0, 0])
    assert np.isclose(c[0], expect, rtol=1e-14)


def test_interpolation_at_nodes_residual_and_trace(default_data):
    # the coefficient vector at k_j is e_j up to conditioning; the residual and
    # the reproduced traces are what is attainable at machine precision
    spec = default_data[0]
    rom = assemble_from_data(spec)
    for j, k in enumerate(spec.wavenumbers):
        c = rom_solve(rom, k).c
        A, b = rom.matrix(k), rom.rhs(k)
        assert np.linalg.norm(A @ c - b) < 1e-10 * np.linalg.norm(b)
        f, g = interpolate_data(rom, k)
        assert abs(f - spec.f[j]) < 1e-8 and abs(g - spec.g[j]) < 1e-8


def test_interpolation_between_nodes(grid):
    ks = np.linspace(1.0, 10.0, 16)
    spec = generate_spectrum(DEFAULT_TRUE_POTENTIAL, ks, grid)
    rom = assemble_from_data(spec)
    kt = 0.5 * (ks[6] + ks[7])
    f_true = generate_spectrum(DEFAULT_TRUE_POTENTIAL, [kt], grid).f[0]
    f_rom, _ = interpolate_data(rom, kt)
    assert abs(f_rom - f_true) < 1e-3 * abs(f_true)


def test_rom_solve_errors():
    rom = RomSystem(np.zeros((2, 2), complex), np.zeros((2, 2), complex), np.zeros((2, 2), complex),
                    np.ones(2, complex), np.ones(2, complex), np.array([1.0, 2.0]))
    with pytest.raises(RomSolveError):
        rom_solve(rom, 1.0)
    with pytest.raises(ValueError):
        rom_solve(rom, -1.0)
