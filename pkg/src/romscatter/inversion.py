"""Potential recovery from estimated states.

Testing the equations for u (potential q) and u0 (potential q0) against each
other gives the exact identity

    f(k) - f0(k) = 1/(2 i k) * int_0^1 u0(x; k) u(x; k) (q(x) - q0(x)) dx,

which is linear in q once u is replaced by an estimate.  With a
piecewise-constant basis and one equation per measured wavenumber this is a
small complex system solved for a real coefficient vector with a Tikhonov
penalty.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .forward import BoundarySpectrum, PotentialModel, SpatialGrid, StateField

RANK_TOL = 1e-12


class IllPosedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PiecewiseConstantBasis:
    """Indicator functions of ``nq`` uniform cells of ``support``."""

    nq: int = 100
    support: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.nq < 1:
            raise ValueError("basis needs at least one cell")

    def quadrature(self, grid: SpatialGrid) -> np.ndarray:
        """(n+1, nq) matrix P with P[:, j] the trapezoid weights of int (.) phi_j dx.

        Each grid interval is assigned to the cell containing its midpoint.
        """
        lo, hi = self.support
        x = grid.nodes
        mid = 0.5 * (x[:-1] + x[1:])
        cell = np.floor((mid - lo) / (hi - lo) * self.nq).astype(int)
        inside = (mid >= lo) & (mid <= hi)
        cell = np.clip(cell, 0, self.nq - 1)
        P = np.zeros((x.size, self.nq))
        seg = np.flatnonzero(inside)
        np.add.at(P, (seg, cell[seg]), 0.5 * grid.h)
        np.add.at(P, (seg + 1, cell[seg]), 0.5 * grid.h)
        return P

    def model(self, coefficients) -> PotentialModel:
        return PotentialModel.piecewise_constant(np.asarray(coefficients, dtype=float), self.support)

    def project(self, values, grid: SpatialGrid) -> np.ndarray:
        """Cell averages of grid samples."""
        P = self.quadrature(grid)
        return (P.T @ np.asarray(values, dtype=float)) / P.sum(axis=0)


@dataclass(frozen=True)
class LSKernel:
    K: np.ndarray
    rhs: np.ndarray
    basis: PiecewiseConstantBasis
    wavenumbers: np.ndarray

    def stacked(self):
        """Real system [Re K; Im K] q = [Re rhs; Im rhs]."""
        return (np.vstack([self.K.real, self.K.imag]),
                np.concatenate([self.rhs.real, self.rhs.imag]))


def assemble_kernel(ref_states: Sequence[StateField], est_states: Sequence, spectrum: BoundarySpectrum,
                    ref_spectrum: BoundarySpectrum, basis: PiecewiseConstantBasis | None = None,
                    grid: SpatialGrid | None = None) -> LSKernel:
    """K_ij = 1/(2 i k_i) int u0_i u~_i phi_j dx, rhs_i = f_i - f0_i."""
    basis = basis or PiecewiseConstantBasis()
    if len(ref_states) != spectrum.m or len(est_states) != spectrum.m:
        raise ValueError("state lists must align with the wavenumber grid")
    grid = grid or ref_states[0].grid
    if any(s.grid != grid for s in ref_states):
        raise ValueError("reference states are not on the common grid")
    U0 = np.column_stack([s.values for s in ref_states])
    Ue = np.column_stack([np.asarray(s.values) for s in est_states])
    if Ue.shape != U0.shape:
        raise ValueError(f"estimated states have shape {Ue.shape}, reference {U0.shape}")
    k = spectrum.wavenumbers
    K = ((U0 * Ue).T @ basis.quadrature(grid)) / (2j * k[:, None])
    rhs = spectrum.f - ref_spectrum.f
    return LSKernel(K, rhs, basis, k.copy())


def tikhonov_path(kernel: LSKernel, alphas: Sequence[float]) -> np.ndarray:
    """Real minimizers of ||K q - rhs||^2 + alpha ||q||^2 for each alpha.

    Returns an array of shape (len(alphas), nq).  One SVD serves every alpha;
    for alpha = 0 singular values below RANK_TOL * s_max are dropped
    (minimum-norm solution).
    """
    A, y = kernel.stacked()
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    beta = U.T @ y
    out = np.empty((len(alphas), A.shape[1]))
    keep = s > RANK_TOL * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    for i, alpha in enumerate(alphas):
        if alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {alpha!r}")
        if alpha == 0:
            if A.shape[0] < A.shape[1] or not keep.all():
                warnings.warn("alpha = 0 with rank-deficient kernel; returning minimum-norm solution",
                              IllPosedWarning, stacklevel=2)
            filt = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
        else:
            filt = s / (s**2 + alpha)
        out[i] = Vt.T @ (filt * beta)
    return out


def tikhonov_solve(kernel: LSKernel, alpha: float) -> PotentialModel:
    """Perturbation dq (a piecewise-constant potential) for one alpha."""
    return kernel.basis.model(tikhonov_path(kernel, [alpha])[0])


def misfit(kernel: LSKernel, coefficients) -> float:
    return float(np.linalg.norm(kernel.K @ np.asarray(coefficients) - kernel.rhs))
