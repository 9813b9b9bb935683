"""Data-driven reduced-order model of the scattering problem.

With snapshots u_i = u(.; k_i) the Galerkin matrices are

    S_ij = <u_j', u_i'> + <q u_j, u_i>,   M_ij = <u_j, u_i>,
    B_ij = f_j conj(f_i) + g_j conj(g_i),  b_i(k) = -2 i k conj(f_i),

and the ROM solution at any k is u~(k) = sum_i c_i(k) u_i with
(S - k^2 M - i k B) c = b(k).  ``assemble_from_data`` evaluates S and M from
boundary data only; ``assemble_direct`` integrates the Gram matrices from the
states themselves and serves as the oracle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import RomSolveError, SpectrumError
from .forward import BoundarySpectrum, PotentialModel, StateField

log = logging.getLogger(__name__)

COINCIDENT_TOL = 1e-8
HERMITIAN_TOL = 1e-10
SOLVE_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class RomSystem:
    S: np.ndarray
    M: np.ndarray
    B: np.ndarray
    f: np.ndarray
    g: np.ndarray
    wavenumbers: np.ndarray

    @property
    def m(self) -> int:
        return self.wavenumbers.size

    def rhs(self, k: float) -> np.ndarray:
        return -2j * k * np.conj(self.f)

    def matrix(self, k: float) -> np.ndarray:
        return self.S - k**2 * self.M - 1j * k * self.B

    def invariant_report(self) -> dict:
        """Measured deviations from the structural invariants."""
        def asym(A):
            return float(np.max(np.abs(A - A.conj().T)) / max(np.max(np.abs(A)), 1e-300))

        sB = np.linalg.svd(self.B, compute_uv=False)
        third = sB[2] / sB[0] if sB.size > 2 and sB[0] > 0 else 0.0
        eigM = np.linalg.eigvalsh(0.5 * (self.M + self.M.conj().T))
        return {
            "S_asymmetry": asym(self.S),
            "M_asymmetry": asym(self.M),
            "B_asymmetry": asym(self.B),
            "S_diag_imag": float(np.max(np.abs(np.diag(self.S).imag))),
            "M_diag_imag": float(np.max(np.abs(np.diag(self.M).imag))),
            "B_third_singular_ratio": float(third),
            "M_min_eig_ratio": float(eigM[0] / eigM[-1]) if eigM[-1] > 0 else float("nan"),
        }

    def check_invariants(self, tol: float = HERMITIAN_TOL) -> None:
        rep = self.invariant_report()
        for key in ("S_asymmetry", "M_asymmetry", "B_asymmetry"):
            if rep[key] > tol:
                raise ValueError(f"ROM matrix not Hermitian: {key}={rep[key]:.3e}")


def _boundary_gram(f, g):
    return np.conj(f)[:, None] * f[None, :] + np.conj(g)[:, None] * g[None, :]


def assemble_from_data(spec: BoundarySpectrum, s_diagonal: str = "consistent") -> RomSystem:
    """Build S, M, B from boundary data and its k-derivatives.

    Off-diagonal entries follow from combining the weak forms at k_i and k_j.
    The diagonals are their limits k_i -> k_j, which need f' and g'::

        W_i  = Re f Im f' - Im f Re f' + Re g Im g' - Im g Re g'
        M_ii = W_i - Im f'_i + Im f_i / k_i
        S_ii = k_i^2 M_ii - 2 k_i Im f_i = k_i^2 (W_i - Im f'_i) - k_i Im f_i

    ``s_diagonal="uncorrected"`` selects the alternative S_ii = k^2 W - Im f' - Im f / k,
    which disagrees with the Gram oracle and is kept only for comparison.
    """
    if not spec.has_derivatives:
        raise SpectrumError("data-driven ROM assembly needs f' and g' (derivatives missing)")
    k = spec.wavenumbers
    f, g, fp, gp = spec.f, spec.g, spec.fprime, spec.gprime
    for name, arr in (("f", f), ("g", g), ("f'", fp), ("g'", gp)):
        if not np.all(np.isfinite(arr)):
            raise SpectrumError(f"non-finite entries in {name}")
    gap = np.abs(k[:, None] - k[None, :])
    np.fill_diagonal(gap, np.inf)
    if np.min(gap) < COINCIDENT_TOL * np.max(k):
        raise SpectrumError("near-coincident wavenumbers; off-diagonal formulas divide by k_i - k_j")

    ki, kj = k[:, None], k[None, :]
    B = _boundary_gram(f, g)
    off = ~np.eye(k.size, dtype=bool)
    dk = np.where(off, ki - kj, 1.0)
    dk2 = np.where(off, ki**2 - kj**2, 1.0)
    fj, fci = f[None, :], np.conj(f)[:, None]
    M = 1j * (B / dk - 2.0 * (ki * fj + kj * fci) / dk2)
    S = 1j * (ki * kj * B / dk - 2.0 * (kj**2 * ki * fj + ki**2 * kj * fci) / dk2)

    W = f.real * fp.imag - f.imag * fp.real + g.real * gp.imag - g.imag * gp.real
    Mdiag = W - fp.imag + f.imag / k
    if s_diagonal == "consistent":
        Sdiag = k**2 * (W - fp.imag) - k * f.imag
    elif s_diagonal == "uncorrected":
        Sdiag = k**2 * W - fp.imag - f.imag / k
    else:
        raise ValueError(f"unknown s_diagonal rule {s_diagonal!r}")
    idx = np.arange(k.size)
    M[idx, idx] = Mdiag
    S[idx, idx] = Sdiag
    return RomSystem(S, M, B, f.copy(), g.copy(), k.copy())


def assemble_direct(states: Sequence[StateField], q) -> RomSystem:
    """Gram-matrix oracle: integrate <u_j, u_i> and <u_j', u_i'> + <q u_j, u_i>.

    The mass Gram uses trapezoid weights; the derivative Gram uses one
    difference quotient per cell (second order at the cell midpoints).
    """
    if not states:
        raise ValueError("need at least one state")
    grid = states[0].grid
    if any(s.grid != grid for s in states):
        raise ValueError("states are not on a common grid")
    U = np.column_stack([s.values for s in states])
    qv = q.on(grid) if isinstance(q, PotentialModel) else np.asarray(q, dtype=float)
    w = grid.weights
    M = U.conj().T @ (w[:, None] * U)
    dU = np.diff(U, axis=0) / grid.h
    S = grid.h * (dU.conj().T @ dU) + U.conj().T @ ((w * qv)[:, None] * U)
    for name, A in (("M", M), ("S", S)):
        asym = np.max(np.abs(A - A.conj().T)) / np.max(np.abs(A))
        if asym > 1e-12:
            raise ValueError(f"{name} quadrature asymmetry {asym:.2e} exceeds 1e-12")
    M = 0.5 * (M + M.conj().T)
    S = 0.5 * (S + S.conj().T)
    f = U[0].copy()
    g = U[-1].copy()
    k = np.array([s.k for s in states])
    return RomSystem(S, M, _boundary_gram(f, g), f, g, k)


@dataclass(frozen=True)
class RomCoefficients:
    k: float
    c: np.ndarray


def rom_solve(rom: RomSystem, k: float) -> RomCoefficients:
    """Solve (S - k^2 M - i k B) c = b(k)."""
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k!r}")
    A = rom.matrix(k)
    b = rom.rhs(k)
    try:
        c = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise RomSolveError(f"singular ROM system at k={k} (cond ~ {np.linalg.cond(A):.2e})") from exc
    res = np.linalg.norm(A @ c - b)
    if not np.all(np.isfinite(c)) or res > SOLVE_RESIDUAL_TOL * np.linalg.norm(b):
        raise RomSolveError(
            f"ROM solve at k={k} left residual {res:.2e} (cond ~ {np.linalg.cond(A):.2e})")
    return RomCoefficients(float(k), c)


def interpolate_data(rom: RomSystem, k: float) -> tuple[complex, complex]:
    """ROM prediction of (f(k), g(k)) from the snapshot traces."""
    c = rom_solve(rom, k).c
    return complex(rom.f @ c), complex(rom.g @ c)
