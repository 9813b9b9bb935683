"""Estimating interior states from the data-driven ROM.

Two back-ends are provided.  Lanczos orthogonalization (LO) tridiagonalizes
the ROM pair and transplants the reduced coefficients onto the Lanczos basis
built from reference states.  Data assimilation (DA) works directly in the
reference snapshot basis and balances the ROM equations against a fit to the
measured boundary traces through the penalty ``rho``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg as sla

from .errors import LanczosError, RomSolveError
from .forward import BoundarySpectrum, StateField
from .rom import RomSystem, interpolate_data

log = logging.getLogger(__name__)

BREAKDOWN_TOL = 1e-10
DA_RANK_TOL = 1e-12
METHODS = ("LO", "DA", "BORN", "TRUE")


class RankDeficientWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class LanczosFactor:
    """Q^* (M + eps I) Q = I and Q^* S Q = T (real symmetric tridiagonal)."""

    Q: np.ndarray
    T: np.ndarray
    epsilon: float

    @property
    def r(self) -> int:
        return self.Q.shape[1]

    def truncate(self, r: int) -> "LanczosFactor":
        return LanczosFactor(self.Q[:, :r], self.T[:r, :r], self.epsilon)


@dataclass(frozen=True)
class StateEstimate:
    k: float
    values: np.ndarray
    method: str
    coefficients: np.ndarray

    def as_field(self, grid) -> StateField:
        return StateField(self.k, self.values, grid)


def lanczos_m_orthogonal(S, M, epsilon: float, start) -> LanczosFactor:
    """M-orthogonal Lanczos on (M + eps I)^{-1} S with full reorthogonalization.

    Iteration stops when the next vector's (M + eps I)-norm drops below
    ``BREAKDOWN_TOL`` times the norm of the un-orthogonalized direction, or
    after m steps.
    """
    S = np.asarray(S, dtype=complex)
    m = S.shape[0]
    Me = np.asarray(M, dtype=complex) + epsilon * np.eye(m)
    try:
        chol = sla.cho_factor(Me, lower=True)
    except np.linalg.LinAlgError as exc:
        raise LanczosError(
            f"M + eps I is not positive definite at eps={epsilon:g}; increase epsilon") from exc

    def mnorm(v):
        return np.sqrt(max(np.real(np.vdot(v, Me @ v)), 0.0))

    v = np.asarray(start, dtype=complex)
    nv = mnorm(v)
    if not nv > 0:
        raise LanczosError("Lanczos start vector has zero (M + eps I)-norm")
    Q = np.zeros((m, m), dtype=complex)
    Q[:, 0] = v / nv
    alpha = np.zeros(m)
    beta = np.zeros(m)
    r = m
    for j in range(m):
        z = sla.cho_solve(chol, S @ Q[:, j])
        alpha[j] = np.real(np.vdot(Q[:, j], S @ Q[:, j]))
        scale = mnorm(z)
        z = z - alpha[j] * Q[:, j]
        if j > 0:
            z = z - beta[j - 1] * Q[:, j - 1]
        for _ in range(2):
            z = z - Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ (Me @ z))
        if j == m - 1:
            break
        beta[j] = mnorm(z)
        if beta[j] < BREAKDOWN_TOL * max(scale, 1e-300):
            r = j + 1
            break
        Q[:, j + 1] = z / beta[j]
    T = np.diag(alpha[:r]) + np.diag(beta[: r - 1], 1) + np.diag(beta[: r - 1], -1)
    return LanczosFactor(Q[:, :r], T, float(epsilon))


def lanczos_start(rom: RomSystem, epsilon: float, rule: str = "trace") -> np.ndarray:
    """Start vector: conj(f) (``"trace"``) or (M + eps I)^{-1} conj(f) (``"source"``)."""
    v = np.conj(rom.f)
    if rule == "trace":
        return v
    if rule == "source":
        return np.linalg.solve(rom.M + epsilon * np.eye(rom.m), v)
    raise ValueError(f"unknown Lanczos start rule {rule!r}")


def lo_factors(data_rom: RomSystem, ref_rom: RomSystem, epsilon: float, start: str = "trace",
               ref_factor: LanczosFactor | None = None):
    """Data-side and reference-side factors, truncated to a common rank.

    Both sides use the same epsilon and start rule so their bases correspond
    mode by mode.  ``ref_factor`` may be passed in when it is reused.
    """
    fac = lanczos_m_orthogonal(data_rom.S, data_rom.M, epsilon,
                               lanczos_start(data_rom, epsilon, start))
    fac0 = ref_factor if ref_factor is not None else lanczos_m_orthogonal(
        ref_rom.S, ref_rom.M, epsilon, lanczos_start(ref_rom, epsilon, start))
    if fac.r != fac0.r:
        r = min(fac.r, fac0.r)
        log.info("Lanczos rank mismatch (data %d, reference %d); truncating to %d", fac.r, fac0.r, r)
        fac, fac0 = fac.truncate(r), fac0.truncate(r)
    return fac, fac0


def _basis(states: Sequence[StateField]) -> np.ndarray:
    return np.column_stack([s.values for s in states])


def lo_estimate(data_rom: RomSystem, ref_rom: RomSystem, ref_states: Sequence[StateField],
                epsilon: float, k: float, factors=None, start: str = "trace") -> StateEstimate:
    """Lanczos-orthogonalization estimate of u(.; k).

    Solves (T - k^2 I - i k Q^* B Q) c = Q^* b(k) with the data-side factor and
    synthesizes sum_l c_l v_l^(0), v^(0) = U^(0) Q^(0).
    """
    fac, fac0 = factors if factors is not None else lo_factors(data_rom, ref_rom, epsilon, start)
    Q = fac.Q
    A = fac.T - k**2 * np.eye(fac.r) - 1j * k * (Q.conj().T @ data_rom.B @ Q)
    rhs = Q.conj().T @ data_rom.rhs(k)
    try:
        c = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise RomSolveError(f"reduced LO system singular at k={k}") from exc
    V0 = _basis(ref_states) @ fac0.Q
    return StateEstimate(float(k), V0 @ c, "LO", c)


def _lstsq_pivoted(A, b, rtol=DA_RANK_TOL):
    """Basic least-squares solution via QR with column pivoting."""
    Qm, R, perm = sla.qr(A, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > rtol * d[0])) if d.size and d[0] > 0 else 0
    if rank < A.shape[1]:
        warnings.warn(f"rank-deficient DA system (rank {rank} of {A.shape[1]})",
                      RankDeficientWarning, stacklevel=3)
    y = sla.solve_triangular(R[:rank, :rank], Qm[:, :rank].conj().T @ b)
    x = np.zeros(A.shape[1], dtype=complex)
    x[perm[:rank]] = y
    return x, rank


def _measured(spectrum: BoundarySpectrum, k: float):
    hit = np.flatnonzero(np.isclose(spectrum.wavenumbers, k, rtol=1e-13, atol=0.0))
    if hit.size:
        return complex(spectrum.f[hit[0]]), complex(spectrum.g[hit[0]])
    return None


def da_estimate(data_rom: RomSystem, ref_spectrum: BoundarySpectrum,
                ref_states: Sequence[StateField], rho: float, k: float,
                fk: complex | None = None, gk: complex | None = None) -> StateEstimate:
    """Data-assimilation estimate of u(.; k) in the reference snapshot basis.

    Minimizes || [S - k^2 M - i k B; rho f0^T; rho g0^T] c - [b(k); rho f(k); rho g(k)] ||.
    If (fk, gk) are not given they are the measured traces when k is a
    measurement wavenumber, and ROM-interpolated otherwise.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho!r}")
    if fk is None or gk is None:
        data = _measured(BoundarySpectrum(data_rom.wavenumbers, data_rom.f, data_rom.g), k)
        fk, gk = data if data is not None else interpolate_data(data_rom, k)
    A = np.vstack([data_rom.matrix(k), rho * ref_spectrum.f[None, :], rho * ref_spectrum.g[None, :]])
    b = np.concatenate([data_rom.rhs(k), [rho * fk, rho * gk]])
    c, _ = _lstsq_pivoted(A, b)
    return StateEstimate(float(k), _basis(ref_states) @ c, "DA", c)


def born_estimate(ref_states: Sequence[StateField], index: int) -> StateEstimate:
    """Reference state used unchanged (Born approximation when q0 = 0)."""
    c = np.zeros(len(ref_states), dtype=complex)
    c[index] = 1.0
    s = ref_states[index]
    return StateEstimate(s.k, s.values.copy(), "BORN", c)


def true_estimate(true_states: Sequence[StateField], index: int) -> StateEstimate:
    c = np.zeros(len(true_states), dtype=complex)
    c[index] = 1.0
    s = true_states[index]
    return StateEstimate(s.k, s.values.copy(), "TRUE", c)


def estimate_states(method: str, *, data_rom=None, ref_rom=None, ref_spectrum=None,
                    ref_states=None, true_states=None, epsilon=None, rho=None,
                    start: str = "trace", ref_factor=None) -> list[StateEstimate]:
    """Estimates at every measurement wavenumber for one of ``METHODS``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == "TRUE":
        return [true_estimate(true_states, i) for i in range(len(true_states))]
    if method == "BORN":
        return [born_estimate(ref_states, i) for i in range(len(ref_states))]
    ks = data_rom.wavenumbers
    if method == "LO":
        factors = lo_factors(data_rom, ref_rom, epsilon, start, ref_factor)
        return [lo_estimate(data_rom, ref_rom, ref_states, epsilon, k, factors) for k in ks]
    return [da_estimate(data_rom, ref_spectrum, ref_states, rho, k, data_rom.f[i], data_rom.g[i])
            for i, k in enumerate(ks)]
