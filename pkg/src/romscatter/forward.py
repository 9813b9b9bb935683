"""Finite-difference forward solver for the 1D Schrodinger scattering problem.

The model problem on (0, 1) is

    -u'' + q u - k^2 u = 0,
    u'(0) + i k u(0) = 2 i k,     u'(1) - i k u(1) = 0,

i.e. a unit plane wave incoming from the left with radiating exits on both
sides.  Central differences with ghost-node elimination of the Robin
conditions give a complex-symmetric tridiagonal system.  After scaling each
row by h (the end rows by h/2) the system reads

    (K + W (Q - k^2) - i k E) u = -2 i k e_0

where K is the P1 stiffness matrix, W the trapezoid weights, Q = diag(q) and
E = e_0 e_0^T + e_n e_n^T.  This is exactly the lumped-mass Galerkin form, so
the discrete states satisfy the discrete weak form to rounding error, which
is what makes the data-driven ROM identities hold on the grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ResonantWavenumberError, ScatteringError, SpectrumError

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-12

__all__ = [
    "SpatialGrid",
    "PotentialModel",
    "StateField",
    "BoundarySpectrum",
    "wavenumber_grid",
    "solve_bvp",
    "solve_sensitivity",
    "solve_family",
    "boundary_trace",
    "generate_spectrum",
    "weak_residual",
]


# Domain types ================================================================
@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on [0, 1] with ``n`` cells (``n + 1`` nodes)."""

    n: int = 1000

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs an integer number of cells >= 2, got {self.n!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 1)

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights on the nodes."""
        w = np.full(self.n + 1, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def inner(self, u, v) -> complex:
        """Trapezoid approximation of <u, v> = int u conj(v) dx."""
        return complex(np.sum(self.weights * u * np.conj(v)))


@dataclass(frozen=True)
class PotentialModel:
    """Real potential on (0, 1) described by a small set of coefficients.

    ``kind`` is ``"gaussian-bumps"`` (coefficients are flattened
    ``(amplitude, center, width)`` triples) or ``"piecewise-constant"``
    (one value per uniform cell of ``support``).  Values vanish outside
    ``support``.
    """

    kind: str
    coefficients: tuple = ()
    support: tuple = (0.0, 1.0)

    KINDS = ("gaussian-bumps", "piecewise-constant")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {self.KINDS}")
        coeffs = tuple(float(c) for c in np.ravel(self.coefficients))
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "support", (float(self.support[0]), float(self.support[1])))
        lo, hi = self.support
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError(f"support must satisfy 0 <= lo < hi <= 1, got {self.support}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("potential coefficients must be finite")
        if self.kind == "gaussian-bumps":
            if len(coeffs) % 3:
                raise ValueError("gaussian-bumps coefficients come in (amplitude, center, width) triples")
            if any(w <= 0 for w in coeffs[2::3]):
                raise ValueError("gaussian bump widths must be positive")

    @classmethod
    def zero(cls) -> "PotentialModel":
        return cls("gaussian-bumps", ())

    @classmethod
    def gaussian(cls, bumps, support=(0.1, 0.9)) -> "PotentialModel":
        return cls("gaussian-bumps", tuple(np.ravel(bumps)), support)

    @classmethod
    def piecewise_constant(cls, values, support=(0.0, 1.0)) -> "PotentialModel":
        return cls("piecewise-constant", tuple(values), support)

    @property
    def is_zero(self) -> bool:
        if self.kind == "gaussian-bumps":
            return all(a == 0 for a in self.coefficients[0::3])
        return all(c == 0 for c in self.coefficients)

    def cell_index(self, x) -> np.ndarray:
        """Cell of each point for the piecewise-constant basis (right-continuous)."""
        lo, hi = self.support
        ncell = len(self.coefficients)
        idx = np.floor((np.asarray(x) - lo) / (hi - lo) * ncell).astype(int)
        return np.clip(idx, 0, ncell - 1)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        out = np.zeros_like(x)
        if self.kind == "gaussian-bumps":
            c = np.reshape(self.coefficients, (-1, 3))
            for amp, center, width in c:
                out += amp * np.exp(-((x - center) ** 2) / (2.0 * width**2))
        elif self.coefficients:
            out = np.asarray(self.coefficients)[self.cell_index(x)]
        return np.where(inside, out, 0.0)

    def on(self, grid: SpatialGrid) -> np.ndarray:
        return self.evaluate(grid.nodes)


@dataclass(frozen=True)
class StateField:
    """Complex samples of u(x; k) on the nodes of a grid."""

    k: float
    values: np.ndarray
    grid: SpatialGrid = field(default_factory=SpatialGrid)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n + 1,):
            raise ValueError(f"state has {vals.shape} samples, grid has {self.grid.n + 1} nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite state values at k={self.k}")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class BoundarySpectrum:
    """Reflection/transmission traces f, g and their k-derivatives."""

    wavenumbers: np.ndarray
    f: np.ndarray
    g: np.ndarray
    fprime: np.ndarray | None = None
    gprime: np.ndarray | None = None

    def __post_init__(self):
        k = np.asarray(self.wavenumbers, dtype=float)
        object.__setattr__(self, "wavenumbers", k)
        for name in ("f", "g", "fprime", "gprime"):
            val = getattr(self, name)
            if val is None:
                continue
            val = np.asarray(val, dtype=complex)
            if val.shape != k.shape:
                raise SpectrumError(f"{name} has shape {val.shape}, expected {k.shape}")
            object.__setattr__(self, name, val)
        if k.ndim != 1 or k.size == 0:
            raise SpectrumError("spectrum needs a non-empty 1D wavenumber vector")
        if np.any(k <= 0):
            raise SpectrumError("wavenumbers must be strictly positive")
        if np.any(np.diff(k) <= 0):
            raise SpectrumError("wavenumbers must be strictly increasing")

    @property
    def m(self) -> int:
        return self.wavenumbers.size

    @property
    def has_derivatives(self) -> bool:
        return self.fprime is not None and self.gprime is not None

    def replace(self, **changes) -> "BoundarySpectrum":
        kw = dict(wavenumbers=self.wavenumbers, f=self.f, g=self.g,
                  fprime=self.fprime, gprime=self.gprime)
        kw.update(changes)
        return BoundarySpectrum(**kw)


def wavenumber_grid(m: int, kmax: float = 10.0, rule: str = "interior") -> np.ndarray:
    """``m`` equispaced wavenumbers in (0, kmax).

    ``interior`` excludes both endpoints, k_i = (i+1) kmax / (m+1);
    ``right`` includes kmax, k_i = (i+1) kmax / m.
    """
    if m < 1:
        raise ValueError("need at least one wavenumber")
    if kmax <= 0:
        raise ValueError("kmax must be positive")
    i = np.arange(m) + 1.0
    if rule == "interior":
        return i * kmax / (m + 1)
    if rule == "right":
        return i * kmax / m
    raise ValueError(f"unknown wavenumber rule {rule!r}; expected 'interior' or 'right'")


# Tridiagonal solver ==========================================================
class _TridiagonalLU:
    """LU factors of a tridiagonal matrix with a symmetric off-diagonal.

    No pivoting: the complex Robin row keeps every pivot off the real axis,
    so a vanishing pivot signals a genuinely (near-)singular system.
    """

    def __init__(self, diag, off, k):
        n = diag.size
        piv = np.empty(n, dtype=complex)
        mult = np.empty(n - 1, dtype=complex)
        scale = np.abs(diag) + 2.0 * np.abs(off[0])
        p = diag[0]
        for i in range(n - 1):
            if abs(p) < PIVOT_TOL * scale[i]:
                raise ResonantWavenumberError(k, abs(p) / scale[i])
            piv[i] = p
            mult[i] = off[i] / p
            p = diag[i + 1] - mult[i] * off[i]
        if abs(p) < PIVOT_TOL * scale[-1]:
            raise ResonantWavenumberError(k, abs(p) / scale[-1])
        piv[-1] = p
        self.piv, self.mult, self.off = piv, mult, off

    def solve(self, rhs):
        piv, mult, off = self.piv, self.mult, self.off
        n = piv.size
        y = np.array(rhs, dtype=complex)
        for i in range(1, n):
            y[i] -= mult[i - 1] * y[i - 1]
        x = np.empty(n, dtype=complex)
        x[-1] = y[-1] / piv[-1]
        for i in range(n - 2, -1, -1):
            x[i] = (y[i] - off[i] * x[i + 1]) / piv[i]
        return x


def _system(qvals, k, grid):
    h = grid.h
    w = grid.weights
    diag = np.full(grid.n + 1, 2.0 / h, dtype=complex)
    diag[0] = diag[-1] = 1.0 / h
    diag += w * (qvals - k**2)
    diag[0] -= 1j * k
    diag[-1] -= 1j * k
    off = np.full(grid.n, -1.0 / h, dtype=complex)
    return diag, off


def _apply(diag, off, u):
    out = diag * u
    out[:-1] += off * u[1:]
    out[1:] += off * u[:-1]
    return out


def _check_k(k):
    if not np.isfinite(k) or k <= 0:
        raise ValueError(f"wavenumber must be positive and finite, got {k!r}")


def _potential_values(q, grid):
    qv = q.on(grid) if isinstance(q, PotentialModel) else np.asarray(q, dtype=float)
    if qv.shape != (grid.n + 1,) or not np.all(np.isfinite(qv)):
        raise ValueError("potential must be real and finite on every grid node")
    return qv


# Operations ==================================================================
def solve_bvp(q, k: float, grid: SpatialGrid | None = None) -> StateField:
    """Solve the scattering problem at wavenumber ``k``."""
    grid = grid or SpatialGrid()
    _check_k(k)
    u, _ = _solve_pair(_potential_values(q, grid), k, grid, with_sensitivity=False)
    return StateField(k, u, grid)


def solve_sensitivity(q, k: float, u: StateField, grid: SpatialGrid | None = None) -> StateField:
    """Solve for w = du/dk given the state ``u`` at the same (q, k).

    Differentiating the discrete system in k gives A(k) w = 2 k W u + i E u - 2 i e_0,
    the discrete counterpart of -w'' + q w - k^2 w = 2 k u with
    w'(0) + i k w(0) = 2i - i u(0) and w'(1) - i k w(1) = i u(1).
    """
    grid = grid or u.grid
    _check_k(k)
    diag, off = _system(_potential_values(q, grid), k, grid)
    lu = _TridiagonalLU(diag, off, k)
    return StateField(k, lu.solve(_sensitivity_rhs(u.values, k, grid)), grid)


def _sensitivity_rhs(u, k, grid):
    rhs = 2.0 * k * grid.weights * u
    rhs[0] += 1j * u[0] - 2j
    rhs[-1] += 1j * u[-1]
    return rhs


def _solve_pair(qvals, k, grid, with_sensitivity=True):
    diag, off = _system(qvals, k, grid)
    lu = _TridiagonalLU(diag, off, k)
    rhs = np.zeros(grid.n + 1, dtype=complex)
    rhs[0] = -2j * k
    u = lu.solve(rhs)
    du = lu.solve(_sensitivity_rhs(u, k, grid)) if with_sensitivity else None
    return u, du


def weak_residual(q, k: float, u: StateField) -> np.ndarray:
    """Residual of the discrete weak form tested against every hat function."""
    grid = u.grid
    diag, off = _system(_potential_values(q, grid), k, grid)
    r = _apply(diag, off, u.values)
    r[0] += 2j * k
    return r


def boundary_trace(u: StateField) -> tuple[complex, complex]:
    """Return (f, g) = (u(0), u(1))."""
    return complex(u.values[0]), complex(u.values[-1])


def solve_family(q, ks: Sequence[float], grid: SpatialGrid | None = None):
    """States and k-sensitivities for every wavenumber in ``ks``."""
    grid = grid or SpatialGrid()
    qvals = _potential_values(q, grid)
    states, sens = [], []
    for k in ks:
        _check_k(k)
        try:
            u, du = _solve_pair(qvals, float(k), grid)
        except ResonantWavenumberError:
            raise
        except Exception as exc:  # annotate with the offending k
            raise ScatteringError(f"forward solve failed at k={k}: {exc}") from exc
        states.append(StateField(float(k), u, grid))
        sens.append(StateField(float(k), du, grid))
    return states, sens


def generate_spectrum(q, ks: Sequence[float], grid: SpatialGrid | None = None,
                      return_states: bool = False):
    """Boundary data (f, g, f', g') of ``q`` at the wavenumbers ``ks``."""
    ks = np.asarray(ks, dtype=float)
    if np.any(ks <= 0) or np.any(np.diff(ks) <= 0):
        raise SpectrumError("wavenumbers must be positive and strictly increasing")
    states, sens = solve_family(q, ks, grid)
    f, g = np.array([boundary_trace(u) for u in states]).T
    fp, gp = np.array([boundary_trace(w) for w in sens]).T
    spec = BoundarySpectrum(ks, f, g, fp, gp)
    if return_states:
        return spec, states
    return spec
