"""Two-step inversion end to end, plus the noise and parameter studies.

A trial runs: truth spectrum -> noise -> data ROM -> state estimates at every
measured wavenumber -> Lippmann-Schwinger kernel -> Tikhonov solve -> errors.
Everything that does not depend on the noise (truth and reference solves, the
reference ROM, quadrature weights) lives in a cached :class:`Scenario`.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ScatteringError, StageError
from .forward import (BoundarySpectrum, PotentialModel, SpatialGrid, generate_spectrum,
                      wavenumber_grid)
from .inversion import PiecewiseConstantBasis, assemble_kernel, tikhonov_path
from .rom import assemble_from_data
from .states import METHODS, estimate_states, lanczos_m_orthogonal, lanczos_start

log = logging.getLogger(__name__)

DEFAULT_TRUE_POTENTIAL = PotentialModel.gaussian([(4.0, 0.5, 0.08)], support=(0.1, 0.9))
POWERS_OF_TEN = tuple(10.0**p for p in range(-4, 2))
SIGMA_LADDER = (1e-6, 1e-5, 1e-4, 1e-3)


@dataclass(frozen=True)
class ExperimentConfig:
    m: int = 10
    kmax: float = 10.0
    k_rule: str = "interior"
    n: int = 1000
    true_potential: PotentialModel = DEFAULT_TRUE_POTENTIAL
    reference_potential: PotentialModel = field(default_factory=PotentialModel.zero)
    method: str = "DA"
    epsilon: float = 1e-3
    rho: float = 1e-2
    alpha: float = 1e-4
    sigma: float = 0.0
    noise_derivatives: bool = True
    trials: int = 100
    seed: int = 0
    nq: int = 100
    lanczos_start: str = "trace"
    axis1: tuple = POWERS_OF_TEN
    alphas: tuple = POWERS_OF_TEN
    sigmas: tuple = SIGMA_LADDER

    def __post_init__(self):
        self.validate()

    def validate(self):
        if int(self.m) != self.m or self.m < 1:
            raise ConfigError("m", f"must be a positive integer, got {self.m!r}")
        if not self.kmax > 0:
            raise ConfigError("kmax", "must be positive")
        if self.k_rule not in ("interior", "right"):
            raise ConfigError("k_rule", f"expected 'interior' or 'right', got {self.k_rule!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError("n", "grid needs at least two cells")
        if self.method not in METHODS:
            raise ConfigError("method", f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.sigma >= 0:
            raise ConfigError("sigma", "noise level must be >= 0")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials", "must be a positive integer")
        if not self.epsilon >= 0:
            raise ConfigError("epsilon", "must be >= 0")
        if not self.rho > 0:
            raise ConfigError("rho", "must be positive")
        if not self.alpha >= 0:
            raise ConfigError("alpha", "must be >= 0")
        if int(self.nq) != self.nq or self.nq < 1:
            raise ConfigError("nq", "must be a positive integer")
        if self.lanczos_start not in ("trace", "source"):
            raise ConfigError("lanczos_start", "expected 'trace' or 'source'")
        for name in ("axis1", "alphas", "sigmas"):
            vals = getattr(self, name)
            if len(vals) == 0:
                raise ConfigError(name, "axis must be nonempty")
            if any(not v >= 0 for v in vals):
                raise ConfigError(name, "values must be nonnegative")

    @property
    def param1_name(self):
        return {"LO": "epsilon", "DA": "rho"}.get(self.method)

    @property
    def param1(self):
        name = self.param1_name
        return getattr(self, name) if name else None

    def with_param1(self, value):
        name = self.param1_name
        return dataclasses.replace(self, **{name: value}) if name else self

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


@dataclass(eq=False)
class Scenario:
    """Noise-independent ingredients shared by every trial of a configuration."""

    grid: SpatialGrid
    spectrum: BoundarySpectrum
    true_states: list
    ref_spectrum: BoundarySpectrum
    ref_states: list
    q_true: np.ndarray
    q_ref: np.ndarray
    basis: PiecewiseConstantBasis

    @functools.cached_property
    def ref_rom(self):
        return assemble_from_data(self.ref_spectrum)

    _factors: dict = field(default_factory=dict, repr=False)

    def ref_factor(self, epsilon, start):
        key = (float(epsilon), start)
        if key not in self._factors:
            rom = self.ref_rom
            self._factors[key] = lanczos_m_orthogonal(rom.S, rom.M, epsilon,
                                                      lanczos_start(rom, epsilon, start))
        return self._factors[key]


def _scenario_key(config: ExperimentConfig):
    return (config.m, config.kmax, config.k_rule, config.n, config.true_potential,
            config.reference_potential, config.nq)


@functools.lru_cache(maxsize=8)
def _build_scenario(key) -> Scenario:
    m, kmax, rule, n, qtrue, qref, nq = key
    grid = SpatialGrid(n)
    ks = wavenumber_grid(m, kmax, rule)
    spec, states = generate_spectrum(qtrue, ks, grid, return_states=True)
    ref_spec, ref_states = generate_spectrum(qref, ks, grid, return_states=True)
    return Scenario(grid, spec, states, ref_spec, ref_states, qtrue.on(grid), qref.on(grid),
                    PiecewiseConstantBasis(nq))


def build_scenario(config: ExperimentConfig) -> Scenario:
    try:
        return _build_scenario(_scenario_key(config))
    except ScatteringError as exc:
        raise StageError("forward", exc) from exc


# Metrics =====================================================================
def relative_error(estimate, truth) -> float:
    """||estimate - truth||_2 / ||truth||_2."""
    truth = np.asarray(truth)
    nt = np.linalg.norm(truth)
    if nt == 0:
        raise ValueError("relative error undefined for a zero-norm truth")
    return float(np.linalg.norm(np.asarray(estimate) - truth) / nt)


def state_errors(estimates, truths):
    """Pooled relative error over all states, and the per-state errors."""
    est = np.column_stack([np.asarray(e.values if hasattr(e, "values") else e) for e in estimates])
    tru = np.column_stack([np.asarray(t.values if hasattr(t, "values") else t) for t in truths])
    per = np.linalg.norm(est - tru, axis=0) / np.linalg.norm(tru, axis=0)
    return relative_error(est, tru), per


# Noise =======================================================================
def add_noise(spectrum: BoundarySpectrum, sigma: float, seed: int,
              derivatives: bool = True) -> BoundarySpectrum:
    """Add N(0, sigma^2) to the real and imaginary parts of every datum.

    Draw order is f, g, f', g' so that f and g see the same noise whether or
    not the derivatives are perturbed.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return spectrum
    rng = np.random.default_rng(seed)
    m = spectrum.m

    def draw():
        z = rng.standard_normal((2, m))
        return sigma * (z[0] + 1j * z[1])

    f = spectrum.f + draw()
    g = spectrum.g + draw()
    fp, gp = spectrum.fprime, spectrum.gprime
    if derivatives and spectrum.has_derivatives:
        fp = fp + draw()
        gp = gp + draw()
    return spectrum.replace(f=f, g=g, fprime=fp, gprime=gp)


# Trials ======================================================================
@dataclass(frozen=True)
class TrialResult:
    state_error: float
    potential_error: float
    state_errors: np.ndarray
    parameters: dict
    seed: int


@dataclass
class InversionResult:
    """Everything a single inversion produces (figure data for one run)."""

    config: ExperimentConfig
    seed: int
    spectrum: BoundarySpectrum
    estimates: list
    true_states: list
    dq: np.ndarray
    q_hat: np.ndarray
    q_true: np.ndarray
    kernel: object
    trial: TrialResult
    grid: SpatialGrid = None

    @property
    def predicted_f(self):
        """f0 + K dq, the reflection data predicted by the linearized model."""
        return self.spectrum.f - self.kernel.rhs + self.kernel.K @ self.dq


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except (ScatteringError, np.linalg.LinAlgError, ValueError) as exc:
        raise StageError(name, exc) from exc


def _estimates(sc: Scenario, config: ExperimentConfig, spectrum: BoundarySpectrum, p1):
    method = config.method
    data_rom = None
    if method in ("LO", "DA"):
        data_rom = _stage("rom", assemble_from_data, spectrum)
    kw = dict(data_rom=data_rom, ref_rom=sc.ref_rom if method == "LO" else None,
              ref_spectrum=sc.ref_spectrum, ref_states=sc.ref_states, true_states=sc.true_states,
              start=config.lanczos_start)
    if method == "LO":
        kw["epsilon"] = p1
        kw["ref_factor"] = _stage("states", sc.ref_factor, p1, config.lanczos_start)
    elif method == "DA":
        kw["rho"] = p1
    return _stage("states", estimate_states, method, **kw)


def _trial_path(sc: Scenario, config: ExperimentConfig, p1, alphas, seed):
    """State errors and the potential error for every alpha, one noise draw."""
    spectrum = add_noise(sc.spectrum, config.sigma, seed, config.noise_derivatives)
    est = _estimates(sc, config, spectrum, p1)
    kernel = _stage("kernel", assemble_kernel, sc.ref_states, est, spectrum, sc.ref_spectrum,
                    sc.basis, sc.grid)
    coeffs = _stage("tikhonov", tikhonov_path, kernel, alphas)
    # piecewise-constant coefficients evaluated at the nodes
    cells = sc.basis.model(np.zeros(sc.basis.nq)).cell_index(sc.grid.nodes)
    q_hat = sc.q_ref[None, :] + coeffs[:, cells]
    u_err, per = state_errors(est, sc.true_states)
    q_err = np.linalg.norm(q_hat - sc.q_true[None, :], axis=1) / np.linalg.norm(sc.q_true)
    return u_err, per, q_err, (spectrum, est, kernel, coeffs, q_hat)


def _params(config, p1, alpha):
    out = {"method": config.method, "alpha": float(alpha), "sigma": float(config.sigma)}
    if config.param1_name:
        out[config.param1_name] = float(p1)
    return out


def invert(config: ExperimentConfig, seed: int | None = None) -> InversionResult:
    """Run the two-step inversion once and keep all intermediate products."""
    seed = config.seed if seed is None else seed
    sc = build_scenario(config)
    u_err, per, q_err, (spec, est, kernel, coeffs, q_hat) = _trial_path(
        sc, config, config.param1, [config.alpha], seed)
    trial = TrialResult(u_err, float(q_err[0]), per, _params(config, config.param1, config.alpha), seed)
    return InversionResult(config, seed, spec, est, sc.true_states, coeffs[0], q_hat[0],
                           sc.q_true, kernel, trial, sc.grid)


def run_trial(config: ExperimentConfig, seed: int | None = None) -> TrialResult:
    return invert(config, seed).trial


# Statistics ==================================================================
@dataclass(frozen=True)
class MonteCarloResult:
    mean_state_error: float
    std_state_error: float
    mean_potential_error: float
    std_potential_error: float
    n_success: int
    n_failed: int
    state_errors: np.ndarray
    potential_errors: np.ndarray
    parameters: dict

    @property
    def sem_state_error(self):
        return self.std_state_error / np.sqrt(max(self.n_success, 1))

    @property
    def sem_potential_error(self):
        return self.std_potential_error / np.sqrt(max(self.n_success, 1))


def _summ(vals):
    vals = np.asarray(vals, dtype=float)
    if vals.size == 0:
        return float("nan"), float("nan")
    return float(np.mean(vals)), float(np.std(vals))


@dataclass(frozen=True)
class SweepSurface:
    method: str
    sigma: float
    axis1: np.ndarray
    axis2: np.ndarray
    mean_q: np.ndarray
    std_q: np.ndarray
    mean_u: np.ndarray
    std_u: np.ndarray
    failures: np.ndarray
    trials: int
    q_errors: np.ndarray = None  # (len1, len2, trials), NaN for failed trials
    u_errors: np.ndarray = None  # (len1, trials)

    @property
    def param1_name(self):
        return {"LO": "epsilon", "DA": "rho"}.get(self.method)

    def argmin(self, metric: str = "q"):
        """(i, j) of the smallest mean error; NaN cells (all trials failed) are skipped."""
        surf = {"q": self.mean_q, "u": self.mean_u}[metric]
        if np.all(np.isnan(surf)):
            raise ScatteringError(f"every sweep cell failed for {self.method} at sigma={self.sigma}")
        return np.unravel_index(np.nanargmin(surf), surf.shape)

    def cell(self, i, j) -> MonteCarloResult:
        ok = ~np.isnan(self.q_errors[i, j])
        mu_u, sd_u = _summ(self.u_errors[i][ok])
        mu_q, sd_q = _summ(self.q_errors[i, j][ok])
        params = {"method": self.method, "alpha": float(self.axis2[j]), "sigma": float(self.sigma)}
        if self.param1_name:
            params[self.param1_name] = float(self.axis1[i])
        return MonteCarloResult(mu_u, sd_u, mu_q, sd_q, int(ok.sum()), int((~ok).sum()),
                                self.u_errors[i][ok], self.q_errors[i, j][ok], params)


def parameter_sweep(config: ExperimentConfig, axis1=None, alphas=None) -> SweepSurface:
    """Monte Carlo over a (param1, alpha) grid.

    Trial t uses seed ``config.seed + t`` in every cell, so cells differ only
    in their parameters.  For TRUE and BORN the first axis is ignored.
    """
    axis1 = tuple(config.axis1 if axis1 is None else axis1)
    alphas = tuple(config.alphas if alphas is None else alphas)
    if not axis1 or not alphas:
        raise ValueError("sweep axes must be nonempty")
    if config.param1_name is None:
        axis1 = (float("nan"),)
    sc = build_scenario(config)
    n1, n2, nt = len(axis1), len(alphas), config.trials
    qerr = np.full((n1, n2, nt), np.nan)
    uerr = np.full((n1, nt), np.nan)
    for i, p1 in enumerate(axis1):
        for t in range(nt):
            seed = config.seed + t
            try:
                u, _, q, _ = _trial_path(sc, config, p1, alphas, seed)
            except StageError as exc:
                log.info("trial %d failed (%s=%s): %s", t, config.param1_name, p1, exc)
                continue
            uerr[i, t] = u
            qerr[i, :, t] = q
    failures = np.isnan(qerr).sum(axis=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean_q = np.nanmean(qerr, axis=2)
        std_q = np.nanstd(qerr, axis=2)
        mu = np.nanmean(uerr, axis=1)
        sd = np.nanstd(uerr, axis=1)
    mean_u = np.repeat(mu[:, None], n2, axis=1)
    std_u = np.repeat(sd[:, None], n2, axis=1)
    return SweepSurface(config.method, float(config.sigma), np.array(axis1, dtype=float),
                        np.array(alphas, dtype=float), mean_q, std_q, mean_u, std_u, failures,
                        nt, qerr, uerr)


def monte_carlo(config: ExperimentConfig) -> MonteCarloResult:
    """Mean and standard deviation of the errors over ``config.trials`` seeds."""
    p1 = config.param1
    surf = parameter_sweep(config, axis1=(p1,) if p1 is not None else None, alphas=(config.alpha,))
    return surf.cell(0, 0)


# Table ========================================================================
@dataclass(frozen=True)
class TableRow:
    sigma: float
    method: str
    param1: float
    alpha: float
    result: MonteCarloResult
    u_optimal_param1: float
    u_optimal: MonteCarloResult


def noise_table(config: ExperimentConfig, sigmas=None, methods=("LO", "DA")):
    """Parameter-tuned statistics per (sigma, method), selected jointly on the q-error.

    Each row also carries the best state error over the first axis, so the
    state comparison can be made at each method's own optimum.
    """
    rows, surfaces = [], {}
    for sigma in (config.sigmas if sigmas is None else sigmas):
        for method in methods:
            cfg = config.replace(sigma=float(sigma), method=method)
            surf = parameter_sweep(cfg)
            surfaces[(float(sigma), method)] = surf
            i, j = surf.argmin("q")
            iu, ju = surf.argmin("u")
            rows.append(TableRow(float(sigma), method, float(surf.axis1[i]), float(surf.axis2[j]),
                                 surf.cell(i, j), float(surf.axis1[iu]), surf.cell(iu, ju)))
    return rows, surfaces
