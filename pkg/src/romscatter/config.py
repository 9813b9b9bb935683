"""YAML run configuration <-> :class:`ExperimentConfig`.

Example::

    grid: {n: 1000}
    wavenumbers: {m: 10, kmax: 10.0, rule: interior}
    true_potential:
      kind: gaussian-bumps
      bumps: [[4.0, 0.5, 0.08]]
      support: [0.1, 0.9]
    reference_potential: {kind: zero}
    method: DA
    parameters: {epsilon: 1.0e-3, rho: 1.0e-2, alpha: 1.0e-4}
    noise: {sigma: 0.0, derivatives: true}
    trials: 100
    seed: 0

A run manifest (``manifest.json``) is accepted wherever a config is: its
``config`` section is used.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .errors import ConfigError
from .experiments import ExperimentConfig
from .forward import PotentialModel

_SECTIONS = {
    "grid": {"n"},
    "wavenumbers": {"m", "kmax", "rule"},
    "parameters": {"epsilon", "rho", "alpha"},
    "noise": {"sigma", "derivatives"},
    "inversion": {"nq"},
    "lanczos": {"start"},
    "sweep": {"axis1", "alphas", "sigmas"},
    "data": {"spectrum"},
}
_SCALARS = {"method", "trials", "seed", "true_potential", "reference_potential"}


def _num(value, field, kind=float):
    if isinstance(value, bool):
        raise ConfigError(field, f"expected a number, got {value!r}")
    try:
        out = kind(float(value)) if kind is int else kind(value)
    except (TypeError, ValueError):
        raise ConfigError(field, f"expected a number, got {value!r}") from None
    if kind is int and float(value) != out:
        raise ConfigError(field, f"expected an integer, got {value!r}")
    return out


def _axis(value, field):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(field, "expected a list of numbers")
    return tuple(_num(v, f"{field}[{i}]") for i, v in enumerate(value))


def potential_from_dict(d, field) -> PotentialModel:
    if d is None or d == "zero":
        return PotentialModel.zero()
    if not isinstance(d, dict):
        raise ConfigError(field, "expected a mapping with a 'kind' key")
    kind = d.get("kind", "zero")
    extra = set(d) - {"kind", "bumps", "values", "support"}
    if extra:
        raise ConfigError(field, f"unknown keys {sorted(extra)}")
    try:
        if kind == "zero":
            return PotentialModel.zero()
        support = tuple(_num(v, f"{field}.support") for v in d.get("support", (0.0, 1.0)))
        if kind == "gaussian-bumps":
            bumps = d.get("bumps", [])
            flat = [_num(v, f"{field}.bumps") for b in bumps for v in b]
            return PotentialModel("gaussian-bumps", tuple(flat), support)
        if kind == "piecewise-constant":
            vals = [_num(v, f"{field}.values") for v in d.get("values", [])]
            return PotentialModel("piecewise-constant", tuple(vals), support)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, str(exc)) from None
    raise ConfigError(f"{field}.kind", f"unknown potential kind {kind!r}")


def potential_to_dict(q: PotentialModel) -> dict:
    if q.is_zero and q.kind == "gaussian-bumps":
        return {"kind": "zero"}
    if q.kind == "gaussian-bumps":
        c = q.coefficients
        return {"kind": q.kind, "bumps": [list(c[i:i + 3]) for i in range(0, len(c), 3)],
                "support": list(q.support)}
    return {"kind": q.kind, "values": list(q.coefficients), "support": list(q.support)}


def config_from_dict(raw: dict) -> tuple[ExperimentConfig, dict]:
    """Build a config; returns it with the ``data`` section (file inputs)."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    if "config" in raw and "outputs" in raw:
        raw = raw["config"]
    unknown = set(raw) - set(_SECTIONS) - _SCALARS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    for sec, keys in _SECTIONS.items():
        val = raw.get(sec, {})
        if not isinstance(val, dict):
            raise ConfigError(sec, "expected a mapping")
        bad = set(val) - keys
        if bad:
            raise ConfigError(f"{sec}.{sorted(bad)[0]}", "unknown key")

    kw = {}
    sec = raw.get("grid", {})
    if "n" in sec:
        kw["n"] = _num(sec["n"], "grid.n", int)
    sec = raw.get("wavenumbers", {})
    if "m" in sec:
        kw["m"] = _num(sec["m"], "wavenumbers.m", int)
    if "kmax" in sec:
        kw["kmax"] = _num(sec["kmax"], "wavenumbers.kmax")
    if "rule" in sec:
        kw["k_rule"] = str(sec["rule"])
    if "true_potential" in raw:
        kw["true_potential"] = potential_from_dict(raw["true_potential"], "true_potential")
    if "reference_potential" in raw:
        kw["reference_potential"] = potential_from_dict(raw["reference_potential"],
                                                        "reference_potential")
    if "method" in raw:
        kw["method"] = str(raw["method"]).upper()
    sec = raw.get("parameters", {})
    for key in ("epsilon", "rho", "alpha"):
        if key in sec:
            kw[key] = _num(sec[key], f"parameters.{key}")
    sec = raw.get("noise", {})
    if "sigma" in sec:
        kw["sigma"] = _num(sec["sigma"], "noise.sigma")
    if "derivatives" in sec:
        if not isinstance(sec["derivatives"], bool):
            raise ConfigError("noise.derivatives", "expected true or false")
        kw["noise_derivatives"] = sec["derivatives"]
    for key in ("trials", "seed"):
        if key in raw:
            kw[key] = _num(raw[key], key, int)
    sec = raw.get("inversion", {})
    if "nq" in sec:
        kw["nq"] = _num(sec["nq"], "inversion.nq", int)
    sec = raw.get("lanczos", {})
    if "start" in sec:
        kw["lanczos_start"] = str(sec["start"])
    sec = raw.get("sweep", {})
    for key in ("axis1", "alphas", "sigmas"):
        if key in sec:
            kw[key] = _axis(sec[key], f"sweep.{key}")
    try:
        cfg = ExperimentConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("<root>", str(exc)) from None
    return cfg, dict(raw.get("data", {}))


def config_to_dict(cfg: ExperimentConfig, data: dict | None = None) -> dict:
    out = {
        "grid": {"n": cfg.n},
        "wavenumbers": {"m": cfg.m, "kmax": cfg.kmax, "rule": cfg.k_rule},
        "true_potential": potential_to_dict(cfg.true_potential),
        "reference_potential": potential_to_dict(cfg.reference_potential),
        "method": cfg.method,
        "parameters": {"epsilon": cfg.epsilon, "rho": cfg.rho, "alpha": cfg.alpha},
        "noise": {"sigma": cfg.sigma, "derivatives": cfg.noise_derivatives},
        "trials": cfg.trials,
        "seed": cfg.seed,
        "inversion": {"nq": cfg.nq},
        "lanczos": {"start": cfg.lanczos_start},
        "sweep": {"axis1": list(cfg.axis1), "alphas": list(cfg.alphas), "sigmas": list(cfg.sigmas)},
    }
    if data:
        out["data"] = dict(data)
    return out


def load_config(path) -> tuple[ExperimentConfig, dict]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"not valid YAML/JSON: {exc}") from None
    cfg, data = config_from_dict(raw)
    if "spectrum" in data:
        spec = Path(data["spectrum"])
        if not spec.is_absolute():
            data["spectrum"] = str((path.parent / spec).resolve())
    return cfg, data
