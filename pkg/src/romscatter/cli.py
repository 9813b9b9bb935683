"""Command-line entry point: ``romscatter <command> --config run.yaml``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import io as rio
from .config import config_to_dict, load_config
from .errors import ConfigError, ScatteringError, SpectrumError
from .experiments import (build_scenario, invert, monte_carlo, noise_table, parameter_sweep)
from .forward import generate_spectrum, solve_family, wavenumber_grid, SpatialGrid
from .rom import assemble_direct, assemble_from_data

log = logging.getLogger("romscatter")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def _rel_fro(A, B):
    return float(np.linalg.norm(A - B) / np.linalg.norm(B))


def _rel_max(A, B):
    return float(np.max(np.abs(A - B)) / np.max(np.abs(B)))


def cmd_forward(cfg, data, out):
    ks = wavenumber_grid(cfg.m, cfg.kmax, cfg.k_rule)
    grid = SpatialGrid(cfg.n)
    spec, states = generate_spectrum(cfg.true_potential, ks, grid, return_states=True)
    files = [rio.write_spectrum(out / "spectrum.csv", spec)]
    for s in states:
        files.append(rio.write_state(out / rio.state_filename(s.k), grid.nodes, s.values))
    return files, {"m": spec.m}


def cmd_invert(cfg, data, out):
    res = invert(cfg)
    x = res.grid.nodes
    files = []
    for est, tru in zip(res.estimates, res.true_states):
        files.append(rio.write_state(out / rio.state_filename(est.k), x, est.values, tru.values))
    files.append(rio.write_potential(out / "potential.csv", x, res.q_hat, res.q_true))
    spec, pred = res.spectrum, res.predicted_f
    files.append(rio.write_csv(
        out / "data.csv", ["k", "f_re", "f_im", "f_model_re", "f_model_im", "g_re", "g_im"],
        zip(spec.wavenumbers, spec.f.real, spec.f.imag, pred.real, pred.imag, spec.g.real, spec.g.imag)))
    files.append(rio.write_csv(out / "errors.csv", ["k", "state_error"],
                               zip(spec.wavenumbers, res.trial.state_errors)))
    summary = {"state_error": res.trial.state_error, "potential_error": res.trial.potential_error,
               "parameters": res.trial.parameters}
    return files, summary


def cmd_sweep(cfg, data, out):
    surf = parameter_sweep(cfg)
    path = rio.write_sweep(out / rio.sweep_filename(cfg.sigma, cfg.method), surf)
    i, j = surf.argmin("q")
    iu, _ = surf.argmin("u")
    summary = {"argmin_q": {"param1": float(surf.axis1[i]), "alpha": float(surf.axis2[j]),
                            "mean_q_error": float(surf.mean_q[i, j])},
               "argmin_u": {"param1": float(surf.axis1[iu]), "mean_u_error": float(surf.mean_u[iu, 0])}}
    return [path], summary


def cmd_mc(cfg, data, out):
    res = monte_carlo(cfg)
    name = cfg.param1_name or ""
    row = [cfg.sigma, cfg.method, name, cfg.param1 if name else float("nan"), cfg.alpha,
           res.mean_state_error, res.std_state_error, res.mean_potential_error,
           res.std_potential_error, res.n_success, res.n_failed]
    files = [rio.write_csv(out / "mc.csv", rio.TABLE1_COLUMNS, [row])]
    files.append(rio.write_csv(out / "trials.csv", ["trial", "state_error", "potential_error"],
                               zip(range(res.n_success), res.state_errors, res.potential_errors)))
    return files, {"n_success": res.n_success, "n_failed": res.n_failed}


def cmd_table1(cfg, data, out):
    rows, surfaces = noise_table(cfg)
    files = [rio.write_table1(out / "table1.csv", rows)]
    for (sigma, method), surf in surfaces.items():
        files.append(rio.write_sweep(out / rio.sweep_filename(sigma, method), surf))
    return files, None


def cmd_romcheck(cfg, data, out):
    t0 = time.perf_counter()
    grid = SpatialGrid(cfg.n)
    if "spectrum" in data:
        spec = rio.read_spectrum(data["spectrum"])
        if not spec.has_derivatives:
            raise SpectrumError(f"{data['spectrum']}: f' and g' columns are required for the ROM")
        states, _ = solve_family(cfg.true_potential, spec.wavenumbers, grid)
    else:
        sc = build_scenario(cfg)
        spec, states = sc.spectrum, sc.true_states
    rom = assemble_from_data(spec)
    direct = assemble_direct(states, cfg.true_potential)
    alt = assemble_from_data(spec, s_diagonal="uncorrected")
    report = {
        "m": spec.m,
        "S_rel_fro": _rel_fro(rom.S, direct.S),
        "M_rel_fro": _rel_fro(rom.M, direct.M),
        "S_rel_max": _rel_max(rom.S, direct.S),
        "M_rel_max": _rel_max(rom.M, direct.M),
        "S_uncorrected_diagonal_rel_fro": _rel_fro(alt.S, direct.S),
        "invariants": rom.invariant_report(),
        "seconds": time.perf_counter() - t0,
    }
    report["max_rel_deviation"] = max(report["S_rel_max"], report["M_rel_max"])
    files = [rio.write_rom(out / "rom_data.csv", rom), rio.write_rom(out / "rom_direct.csv", direct)]
    path = out / "romcheck.json"
    stable = {k: v for k, v in report.items() if k != "seconds"}
    path.write_text(json.dumps(stable, indent=2, sort_keys=True) + "\n")
    files.append(path)
    print(f"S: rel Frobenius {report['S_rel_fro']:.3e}   M: rel Frobenius {report['M_rel_fro']:.3e}   "
          f"max rel entry {report['max_rel_deviation']:.3e}")
    return files, report


COMMANDS = {
    "forward": (cmd_forward, "solve the forward problem; write spectrum and states"),
    "invert": (cmd_invert, "two-step inversion; write states, potential and data"),
    "sweep": (cmd_sweep, "parameter sweep at the configured noise level and method"),
    "mc": (cmd_mc, "Monte Carlo statistics at fixed parameters"),
    "table1": (cmd_table1, "tuned LO/DA statistics over the noise ladder"),
    "romcheck": (cmd_romcheck, "compare data-driven ROM matrices with the Gram oracle"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="romscatter", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="YAML config or a previous manifest.json")
        sp.add_argument("--seed", type=int, default=None, help="override the configured seed")
        sp.add_argument("--out", default="out", help="output directory (default: ./out)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = datetime.now(timezone.utc).isoformat()
    try:
        cfg, data = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        fn = COMMANDS[args.command][0]
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            files, summary = fn(cfg, data, out)
        rio.write_manifest(out, args.command, config_to_dict(cfg, data), cfg.seed, files,
                           __version__, summary, started)
    except (ConfigError, SpectrumError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ScatteringError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
