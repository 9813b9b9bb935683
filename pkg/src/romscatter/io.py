"""CSV persistence and run manifests.

All numeric columns are written in scientific notation with 17 significant
digits, so every file parses back to the identical doubles.
"""

from __future__ import annotations

import csv
import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import SpectrumError
from .forward import BoundarySpectrum
from .rom import RomSystem

FLOAT_FMT = "{:.16e}"

SPECTRUM_COLUMNS = ["k", "f_re", "f_im", "g_re", "g_im", "fp_re", "fp_im", "gp_re", "gp_im"]
STATE_COLUMNS = ["x", "re_u", "im_u"]
TABLE1_COLUMNS = ["sigma", "method", "param1_name", "param1", "alpha", "mean_u_error", "std_u_error",
                  "mean_q_error", "std_q_error", "n_success", "n_failed"]
SWEEP_COLUMNS = ["param1", "param2", "mean_error", "std_error", "mean_u_error", "std_u_error",
                 "n_failed"]


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT.format(float(v))


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> dict:
    """Columns of a CSV file; numeric columns become float arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols = {}
    for i, name in enumerate(header):
        vals = [r[i] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = vals
    return cols


# Spectra and states ==========================================================
def write_spectrum(path, spec: BoundarySpectrum):
    header = SPECTRUM_COLUMNS if spec.has_derivatives else SPECTRUM_COLUMNS[:5]
    rows = []
    for i, k in enumerate(spec.wavenumbers):
        row = [k, spec.f[i].real, spec.f[i].imag, spec.g[i].real, spec.g[i].imag]
        if spec.has_derivatives:
            row += [spec.fprime[i].real, spec.fprime[i].imag, spec.gprime[i].real, spec.gprime[i].imag]
        rows.append(row)
    return write_csv(path, header, rows)


def read_spectrum(path) -> BoundarySpectrum:
    c = read_csv(path)
    missing = [name for name in SPECTRUM_COLUMNS[:5] if name not in c]
    if missing:
        raise SpectrumError(f"{path}: missing columns {missing}")
    fp = gp = None
    if all(name in c for name in SPECTRUM_COLUMNS[5:]):
        fp = c["fp_re"] + 1j * c["fp_im"]
        gp = c["gp_re"] + 1j * c["gp_im"]
    return BoundarySpectrum(c["k"], c["f_re"] + 1j * c["f_im"], c["g_re"] + 1j * c["g_im"], fp, gp)


def write_state(path, x, values, truth=None):
    header = list(STATE_COLUMNS)
    cols = [x, np.real(values), np.imag(values)]
    if truth is not None:
        header += ["re_u_true", "im_u_true"]
        cols += [np.real(truth), np.imag(truth)]
    return write_csv(path, header, zip(*cols))


def read_state(path):
    """(x, u) and, when present, the true state stored alongside."""
    c = read_csv(path)
    u = c["re_u"] + 1j * c["im_u"]
    truth = c["re_u_true"] + 1j * c["im_u_true"] if "re_u_true" in c else None
    return c["x"], u, truth


def state_filename(k: float) -> str:
    return f"states_{k:.6f}.csv"


def write_potential(path, x, q_hat, q_true=None):
    header = ["x", "q"]
    cols = [x, q_hat]
    if q_true is not None:
        header.append("q_true")
        cols.append(q_true)
    return write_csv(path, header, zip(*cols))


# ROM systems =================================================================
def write_rom(path, rom: RomSystem):
    """Blocks S, M, B (m rows each) then f, g, k; re/im parts interleaved."""
    m = rom.m
    header = ["block", "row"] + [f"{p}_{j}" for j in range(m) for p in ("re", "im")]

    def inter(v):
        out = np.empty(2 * m)
        out[0::2] = np.real(v)
        out[1::2] = np.imag(v)
        return list(out)

    rows = []
    for name in ("S", "M", "B"):
        A = getattr(rom, name)
        rows += [[name, i] + inter(A[i]) for i in range(m)]
    rows.append(["f", 0] + inter(rom.f))
    rows.append(["g", 0] + inter(rom.g))
    rows.append(["k", 0] + inter(rom.wavenumbers))
    return write_csv(path, header, rows)


def read_rom(path) -> RomSystem:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        blocks = {}
        for row in reader:
            vals = np.array([float(v) for v in row[2:]])
            blocks.setdefault(row[0], []).append(vals[0::2] + 1j * vals[1::2])
    S, M, B = (np.array(blocks[n]) for n in ("S", "M", "B"))
    return RomSystem(S, M, B, blocks["f"][0], blocks["g"][0], blocks["k"][0].real)


# Statistics ==================================================================
def write_table1(path, rows):
    out = []
    for r in rows:
        res = r.result
        name = {"LO": "epsilon", "DA": "rho"}.get(r.method, "")
        out.append([r.sigma, r.method, name, r.param1 if name else float("nan"), r.alpha,
                    res.mean_state_error, res.std_state_error, res.mean_potential_error,
                    res.std_potential_error, res.n_success, res.n_failed])
    return write_csv(path, TABLE1_COLUMNS, out)


def sweep_filename(sigma: float, method: str) -> str:
    return f"sweep_{sigma:.0e}_{method}.csv"


def write_sweep(path, surf):
    rows = []
    for i, p1 in enumerate(surf.axis1):
        for j, p2 in enumerate(surf.axis2):
            rows.append([p1, p2, surf.mean_q[i, j], surf.std_q[i, j], surf.mean_u[i, j],
                         surf.std_u[i, j], int(surf.failures[i, j])])
    return write_csv(path, SWEEP_COLUMNS, rows)


# Manifest ====================================================================
def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, command, config_dict, seed, files, version, summary=None,
                   started=None):
    """List every emitted file with its digest; the manifest itself is not listed."""
    out_dir = Path(out_dir)
    now = datetime.now(timezone.utc).isoformat()
    manifest = {
        "command": command,
        "version": version,
        "seed": seed,
        "started_utc": started or now,
        "finished_utc": now,
        "config": config_dict,
        "outputs": {Path(f).name: sha256_file(f) for f in sorted(map(str, files))},
    }
    if summary is not None:
        manifest["summary"] = summary
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
