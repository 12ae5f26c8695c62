"""Parsers for the terrapulse text formats (independent implementation)."""

import json
import os

import numpy as np

FLOAT_FMT = "%.17e"


class InputError(ValueError):
    pass


def load_manifest(path):
    if not os.path.exists(path):
        raise InputError(f"manifest not found: {path}")
    with open(path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    files = [os.path.join(base, e["path"]) for e in manifest.get("files", [])]
    return manifest, files


def find_files(files, prefix=None, suffix=".csv", contains=None):
    out = []
    for f in files:
        name = os.path.basename(f)
        if prefix and not name.startswith(prefix):
            continue
        if suffix and not name.endswith(suffix):
            continue
        if contains and contains not in name:
            continue
        out.append(f)
    return sorted(out)


def read_grid(path):
    """Field/station grid: header '# n_o n_i d_o d_i o_o o_i k', re,im rows."""
    if not os.path.exists(path):
        raise InputError(f"grid file not found: {path}")
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise InputError(f"{path}: missing grid header")
        parts = header[1:].split()
        if len(parts) != 7:
            raise InputError(f"{path}: grid header needs 7 fields")
        n_outer, n_inner = int(float(parts[0])), int(float(parts[1]))
        meta = {
            "d_outer": float(parts[2]), "d_inner": float(parts[3]),
            "origin_outer": float(parts[4]), "origin_inner": float(parts[5]),
            "k": float(parts[6]),
        }
        second = fh.readline()
        if second.startswith("# binary payload:"):
            raw = os.path.join(os.path.dirname(os.path.abspath(path)),
                               second.split(":", 1)[1].strip())
            flat = np.fromfile(raw, dtype="<f8")
            if flat.size != 2 * n_outer * n_inner:
                raise InputError(f"{raw}: payload size mismatch")
            values = flat[0::2] + 1j * flat[1::2]
        else:
            rows = [second] + fh.readlines()
            rows = [r for r in rows if r.strip()]
            if len(rows) == 0:
                raise InputError(f"{path}: empty grid")
            if len(rows) != n_outer * n_inner:
                raise InputError(f"{path}: row count mismatch")
            data = np.array([[float(c) for c in r.split(",")] for r in rows])
            values = data[:, 0] + 1j * data[:, 1]
    if n_outer * n_inner == 0:
        raise InputError(f"{path}: empty grid")
    return values.reshape(n_outer, n_inner), meta


def read_table(path):
    """Comment-headed CSV; returns (column names, 2D float array)."""
    if not os.path.exists(path):
        raise InputError(f"table not found: {path}")
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise InputError(f"{path}: missing table header")
        names = [c.strip() for c in header[1:].strip().split(",")]
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise InputError(f"{path}: empty table")
    if data.shape[1] != len(names):
        raise InputError(f"{path}: column mismatch")
    return names, data


def write_sidecar_grid(path, values, meta):
    """Re-emit the consumed grid next to the figure for exact round-trips."""
    values = np.asarray(values, dtype=complex)
    n_outer, n_inner = values.shape
    with open(path, "w") as fh:
        fh.write("# %d %d " % (n_outer, n_inner) + " ".join(
            FLOAT_FMT % meta[k] for k in
            ("d_outer", "d_inner", "origin_outer", "origin_inner", "k"))
            + "\n")
        for v in values.reshape(-1):
            fh.write((FLOAT_FMT + "," + FLOAT_FMT + "\n") % (v.real, v.imag))


def write_sidecar_table(path, names, data):
    with open(path, "w") as fh:
        fh.write("# " + ",".join(names) + "\n")
        for row in np.asarray(data, dtype=float):
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
