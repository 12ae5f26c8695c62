"""Delimited output formats and the run manifest.

Field grids are plain text: one header line ``# nx nz dx dz x0 z0 k`` then
``nx * nz`` rows of ``re,im`` in row-major order (outer index first).  The
same layout carries (x, z) fields and (s, z) station blocks; the header
spacings are the outer/inner steps.  A packed binary variant stores the
complex values as little-endian float64 pairs next to a text sidecar with
the same header.  Probe waveforms are ``s_m,value_re,value_im,envelope``
rows.  Everything is written with fixed 17-digit formatting so reruns
byte-match.
"""

import hashlib
import json
import os

import numpy as np

FLOAT_FMT = "%.17e"


class FileFormatError(ValueError):
    pass


def _header_line(values):
    return "# " + " ".join(FLOAT_FMT % v for v in values)


def write_field_grid(path, values, d_outer, d_inner, origin_outer,
                     origin_inner, k, binary=False):
    """Write a complex 2D block; returns the list of files created."""
    values = np.asarray(values, dtype=complex)
    if values.ndim != 2:
        raise FileFormatError("field grid must be 2D")
    n_outer, n_inner = values.shape
    header = "# %d %d " % (n_outer, n_inner) + " ".join(
        FLOAT_FMT % v for v in (d_outer, d_inner, origin_outer,
                                origin_inner, k))
    if binary:
        raw_path = os.fspath(path) + ".f64"
        flat = np.empty(values.size * 2)
        flat[0::2] = values.real.ravel()
        flat[1::2] = values.imag.ravel()
        flat.astype("<f8").tofile(raw_path)
        with open(path, "w") as fh:
            fh.write(header + "\n")
            fh.write("# binary payload: " + os.path.basename(raw_path) + "\n")
        return [os.fspath(path), raw_path]
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in values.reshape(-1):
            fh.write((FLOAT_FMT + "," + FLOAT_FMT + "\n")
                     % (row.real, row.imag))
    return [os.fspath(path)]


def read_field_grid(path):
    """Read a field grid written by :func:`write_field_grid`.

    Returns (values, meta dict)."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise FileFormatError(f"{path}: missing header line")
        parts = header[1:].split()
        if len(parts) != 7:
            raise FileFormatError(f"{path}: header needs 7 fields")
        n_outer, n_inner = int(float(parts[0])), int(float(parts[1]))
        d_outer, d_inner, o_outer, o_inner, k = map(float, parts[2:])
        second = fh.readline()
        if second.startswith("# binary payload:"):
            raw = os.path.join(os.path.dirname(os.fspath(path)),
                               second.split(":", 1)[1].strip())
            flat = np.fromfile(raw, dtype="<f8")
            if flat.size != 2 * n_outer * n_inner:
                raise FileFormatError(f"{raw}: payload size mismatch")
            values = (flat[0::2] + 1j * flat[1::2]).reshape(n_outer, n_inner)
        else:
            rows = [second] + fh.readlines()
            rows = [r for r in rows if r.strip()]
            if len(rows) != n_outer * n_inner:
                raise FileFormatError(
                    f"{path}: expected {n_outer * n_inner} rows, "
                    f"got {len(rows)}")
            data = np.array([[float(c) for c in r.split(",")] for r in rows])
            values = (data[:, 0] + 1j * data[:, 1]).reshape(n_outer, n_inner)
    meta = {"d_outer": d_outer, "d_inner": d_inner, "origin_outer": o_outer,
            "origin_inner": o_inner, "k": k}
    return values, meta


def write_waveform(path, s, values, envelope=None):
    """Probe waveform rows ``s_m,value_re,value_im,envelope``."""
    s = np.asarray(s, dtype=float)
    values = np.asarray(values, dtype=complex)
    if envelope is None:
        envelope = np.abs(values)
    with open(path, "w") as fh:
        fh.write("# s_m,value_re,value_im,envelope\n")
        for row in zip(s, values.real, values.imag, envelope):
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    return [os.fspath(path)]


def read_waveform(path):
    data = np.loadtxt(path, delimiter=",", comments="#")
    if data.ndim == 1:
        data = data[None, :]
    if data.shape[1] != 4:
        raise FileFormatError(f"{path}: waveform rows need 4 columns")
    return data[:, 0], data[:, 1] + 1j * data[:, 2], data[:, 3]


def write_signal_table(path, s, F, re_fp, im_fp, envelope):
    """Waveform sample rows ``s_m,F,Re_Fplus,Im_Fplus,envelope``."""
    with open(path, "w") as fh:
        fh.write("# s_m,F,Re_Fplus,Im_Fplus,envelope\n")
        for row in zip(s, F, re_fp, im_fp, envelope):
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    return [os.fspath(path)]


def write_columns(path, header, columns):
    """Generic comment-headed CSV with fixed formatting."""
    columns = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w") as fh:
        fh.write("# " + header + "\n")
        for row in zip(*columns):
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    return [os.fspath(path)]


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, files, meta, exclude_checksum=()):
    """Manifest of every emitted file with checksums, itself deterministic.

    ``exclude_checksum`` names files (relative) whose content is allowed to
    differ between reruns (timing reports); they are listed with a dash.
    """
    entries = []
    for f in sorted(set(files)):
        rel = os.path.relpath(f, out_dir)
        if rel in exclude_checksum:
            entries.append({"path": rel, "sha256": "-", "bytes": -1})
        else:
            entries.append({"path": rel, "sha256": sha256_of(f),
                            "bytes": os.path.getsize(f)})
    manifest = {"meta": meta, "files": entries}
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(path):
    with open(path) as fh:
        return json.load(fh)
