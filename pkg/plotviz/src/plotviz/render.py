"""The figure kinds: grey-scale field maps, envelope maps, waveform
overlays, reflection-model comparison, ground-kernel plot.

Deterministic output: fixed colormap, fixed dpi, no timestamps.  Every
figure writes a data sidecar (the consumed values re-serialized) so the
plotted numbers round-trip exactly.
"""

import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import readers
from .readers import InputError

DPI = 150
CMAP = "gray_r"


def _save(fig, out_path):
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    return [out_path]


def _sidecar_path(out_path, idx=None):
    base = out_path + (".data.csv" if idx is None
                       else f".data{idx}.csv")
    return base


def field_map(manifest_path, out_path, pattern="field"):
    """Grey-scale |u| maps of every matching grid file (montage)."""
    _, files = readers.load_manifest(manifest_path)
    grids = readers.find_files(files, contains=pattern)
    if not grids:
        raise InputError(f"no grid files matching {pattern!r} in manifest")
    n = len(grids)
    ncols = min(n, 2)
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(7.0 * ncols,
                                                    3.2 * nrows),
                             squeeze=False)
    written = []
    for idx, path in enumerate(grids):
        values, meta = readers.read_grid(path)
        ax = axes[idx // ncols][idx % ncols]
        extent = [meta["origin_outer"],
                  meta["origin_outer"] + meta["d_outer"] * values.shape[0],
                  meta["origin_inner"],
                  meta["origin_inner"] + meta["d_inner"] * values.shape[1]]
        ax.imshow(np.abs(values).T, origin="lower", aspect="auto",
                  extent=extent, cmap=CMAP)
        ax.set_xlabel("range x (m)")
        ax.set_ylabel("height z (m)")
        ax.set_title(os.path.basename(path), fontsize=9)
        side = _sidecar_path(out_path, idx if n > 1 else None)
        readers.write_sidecar_grid(side, values, meta)
        written.append(side)
    for idx in range(n, nrows * ncols):
        axes[idx // ncols][idx % ncols].axis("off")
    fig.tight_layout()
    return _save(fig, out_path) + written


def envelope_map(manifest_path, out_path, pattern=None):
    """|H|(delay, height) grey map of a station/envelope block."""
    _, files = readers.load_manifest(manifest_path)
    pattern = pattern or "envelope"
    grids = readers.find_files(files, contains=pattern) \
        or readers.find_files(files, contains="station")
    if not grids:
        raise InputError("no envelope or station blocks in manifest")
    values, meta = readers.read_grid(grids[0])
    env = np.abs(values)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    extent = [meta["origin_outer"],
              meta["origin_outer"] + meta["d_outer"] * values.shape[0],
              meta["origin_inner"],
              meta["origin_inner"] + meta["d_inner"] * values.shape[1]]
    ax.imshow(env.T, origin="lower", aspect="auto", extent=extent, cmap=CMAP)
    ax.set_xlabel("delay s = ct - x (m)")
    ax.set_ylabel("receiver height z (m)")
    ax.set_title(os.path.basename(grids[0]), fontsize=9)
    side = _sidecar_path(out_path)
    readers.write_sidecar_grid(side, values, meta)
    fig.tight_layout()
    return _save(fig, out_path) + [side]


def waveform_overlay(manifest_paths, out_path):
    """Probe waveforms from one or more runs on a shared delay axis."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    written = []
    styles = ["-", "--", ":", "-."]
    idx = 0
    for mpath in manifest_paths:
        _, files = readers.load_manifest(mpath)
        probes = readers.find_files(files, prefix="probe_")
        if not probes:
            raise InputError(f"no probe waveforms in {mpath}")
        for path in probes:
            names, data = readers.read_table(path)
            label = os.path.basename(os.path.dirname(path)) + "/" \
                + os.path.basename(path)
            ax.plot(data[:, 0], data[:, 1], styles[idx % len(styles)],
                    linewidth=1.0, label=label)
            side = _sidecar_path(out_path, idx)
            readers.write_sidecar_table(side, names, data)
            written.append(side)
            idx += 1
    ax.set_xlabel("delay s = ct - x (m)")
    ax.set_ylabel("field")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_path) + written


def reflection_comparison(manifest_path, out_path):
    """Magnitudes of the three reflection models vs grazing angle."""
    _, files = readers.load_manifest(manifest_path)
    tables = readers.find_files(files, contains="reflection")
    if not tables:
        raise InputError("no reflection table in manifest")
    names, data = readers.read_table(tables[0])
    beta = data[:, 0]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for i, label in enumerate(("exact", "classical impedance",
                               "modified impedance")):
        vals = data[:, 1 + 2 * i] + 1j * data[:, 2 + 2 * i]
        ax.plot(beta, np.abs(vals), ["-", "--", ":"][i], label=label)
    ax.set_xlabel("grazing angle (rad)")
    ax.set_ylabel("|R|")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8)
    side = _sidecar_path(out_path)
    readers.write_sidecar_table(side, names, data)
    fig.tight_layout()
    return _save(fig, out_path) + [side]


def kernel_plot(manifest_path, out_path):
    """Ground memory kernel N(s)."""
    _, files = readers.load_manifest(manifest_path)
    tables = readers.find_files(files, contains="kernel")
    if not tables:
        raise InputError("no kernel table in manifest")
    names, data = readers.read_table(tables[0])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(data[:, 0], data[:, 1], "-")
    ax.set_xlabel("s (m)")
    ax.set_ylabel("N (1/m)")
    side = _sidecar_path(out_path)
    readers.write_sidecar_table(side, names, data)
    fig.tight_layout()
    return _save(fig, out_path) + [side]


KINDS = {
    "field-map": field_map,
    "envelope-map": envelope_map,
    "waveform": waveform_overlay,
    "reflection": reflection_comparison,
    "kernel": kernel_plot,
}
