"""Batch command line: terrapulse run | validate | compare-reflection."""

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fileio
from .config import ConfigError, parse_config, resolved_text
from .hybrid import HybridScenario, run_hybrid
from .media import SoilModel, reflection_coefficient, complex_permittivity, C_LIGHT
from .pe import PEScenario, solve_pe
from .signal import AnalyticSignal, waveform
from .synthesis import run_sweep, synthesize_snapshot, synthesize_time_snapshot
from .tdpe import TDPEScenario, solve_tdpe


def _station_indices(stations_x, grid):
    return sorted({min(int(round(x / grid.dx)), grid.n_x)
                   for x in stations_x})


def _run_pe(cfg, out_dir, threads):
    grid = cfg.extra["grid"]
    scn = PEScenario(grid=grid, beam=cfg.extra["beam"],
                     k=cfg["frequency", "k0"], soil=cfg.extra["soil"],
                     terrain=cfg.extra["terrain"],
                     bottom_bc=cfg["pe", "bottom_bc"],
                     top_bc=cfg["pe", "top_bc"])
    stride = cfg["outputs", "field_stride"] or max(1, grid.n_x // 500)
    res = solve_pe(scn, keep_columns=stride)
    binary = cfg["outputs", "format"] == "binary"
    files = []
    files += fileio.write_field_grid(
        os.path.join(out_dir, "field.csv"), res.field.values,
        d_outer=grid.dx * (res.field.x_indices[1] - res.field.x_indices[0]),
        d_inner=grid.dz, origin_outer=0.0, origin_inner=0.0,
        k=scn.k, binary=binary)
    files += fileio.write_columns(
        os.path.join(out_dir, "energy.csv"), "x_m,energy_flux",
        [grid.x, res.energy])
    return files


def _run_synth(cfg, out_dir, threads):
    grid = cfg.extra["grid"]
    pulse = cfg.extra["pulse"]
    scn = PEScenario(grid=grid, beam=cfg.extra["beam"],
                     k=cfg["frequency", "k0"], soil=cfg.extra["soil"],
                     terrain=cfg.extra["terrain"],
                     bottom_bc=cfg["pe", "bottom_bc"],
                     top_bc=cfg["pe", "top_bc"])
    st_idx = _station_indices(cfg.extra["stations_x"], grid)
    s_window = cfg["sweep", "s_window"]
    executor = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        sweep = run_sweep(scn, pulse, s_window=s_window,
                          n_freqs=cfg["sweep", "n_freqs"],
                          half_width_factor=cfg["sweep", "half_width_factor"],
                          keep_columns=st_idx, executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    files = []
    ds_out = pulse.spatial_length / 40.0
    s_grid = np.arange(0.0, s_window, ds_out)
    for pos, ix in enumerate(st_idx):
        block = synthesize_snapshot(sweep, pulse, s_grid, station=pos)
        files += fileio.write_field_grid(
            os.path.join(out_dir, f"station_{ix * grid.dx:.0f}m.csv"),
            block.T, d_outer=ds_out, d_inner=grid.dz, origin_outer=0.0,
            origin_inner=0.0, k=pulse.k0)
    for idx, ct in enumerate(cfg.extra["snapshot_ct"]):
        snap = synthesize_time_snapshot(sweep, pulse, ct)
        files += fileio.write_field_grid(
            os.path.join(out_dir, f"snap_{idx}_s{ct:.0f}.csv"), snap,
            d_outer=grid.dx * (st_idx[1] - st_idx[0]) if len(st_idx) > 1
            else grid.dx,
            d_inner=grid.dz, origin_outer=0.0, origin_inner=0.0, k=pulse.k0)
    return files


def _run_tdpe(cfg, out_dir, threads):
    grid = cfg.extra["grid"]
    pulse = cfg.extra["pulse"]
    scn = TDPEScenario(grid=grid, ds=cfg["tdpe", "ds"],
                       s_window=cfg["tdpe", "s_window"],
                       beam=cfg.extra["beam"], pulse=pulse,
                       soil=cfg.extra["soil"],
                       terrain=cfg.extra["terrain"],
                       bottom_bc=cfg["tdpe", "bottom_bc"],
                       top_bc=cfg["tdpe", "top_bc"])
    st_idx = _station_indices(cfg.extra["stations_x"], grid)
    probes = [(min(int(round(x / grid.dx)), grid.n_x), z)
              for (x, z) in cfg.extra["probes"]]
    res = solve_tdpe(scn, stations=st_idx, probes=probes,
                     snapshot_ct=cfg.extra["snapshot_ct"])
    files = []
    s_abs = res.s_grid + res.s_offset
    for ix in st_idx:
        block = res.stations[ix]
        files += fileio.write_field_grid(
            os.path.join(out_dir, f"station_{ix * grid.dx:.0f}m.csv"),
            block.astype(complex), d_outer=scn.ds, d_inner=grid.dz,
            origin_outer=res.s_offset, origin_inner=0.0,
            k=pulse.k0)
    for (ix, z), wave in res.probes.items():
        from .signal import hilbert_imag
        im = hilbert_imag(wave)
        env = np.hypot(wave, im)
        files += fileio.write_waveform(
            os.path.join(out_dir, f"probe_{ix * grid.dx:.0f}m_{z:.0f}m.csv"),
            s_abs, wave + 1j * im, envelope=env)
    for idx, ct in enumerate(sorted(res.snapshots)):
        snap = res.snapshots[ct]
        files += fileio.write_field_grid(
            os.path.join(out_dir, f"snap_{idx}_s{ct:.0f}.csv"),
            snap.astype(complex),
            d_outer=(res.snapshot_x[1] - res.snapshot_x[0])
            if len(res.snapshot_x) > 1 else grid.dx,
            d_inner=grid.dz, origin_outer=0.0, origin_inner=0.0,
            k=pulse.k0)
    if res.kernel is not None:
        files += fileio.write_columns(
            os.path.join(out_dir, "kernel_N.csv"), "s_m,N_per_m",
            [np.arange(len(res.kernel.samples)) * res.kernel.ds,
             res.kernel.samples])
    return files


def _run_hybrid(cfg, out_dir, threads):
    grid = cfg.extra["grid"]
    pulse = cfg.extra["pulse"]
    scn = HybridScenario(grid=grid, beam=cfg.extra["beam"],
                         k0=cfg["frequency", "k0"], pulse=pulse,
                         soil=cfg.extra["soil"],
                         terrain=cfg.extra["terrain"],
                         bottom_bc=cfg["pe", "bottom_bc"],
                         top_bc=cfg["pe", "top_bc"],
                         delta=cfg["hybrid", "delta"])
    st_idx = _station_indices(cfg.extra["stations_x"], grid)
    s_grid = np.arange(cfg["hybrid", "s_min"], cfg["hybrid", "s_max"],
                       cfg["hybrid", "ds_out"])
    executor = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        res = run_hybrid(scn, stations=st_idx, s_grid=s_grid,
                         executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    files = []
    for ix, st in res.stations.items():
        files += fileio.write_field_grid(
            os.path.join(out_dir, f"envelope_{ix * grid.dx:.0f}m.csv"),
            st["H"], d_outer=cfg["hybrid", "ds_out"], d_inner=grid.dz,
            origin_outer=cfg["hybrid", "s_min"], origin_inner=0.0,
            k=pulse.k0)
    for (x, z) in cfg.extra["probes"]:
        ix = min(int(round(x / grid.dx)), grid.n_x)
        if ix not in res.stations:
            continue
        st = res.stations[ix]
        row = int(round((z - st["z_abs"][0]) / grid.dz))
        row = min(max(row, 0), len(st["z_abs"]) - 1)
        files += fileio.write_waveform(
            os.path.join(out_dir, f"probe_{ix * grid.dx:.0f}m_{z:.0f}m.csv"),
            s_grid, st["H"][:, row], envelope=st["envelope"][:, row]
            * math.sqrt(2.0))
    timing = os.path.join(out_dir, "timing.txt")
    with open(timing, "w") as fh:
        fh.write("hybrid solver timing report\n")
        fh.write(f"grid: {grid.n_x} x {grid.n_z} cells, "
                 f"{len(s_grid)} delay samples\n")
        fh.write(f"frequency split delta = {res.delta:g}\n")
        for key, val in sorted(res.timings.items()):
            fh.write(f"{key}: {val:.3f} s\n")
    files.append(timing)
    return files


def _run_reflection(cfg, out_dir, threads):
    soil = cfg.extra["soil"]
    k0 = cfg["frequency", "k0"]
    eps_c = complex_permittivity(soil, k0)
    r = cfg.section("reflection")
    beta = np.linspace(r["beta_min"], r["beta_max"], r["n_angles"])
    cols = [beta]
    header = "beta_rad"
    for model in ("fresnel", "leontovich", "modified"):
        vals = reflection_coefficient(model, eps_c, beta)
        cols += [vals.real, vals.imag]
        header += f",{model}_re,{model}_im"
    return fileio.write_columns(os.path.join(out_dir, "reflection.csv"),
                                header, cols)


RUNNERS = {"pe": _run_pe, "synth": _run_synth, "tdpe": _run_tdpe,
           "hybrid": _run_hybrid, "reflection": _run_reflection}


def _write_signal_table(cfg, out_dir):
    """Sampled source waveform and its analytic signal."""
    pulse = cfg.extra["pulse"]
    sig = AnalyticSignal(pulse)
    s = np.arange(0.0, 6.0 * pulse.spatial_length,
                  pulse.spatial_length / 60.0)
    F = waveform(pulse, s)
    fp = sig.eval_fast(s + 0j)
    return fileio.write_signal_table(
        os.path.join(out_dir, "pulse_signal.csv"),
        s, F, fp.real, fp.imag, np.abs(fp))


def run_config(cfg, out_dir=None, threads=None, seed=None):
    """Execute a validated configuration; returns the manifest path."""
    out_dir = out_dir or cfg["outputs", "dir"]
    threads = threads if threads is not None else cfg["run", "threads"]
    if seed is not None:
        cfg.values["run"]["seed"] = seed
    os.makedirs(out_dir, exist_ok=True)
    files = []
    resolved = os.path.join(out_dir, "resolved.cfg")
    with open(resolved, "w") as fh:
        fh.write(resolved_text(cfg))
    files.append(resolved)
    t0 = time.perf_counter()
    if "pulse" in cfg.extra:
        files += _write_signal_table(cfg, out_dir)
    files += RUNNERS[cfg.solver](cfg, out_dir, threads)
    wall = time.perf_counter() - t0
    manifest = fileio.write_manifest(
        out_dir, files,
        meta={"solver": cfg.solver, "config": os.path.basename(
            cfg.source_path or "inline"), "wall_time_s": round(wall, 3)},
        exclude_checksum=("timing.txt",))
    return manifest


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="terrapulse",
        description="EM wave and pulse propagation over lossy terrain")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario configuration")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)

    p_val = sub.add_parser("validate", help="check a configuration file")
    p_val.add_argument("--config", required=True)

    p_ref = sub.add_parser("compare-reflection",
                           help="tabulate the three reflection models")
    p_ref.add_argument("--epsilon", type=float, required=True)
    p_ref.add_argument("--sigma", type=float, default=0.0,
                       help="conductivity in S/m")
    p_ref.add_argument("--f", type=float, required=True,
                       help="frequency in Hz")
    p_ref.add_argument("--out", default="reflection.csv")

    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            parse_config(args.config)
            print(f"{args.config}: valid")
            return 0
        if args.command == "run":
            cfg = parse_config(args.config)
            manifest = run_config(cfg, out_dir=args.out,
                                  threads=args.threads, seed=args.seed)
            print(f"wrote {manifest}")
            return 0
        if args.command == "compare-reflection":
            soil = SoilModel(epsilon=args.epsilon, sigma_si=args.sigma)
            k0 = 2.0 * math.pi * args.f / C_LIGHT
            eps_c = complex_permittivity(soil, k0)
            beta = np.linspace(1e-3, math.pi / 2, 200)
            cols = [beta]
            header = "beta_rad"
            for model in ("fresnel", "leontovich", "modified"):
                vals = reflection_coefficient(model, eps_c, beta)
                cols += [vals.real, vals.imag]
                header += f",{model}_re,{model}_im"
            fileio.write_columns(args.out, header, cols)
            print(f"wrote {args.out}")
            return 0
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver failures: nonzero exit with diagnostic
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
