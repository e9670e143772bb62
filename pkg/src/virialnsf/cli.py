"""Command line interface: ``validate``, ``run``, ``mms``, ``diagnose``, ``export``.

Exit codes of ``run`` (and ``diagnose``): 0 success, 1 configuration or
validation error, 2 solver failure (fixed point not reached, positivity
lost), 3 an inequality check failed (artifacts are still written).
"""

from __future__ import annotations

import argparse
import csv
import glob
import io
import logging
import os
import sys

import numpy as np

from . import diagnostics as dg
from . import fields as fd
from . import mms
from . import statelaw as sl
from .config import load_config
from .coupler import FixedPointConfig, SlabTrajectory, continue_slabs, trajectory_distance
from .errors import ConfigError, ConvergenceFailure, FormatError, VirialNSFError
from .hydro import HydroParams, HydroState
from .snapshot import TAGS, read_snapshot, snapshot_from_state, write_snapshot
from .thermal import ThermalParams, theta_field
from .validator import ScanGrid, ValidatorOptions, validate

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INEQUALITY = 0, 1, 2, 3

log = logging.getLogger("virialnsf")


# ----------------------------------------------------------------------------
# helpers


def series_csv(series: dg.DiagnosticSeries) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(dg.SERIES_COLUMNS)
    for row in series.rows():
        wr.writerow([repr(v) for v in row])
    return buf.getvalue()


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _attach_log(directory):
    handler = logging.FileHandler(os.path.join(directory, "run.log"), mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def _validator_setup(cfg):
    v = cfg.section("validator")
    grid = ScanGrid(v["theta_lo"], v["theta_hi"], v["rho_lo"], v["rho_hi"], v["points"],
                    v["spacing"])
    opts = ValidatorOptions(theta_split=v["theta_split"], exponent_slack=v["exponent_slack"])
    return grid, opts


def initial_data(cfg, grid, eps):
    """(HydroState, g0) from the [initial] section."""
    ini = cfg.section("initial")
    law = cfg.law
    if ini["profile"] == "file":
        snap = read_snapshot(ini["file"])
        if snap.dim != grid.dim or snap.n != grid.n:
            raise ConfigError("initial snapshot does not match [grid]",
                              cfg.lines.get(("initial", "file")))
        rho = snap.fields["rho"]
        m = np.stack([snap.fields["m_x"]] + ([snap.fields["m_y"]] if grid.dim == 2 else []))
        if "g" in snap.fields:
            g0 = snap.fields["g"]
        else:
            g0 = sl.good_unknown(law, rho, snap.fields["theta"], eps)
        return HydroState(rho, m, 0.0), g0
    x = grid.coords()[0]
    wave = np.sin(2.0 * np.pi * x) if ini["profile"] == "sine" else np.zeros(grid.shape)
    rho = ini["rho0"] * (1.0 + ini["rho_amp"] * wave)
    theta = ini["theta0"] * (1.0 + ini["theta_amp"] * wave)
    u = grid.vector_zeros()
    u[0] = ini["u0"] + ini["u_amp"] * wave
    if np.any(rho <= 0) or np.any(theta < 0):
        raise ConfigError("initial profile is not admissible (rho <= 0 or theta < 0)")
    return HydroState(rho, rho * u, 0.0), sl.good_unknown(law, rho, theta, eps)


def _solver_setup(cfg):
    t = cfg.section("time")
    fp = cfg.section("fixed_point")
    return (FixedPointConfig(fp["omega"], fp["tol"], fp["max_iter"], t["slab_length"]),
            HydroParams(cfl=t["cfl"]), ThermalParams(dt=t["thermal_dt"]))


def simulate(cfg, eps=None):
    """Run the configured problem; returns (grid, trajectory, report)."""
    g = cfg.section("grid")
    grid = fd.PeriodicGrid(g["dim"], g["n"], g["length"])
    eps = cfg.get("regularization", "eps") if eps is None else eps
    hydro0, g0 = initial_data(cfg, grid, eps)
    theta0 = theta_field(g0, hydro0.rho, cfg.law, eps)
    energy0 = dg.total_energy(grid, hydro0.rho, hydro0.m, theta0, cfg.law)
    if not np.isfinite(energy0):
        raise ConfigError("initial energy is not finite")
    fpc, hp, tp = _solver_setup(cfg)
    traj, report = continue_slabs(grid, hydro0, g0, cfg.law, fpc, eps,
                                  cfg.get("time", "t_final"), hp, tp)
    return grid, traj, report


def trajectory_from_snapshots(paths):
    snaps = [read_snapshot(p) for p in paths]
    if not snaps:
        raise FormatError("no snapshots found")
    dim = snaps[0].dim
    rho = np.stack([s.fields["rho"] for s in snaps])
    m = np.stack([np.stack([s.fields["m_x"]] + ([s.fields["m_y"]] if dim == 2 else []))
                  for s in snaps])
    g = np.stack([s.fields["g"] for s in snaps])
    theta = np.stack([s.fields["theta"] for s in snaps])
    times = np.array([s.time for s in snaps])
    traj = SlabTrajectory(times, rho, m, m / rho[:, None], theta, g, snaps[0].eps)
    return fd.PeriodicGrid(dim, snaps[0].n), traj


# ----------------------------------------------------------------------------
# subcommands


def cmd_validate(args):
    try:
        cfg = load_config(args.config, check=False)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    grid, opts = _validator_setup(cfg)
    report = validate(cfg.law, grid, cfg.get("grid", "dim"), opts)
    sys.stdout.write(report.to_text())
    if args.csv:
        _write(args.csv, report.to_csv())
    return EXIT_CONFIG if report.failed("structural") else EXIT_OK


def cmd_run(args):
    try:
        cfg = load_config(args.config, check=False)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.get("output", "directory")
    if not os.path.isabs(out):
        out = os.path.join(os.path.dirname(os.path.abspath(args.config)), out)
    os.makedirs(out, exist_ok=True)
    handler = _attach_log(out)
    try:
        return _run(cfg, out)
    finally:
        log.removeHandler(handler)
        handler.close()


def _run(cfg, out):
    _write(os.path.join(out, "config.ini"), cfg.text)
    vgrid, opts = _validator_setup(cfg)
    vreport = validate(cfg.law, vgrid, cfg.get("grid", "dim"), opts)
    _write(os.path.join(out, "validation.csv"), vreport.to_csv())
    structural = vreport.failed("structural")
    if vreport.failed("derived"):
        log.warning("derived checks failed: %s", ", ".join(vreport.failed("derived")))
    if structural and not cfg.get("validator", "force"):
        msg = f"law fails structural checks: {', '.join(structural)}"
        log.error(msg)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        grid, traj, report = simulate(cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceFailure as exc:
        log.error("%s", exc)
        text = f"status: failed\n{exc}\nupdate norms:\n" + "".join(
            f"  {j + 1:3d} {v:.6e}\n" for j, v in enumerate(exc.history))
        _write(os.path.join(out, "report.txt"), text)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except VirialNSFError as exc:
        log.error("%s", exc)
        _write(os.path.join(out, "report.txt"), f"status: failed\n{exc}\n")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for old in glob.glob(os.path.join(out, "snap_*.nsfv")):
        os.remove(old)
    every = cfg.get("output", "snapshot_every")
    last = len(traj.times) - 1
    for k in range(len(traj.times)):
        if k % every == 0 or k == last:
            write_snapshot(os.path.join(out, f"snap_{k:05d}.nsfv"), snapshot_from_state(
                traj.times[k], traj.eps, traj.rho[k], traj.m[k], traj.g[k], traj.theta[k]))
    series = dg.compute_series(grid, traj, cfg.law)
    if cfg.get("output", "csv"):
        _write(os.path.join(out, "diagnostics.csv"), series_csv(series))
    d = cfg.section("diagnostics")
    ineq = dg.check_inequalities(grid, traj, cfg.law, series, d["c_tol"], d["g_balance_tol"])
    _write(os.path.join(out, "report.txt"), report.to_text() + ineq.to_text())
    cont = cfg.get("regularization", "continuation")
    if cont:
        rows, prev = ["eps,distance_to_previous"], None
        for e in cont:
            _, tr, _ = simulate(cfg, eps=e)
            dist = trajectory_distance(grid, tr, prev) if prev is not None else float("nan")
            rows.append(f"{e!r},{dist!r}")
            prev = tr
        _write(os.path.join(out, "continuation.csv"), "\n".join(rows) + "\n")
    log.info("run finished: %s", "inequalities pass" if ineq.ok else "inequality FAIL")
    sys.stdout.write(report.to_text() + ineq.to_text())
    return EXIT_OK if ineq.ok else EXIT_INEQUALITY


def cmd_diagnose(args):
    paths = sorted(glob.glob(os.path.join(args.directory, "snap_*.nsfv")))
    try:
        cfg = load_config(os.path.join(args.directory, "config.ini"), check=False)
        grid, traj = trajectory_from_snapshots(paths)
    except (ConfigError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    series = dg.compute_series(grid, traj, cfg.law)
    text = series_csv(series)
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    d = cfg.section("diagnostics")
    ineq = dg.check_inequalities(grid, traj, cfg.law, series, d["c_tol"], d["g_balance_tol"])
    sys.stderr.write(ineq.to_text())
    return EXIT_OK if ineq.ok else EXIT_INEQUALITY


def cmd_export(args):
    try:
        snap = read_snapshot(args.snapshot)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    grid = fd.PeriodicGrid(snap.dim, snap.n)
    coords = grid.coords()
    names = [TAGS[t] for t in snap.tags]
    axes = ["x", "y"][: snap.dim]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow([f"i{a}" for a in axes] + axes + names)
    for idx in np.ndindex(*grid.shape):
        wr.writerow(list(idx) + [repr(float(c[idx])) for c in coords]
                    + [repr(float(snap.fields[nm][idx])) for nm in names])
    if args.output:
        _write(args.output, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_mms(args):
    try:
        cfg = load_config(args.config, check=False)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    m = cfg.section("mms")
    eps = cfg.get("regularization", "eps")
    rows, ok = [], True
    if m["module"] in ("thermal", "both"):
        sp = mms.thermal_spatial_study(cfg.law, m["ns"], t_end=m["t_end"], eps=eps)
        tm = mms.thermal_temporal_study(cfg.law, m["dts"], t_end=4 * m["t_end"], eps=eps)
        rows += [("thermal-space", r) for r in sp] + [("thermal-time", r) for r in tm]
        ok &= 1.8 <= sp[-1].order <= 2.2 and 0.9 <= tm[-1].order <= 1.1
    if m["module"] in ("hydro", "both"):
        hy = mms.hydro_study(cfg.law, m["ns"], t_end=m["t_end"])
        rows += [("hydro", r) for r in hy]
        ok &= hy[-1].order >= 0.9
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["study", "size", "error", "order"])
    for name, r in rows:
        wr.writerow([name, repr(r.size), repr(r.error), repr(r.order)])
    sys.stdout.write(buf.getvalue())
    if args.csv:
        _write(args.csv, buf.getvalue())
    return EXIT_OK if ok else EXIT_INEQUALITY


def build_parser():
    p = argparse.ArgumentParser(prog="virialnsf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("validate", help="audit the configured state law")
    s.add_argument("config")
    s.add_argument("--csv", help="also write the report as CSV to this path")
    s.set_defaults(func=cmd_validate)
    s = sub.add_parser("run", help="run the coupled simulation")
    s.add_argument("config")
    s.set_defaults(func=cmd_run)
    s = sub.add_parser("mms", help="manufactured-solution convergence table")
    s.add_argument("config")
    s.add_argument("--csv", help="also write the table to this path")
    s.set_defaults(func=cmd_mms)
    s = sub.add_parser("diagnose", help="recompute diagnostics from a run directory")
    s.add_argument("directory")
    s.add_argument("--output", help="write the CSV here instead of stdout")
    s.set_defaults(func=cmd_diagnose)
    s = sub.add_parser("export", help="dump a snapshot")
    s.add_argument("snapshot")
    s.add_argument("--csv", action="store_true", required=True, help="CSV output (only format)")
    s.add_argument("--output", help="write here instead of stdout")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
