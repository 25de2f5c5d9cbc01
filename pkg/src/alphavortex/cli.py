"""Command-line driver: verify, simulate, sweep and weakcheck.

Exit codes: 0 success, 1 check failure, 2 configuration error,
3 runtime or numerical error.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import contextlib
import logging
import math
import os
from pathlib import Path
import sys

from . import checks, storage
from .boundary import build_trace
from .dynamics import TraceWindow, rhs, run
from .errors import ConfigError
from .config import HELP_DEFAULTS, RunConfig
from .velocity import FieldGrid, aligned_trace, sample_field
from .weak import weak_residual

log = logging.getLogger("alphavortex")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
LOCK_NAME = ".lock"


class OutputLocked(RuntimeError):
    pass


@contextlib.contextmanager
def output_lock(directory):
    """Create ``directory`` and hold an exclusive lock file inside it."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    lock = d / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OutputLocked(f"output directory {d} is in use (remove {lock} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield d
    finally:
        lock.unlink(missing_ok=True)


def _window(cfg, q, a):
    g = cfg.grid
    tail = cfg.tolerances.get("tail_tol", 1e-3)
    if g.get("L") is not None:
        return TraceWindow(float(g["L"]), int(g["N"]), tail)
    return TraceWindow.for_ensemble(q, a, tail)


def _simulate_one(cfg, a, out):
    """Run one alpha and write its files; returns the trajectory."""
    q0 = cfg.build_ensemble()
    window = _window(cfg, q0, a) if len(q0) else None
    traj = run(q0, a, cfg.T, cfg.dt, cfg.diag_every, window,
               energy_tol=cfg.tolerances.get("energy_tol", 1e-3), config_hash=cfg.digest())
    storage.write_trajectory(traj, out)
    if len(q0):
        tr = build_trace(q0, a, window.half_width, window.n, window.tail_tol)
        storage.write_trace(tr, Path(out) / "trace_t0.csv")
    h = cfg.grid.get("h")
    if h is not None and len(q0):
        grid = FieldGrid.covering(cfg.grid["x1_range"], (0.0, cfg.grid["x2_max"]), float(h))
        q_end = traj.states[-1]
        f = sample_field(q_end, a, grid, window.tail_tol)
        _, tr_end = aligned_trace(q_end, a, grid, window.tail_tol)
        storage.write_field(f, Path(out) / "field_final.csv", tr_end.half_width)
    return traj


def cmd_verify(cfg, out):
    try:
        reports = checks.run_all_checks(cfg.seed, cfg.budget, cfg.factor, cfg.checks)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    if not reports:
        raise ConfigError("no checks selected")
    with output_lock(out) as d:
        (d / "verify.json").write_text(checks.reports_json(reports, cfg.seed, cfg.budget))
    sys.stdout.write(checks.reports_table(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK


def cmd_simulate(cfg, out):
    a = cfg.alpha
    with output_lock(out) as d:
        traj = _simulate_one(cfg, a, d)
    last = traj.diagnostics[-1]
    print(f"alpha={a:g} steps={len(traj.times) - 1} t={traj.times[-1]:g} "
          f"energy={last.energy_alpha:.6g} -> {out}")
    if traj.aborted:
        print(f"run aborted: {traj.aborted}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _residual_rows(traj, panel, kernel):
    return [weak_residual(traj, phi, kernel) for phi in panel]


def _sweep_member(args):
    cfg, a, out = args
    traj = _simulate_one(cfg, a, out)
    if traj.aborted:
        return {"alpha": a, "aborted": traj.aborted}
    panel = cfg.panel()
    rows = _residual_rows(traj, panel, "euler")
    row = {
        "alpha": a,
        "aborted": None,
        "euler_residual": {r.phi_id: r.residual for r in rows},
        "euler_residual_abs_sum": float(sum(abs(r.residual) for r in rows)),
        "diagonal_mass": rows[0].diagonal_mass,
        "boundary_pairing_abs": float(sum(r.boundary_abs for r in rows)),
    }
    row["boundary_coefficient"] = row["boundary_pairing_abs"] / a ** 0.25
    q0 = traj.states[0]
    if len(q0) == 1:
        u = rhs(q0, a, traj.window)[0]
        ref = q0.strengths[0] / (4.0 * math.pi * q0.positions[0, 1])
        row["single_vortex_speed"] = float(u[0])
        row["speed_relative_error"] = float(abs(u[0] - ref) / abs(ref))
    return row


def _strictly_decreasing(v):
    return bool(all(b < a for a, b in zip(v, v[1:])))


def sweep_summary(cfg, rows):
    """Trend metrics over alpha (rows are ordered by decreasing alpha)."""
    ok = [r for r in rows if not r["aborted"]]
    res = [r["euler_residual_abs_sum"] for r in ok]
    bdry = [r["boundary_pairing_abs"] for r in ok]
    coef = [r["boundary_coefficient"] for r in ok]
    trends = {
        "euler_residual_decreasing": _strictly_decreasing(res),
        "boundary_pairing_decreasing": _strictly_decreasing(bdry),
        "boundary_coefficient_fit": max(coef) if coef else None,
        "boundary_coefficient_growth": (max(coef) / coef[0]) if coef else None,
    }
    trends["boundary_coefficient_stable"] = bool(coef) and trends["boundary_coefficient_growth"] <= cfg.factor
    return {"config_hash": cfg.digest(), "seed": cfg.seed, "T": cfg.T, "dt": cfg.dt,
            "rows": rows, "trends": trends}


def cmd_sweep(cfg, out, jobs=1):
    alphas = sorted(cfg.alphas, reverse=True)
    with output_lock(out) as d:
        tasks = [(cfg, a, d / f"alpha_{a:.6g}") for a in alphas]
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_sweep_member, tasks))
        else:
            rows = [_sweep_member(t) for t in tasks]
        summary = sweep_summary(cfg, rows)
        storage.write_json(summary, d / "sweep.json")
        storage.write_table(
            d / "sweep.csv", "sweep",
            ("alpha", "euler_residual_abs_sum", "boundary_pairing_abs", "boundary_coefficient"),
            [(r["alpha"], r["euler_residual_abs_sum"], r["boundary_pairing_abs"], r["boundary_coefficient"])
             for r in rows if not r["aborted"]],
        )
    for r in rows:
        if r["aborted"]:
            print(f"alpha={r['alpha']:g} aborted: {r['aborted']}")
        else:
            print(f"alpha={r['alpha']:g} euler residual={r['euler_residual_abs_sum']:.4e} "
                  f"boundary={r['boundary_pairing_abs']:.4e}")
    if any(r["aborted"] for r in rows):
        return EXIT_RUNTIME
    t = summary["trends"]
    if len(rows) > 1 and not (t["euler_residual_decreasing"] and t["boundary_coefficient_stable"]):
        return EXIT_CHECK
    return EXIT_OK


def cmd_weakcheck(cfg, trajectory_dir, out, kernel="alpha"):
    traj = storage.read_trajectory(trajectory_dir)
    panel = cfg.panel(horizon=traj.times[-1])
    rows = _residual_rows(traj, panel, kernel)
    report = {"trajectory": str(trajectory_dir), "alpha": traj.alpha, "kernel": kernel,
              "config_hash": traj.config_hash, "residuals": [r.to_json() for r in rows],
              "max_abs_residual": max(abs(r.residual) for r in rows)}
    with output_lock(out) as d:
        storage.write_json(report, d / "weakcheck.json")
    for r in rows:
        print(f"{r.phi_id}: residual={r.residual:.4e} boundary={r.boundary_term:.4e}")
    return EXIT_OK


def _alpha_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty alpha list")
    return vals


def build_parser():
    p = argparse.ArgumentParser(
        prog="alphavortex",
        description="Point-vortex dynamics of the alpha-regularised Euler equations in the half-plane.",
        epilog=HELP_DEFAULTS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", metavar="DIR", help="output directory (created if missing)")
    common.add_argument("--alpha", type=_alpha_list, metavar="LIST",
                        help="comma-separated alpha values overriding the configuration")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the estimate checks",
                   epilog=HELP_DEFAULTS, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub.add_parser("simulate", parents=[common], help="integrate one configuration",
                   epilog=HELP_DEFAULTS, formatter_class=argparse.RawDescriptionHelpFormatter)
    sw = sub.add_parser("sweep", parents=[common], help="simulate over a list of alpha values",
                        epilog=HELP_DEFAULTS, formatter_class=argparse.RawDescriptionHelpFormatter)
    sw.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    wc = sub.add_parser("weakcheck", parents=[common], help="weak-form residuals of a stored trajectory",
                        epilog=HELP_DEFAULTS, formatter_class=argparse.RawDescriptionHelpFormatter)
    wc.add_argument("trajectory", metavar="TRAJECTORY_DIR")
    wc.add_argument("--kernel", choices=("alpha", "euler"), default="alpha")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config, alpha=args.alpha, seed=args.seed)
        out = Path(args.out if args.out is not None else cfg.out)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.jobs)
        return cmd_weakcheck(cfg, args.trajectory, out, args.kernel)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, OutputLocked, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
