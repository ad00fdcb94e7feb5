"""Command line entry point: ``embdyn simulate | verify | convergence``.

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import fmt, write_csv, write_json, write_trajectory
from .config import RunConfig, load_config
from .dynamics import State, simulate
from .errors import EmbeddingError, SingularStateError, ValidationError
from .grid import COMPACT, Configuration, Section
from .harness import analytic_error, run_convergence, run_verify
from .presets import initial_state

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("embdyn")


def build_initial(cfg: RunConfig) -> State:
    grid = cfg.body_grid()
    g = cfg.grid
    if cfg.initial.preset is not None:
        return initial_state(grid, cfg.initial.preset, cfg.initial.params, cfg.boundary_mode,
                             g.band_width, g.eps_emb)
    phi = Configuration.from_values(grid, cfg.initial.phi, g.eps_emb)
    v = np.asarray(cfg.initial.v, dtype=float)
    if cfg.boundary_mode == COMPACT:
        b = g.band_width
        if np.any(v[:b] != 0) or np.any(v[-b:] != 0):
            raise ValidationError("initial.v", "must vanish on the pinned band in compact mode")
    return State(0.0, phi, Section.from_values(grid, v, cfg.boundary_mode, g.band_width))


def _manifest(cfg: RunConfig, command: str, **extra) -> dict:
    return {"command": command, "version": __version__, "config": cfg.to_dict(), **extra}


def cmd_simulate(config_path: str, out: str | None = None) -> int:
    cfg = load_config(config_path)
    if out is not None:
        cfg.outputs.directory = out
    outdir = Path(cfg.outputs.directory)
    init = build_initial(cfg)
    try:
        traj = simulate(init, cfg.force_model(), cfg.time.t_end, cfg.time.dt, cfg.time.scheme,
                        cfg.boundary_mode, cfg.time.advection_form)
    except SingularStateError as err:
        files = []
        if err.trajectory is not None:
            files = write_trajectory(outdir, err.trajectory, cfg.outputs.snapshot_every, cfg.outputs.formats)
        outdir.mkdir(parents=True, exist_ok=True)
        write_json(outdir / "manifest.json", _manifest(
            cfg, "simulate", status="singular", error=str(err), failure_node=err.node,
            failure_time=err.time, steps_completed=(len(err.trajectory) - 1) if err.trajectory else 0,
            outputs=files + ["manifest.json"]))
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    files = write_trajectory(outdir, traj, cfg.outputs.snapshot_every, cfg.outputs.formats)
    check = analytic_error(cfg, traj)
    write_json(outdir / "manifest.json", _manifest(
        cfg, "simulate", status="ok", steps_completed=len(traj) - 1, dt_effective=traj.dt,
        final_time=float(traj.times[-1]), analytic_check=check, outputs=files + ["manifest.json"]))
    print(f"simulated {len(traj) - 1} steps to t={fmt(traj.times[-1])}; outputs in {outdir}")
    return EXIT_OK


def cmd_verify(config_path: str, out: str | None = None) -> int:
    cfg = load_config(config_path)
    report = run_verify(cfg)
    outdir = Path(out or cfg.outputs.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    write_json(outdir / "verify_report.json", report)
    for r in report["suites"]:
        order = "n/a" if r["order"] is None else f"{r['order']:.3f}"
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['name']}: residual={r['residual']:.3e} "
              f"tol={r['tolerance']:.1e} order={order}")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def cmd_convergence(config_path: str, levels: int, out: str | None = None) -> int:
    cfg = load_config(config_path)
    rows = run_convergence(cfg, levels)
    outdir = Path(out or cfg.outputs.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    nan = float("nan")
    write_csv(outdir / "convergence.csv", ["level", "h", "dt", "error", "order"],
              [[r["level"] for r in rows], [r["h"] for r in rows], [r["dt"] for r in rows],
               [r["error"] for r in rows], [nan if r["order"] is None else r["order"] for r in rows]])
    for r in rows:
        order = "n/a" if r["order"] is None else f"{r['order']:.3f}"
        print(f"level {r['level']}: h={r['h']:.3e} dt={r['dt']:.3e} error={r['error']:.3e} order={order}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embdyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the equation of motion")
    p.add_argument("--config", required=True)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("--config", required=True)
    p.add_argument("--out")

    p = sub.add_parser("convergence", help="convergence study against a closed-form geodesic")
    p.add_argument("--config", required=True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out)
        if args.command == "verify":
            return cmd_verify(args.config, args.out)
        return cmd_convergence(args.config, args.levels, args.out)
    except (ValidationError, EmbeddingError) as err:
        print(f"validation error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except SingularStateError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
