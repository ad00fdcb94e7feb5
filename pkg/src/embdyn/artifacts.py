"""CSV and JSON output.  Numbers are written with 17 significant digits so
that every float64 survives a text round trip unchanged."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import BodyGrid, ScalarField

FMT = "%.17g"


def fmt(x: float) -> str:
    return FMT % x


def write_csv(path: Path, header: list[str], columns) -> None:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(header), comments="")


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_field_csv(path: Path, f: ScalarField) -> None:
    write_csv(path, ["x", "value"], [f.grid.nodes, f.values])


def read_field_csv(path: Path, grid: BodyGrid) -> ScalarField:
    header, data = read_csv(path)
    if header != ["x", "value"] or data.shape != (grid.n_nodes, 2):
        raise ValueError(f"{path} is not a field CSV for this grid")
    return ScalarField(grid, data[:, 1])


def write_matrix_csv(path: Path, times, rows, x) -> None:
    """Rows are time knots, columns grid nodes; the header carries node coordinates."""
    header = ["t"] + [fmt(v) for v in x]
    data = np.column_stack([np.asarray(times, dtype=float), np.asarray(rows, dtype=float)])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(header), comments="")


def read_matrix_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    header, data = read_csv(path)
    x = np.array([float(v) for v in header[1:]])
    return data[:, 0], data[:, 1:], x


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_trajectory(outdir: Path, traj, snapshot_every: int, formats=("csv",)) -> list[str]:
    """Diagnostics every step, snapshots every ``snapshot_every`` steps plus the last one."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    idx = list(range(0, len(traj), snapshot_every))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    if "csv" in formats:
        write_csv(outdir / "diagnostics.csv", ["t", "kinetic", "flux", "drift", "min_phi_x"],
                  [traj.times, traj.kinetic, traj.flux, traj.drift, traj.min_phi_x])
        x = traj.grid.nodes
        write_matrix_csv(outdir / "trajectory.csv", traj.times[idx], traj.phi[idx], x)
        write_matrix_csv(outdir / "velocity.csv", traj.times[idx], traj.v[idx], x)
        written += ["diagnostics.csv", "trajectory.csv", "velocity.csv"]
    if "npz" in formats:
        np.savez(outdir / "trajectory.npz", t=traj.times, phi=traj.phi, v=traj.v, kinetic=traj.kinetic,
                 flux=traj.flux, min_phi_x=traj.min_phi_x, x=traj.grid.nodes)
        written.append("trajectory.npz")
    return written
