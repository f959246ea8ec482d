"""Delimited plot data and rendered figures for run logs.

Every figure has a delimited twin so downstream tooling can re-plot
without parsing the full log. Files land next to each other in the
output directory, named by scenario and seed.
"""
from __future__ import annotations

import os

import numpy as np
from matplotlib.figure import Figure

from .sim import IncompleteLog, SimLog

_FREE_FALL_HEADER = "t,z,vz,speed"
_STATES_HEADER = "t,x,y,z,vx,vy,vz,ref_x,ref_y,ref_z,err"
_DETECTION_HEADER = "t,d1,d2,d3,d4,C_B,Psi_B,detected"
_TRAJECTORY_HEADER = "x,y,z"


def _stem(log: SimLog) -> str:
    return f"{log.scenario}_s{log.seed}"


def _write_rows(path: str, header: str, rows: np.ndarray,
                int_cols: tuple[int, ...] = ()) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            cells = [repr(float(v)) for v in row]
            for c in int_cols:
                cells[c] = str(int(row[c]))
            fh.write(",".join(cells) + "\n")


def emit_plot_data(log: SimLog, out_dir: str) -> list[str]:
    """Write the delimited plot inputs; returns the paths written."""
    if log.data.shape[0] == 0:
        raise IncompleteLog("log has no rows")
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, _stem(log))
    paths = []

    if log.config.mode == "free_fall":
        speed = np.linalg.norm(log.velocity, axis=1)
        rows = np.column_stack([log.t, log.position[:, 2],
                                log.velocity[:, 2], speed])
        path = f"{stem}_states.csv"
        _write_rows(path, _FREE_FALL_HEADER, rows)
        return [path]

    err = log.tracking_error()
    states = np.column_stack([log.t, log.position, log.velocity,
                              log.ref_position, err])
    path = f"{stem}_states.csv"
    _write_rows(path, _STATES_HEADER, states)
    paths.append(path)

    detection = np.column_stack([log.t, log.readings, log.intensity,
                                 log.direction, log.detected])
    path = f"{stem}_detection.csv"
    _write_rows(path, _DETECTION_HEADER, detection, int_cols=(7,))
    paths.append(path)

    path = f"{stem}_trajectory3d.csv"
    _write_rows(path, _TRAJECTORY_HEADER, log.position)
    paths.append(path)
    return paths


def render_figures(log: SimLog, out_dir: str) -> list[str]:
    """Render state, detection, and path figures to PNG files."""
    if log.data.shape[0] == 0:
        raise IncompleteLog("log has no rows")
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, _stem(log))
    t = log.t
    paths = []

    if log.config.mode == "free_fall":
        fig = Figure(figsize=(8.0, 6.0))
        ax_z, ax_v = fig.subplots(2, 1, sharex=True)
        ax_z.plot(t, log.position[:, 2], color="tab:blue")
        ax_z.set_ylabel("altitude [m]")
        ax_z.grid(True, alpha=0.3)
        ax_v.plot(t, np.linalg.norm(log.velocity, axis=1), color="tab:red")
        ax_v.set_ylabel("speed [m/s]")
        ax_v.set_xlabel("t [s]")
        ax_v.grid(True, alpha=0.3)
        fig.suptitle(f"{log.scenario}: free fall")
        path = f"{stem}_states.png"
        fig.savefig(path, dpi=110)
        return [path]

    fig = Figure(figsize=(9.0, 7.0))
    ax_p, ax_e = fig.subplots(2, 1, sharex=True)
    for i, label in enumerate("xyz"):
        ax_p.plot(t, log.position[:, i], label=label)
        ax_p.plot(t, log.ref_position[:, i], "--", alpha=0.6)
    ax_p.set_ylabel("position [m]")
    ax_p.legend(loc="upper left", ncols=3)
    ax_p.grid(True, alpha=0.3)
    ax_e.plot(t, log.tracking_error(), color="tab:purple")
    ax_e.set_ylabel("tracking error [m]")
    ax_e.set_xlabel("t [s]")
    ax_e.grid(True, alpha=0.3)
    if log.detection is not None:
        for ax in (ax_p, ax_e):
            ax.axvline(log.detection.t_detect, color="tab:red", alpha=0.5)
    fig.suptitle(f"{log.scenario}: states (seed {log.seed})")
    path = f"{stem}_states.png"
    fig.savefig(path, dpi=110)
    paths.append(path)

    fig = Figure(figsize=(9.0, 7.0))
    ax_d, ax_c = fig.subplots(2, 1, sharex=True)
    for i in range(4):
        ax_d.plot(t, log.readings[:, i], label=f"arm {i + 1}")
    ax_d.set_ylabel("normalized compression")
    ax_d.legend(loc="upper right", ncols=4)
    ax_d.grid(True, alpha=0.3)
    ax_c.plot(t, log.intensity, color="tab:orange", label="intensity")
    ax_c.axhline(log.config.detector.threshold, color="gray", ls=":",
                 label="threshold")
    if log.detection is not None:
        ax_c.axvline(log.detection.t_detect, color="tab:red", alpha=0.5,
                     label="detected")
    ax_c.set_ylabel("collision intensity")
    ax_c.set_xlabel("t [s]")
    ax_c.legend(loc="upper right")
    ax_c.grid(True, alpha=0.3)
    fig.suptitle(f"{log.scenario}: arm sensing (seed {log.seed})")
    path = f"{stem}_detection.png"
    fig.savefig(path, dpi=110)
    paths.append(path)

    fig = Figure(figsize=(8.0, 7.0))
    ax3 = fig.add_subplot(projection="3d")
    pos = log.position
    ax3.plot(pos[:, 0], pos[:, 1], pos[:, 2], color="tab:blue")
    ax3.scatter(*pos[0], color="tab:green", label="start")
    ax3.scatter(*pos[-1], color="tab:red", label="end")
    if log.detection is not None:
        idx = int(np.searchsorted(t, log.detection.t_detect))
        idx = min(idx, len(t) - 1)
        ax3.scatter(*pos[idx], color="tab:orange", marker="x", s=60,
                    label="detection")
    ax3.set_xlabel("x [m]")
    ax3.set_ylabel("y [m]")
    ax3.set_zlabel("z [m]")
    ax3.legend(loc="upper left")
    fig.suptitle(f"{log.scenario}: flight path (seed {log.seed})")
    path = f"{stem}_trajectory3d.png"
    fig.savefig(path, dpi=110)
    paths.append(path)
    return paths
