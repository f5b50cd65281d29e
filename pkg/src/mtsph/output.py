"""Time-series CSV, legacy-ASCII VTK snapshots and the run manifest.

All numeric output is formatted with repr-faithful `%.17g`, plain
decimal points and fixed column order, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import tensors
from .stepping import Observables

CSV_COLUMNS = ("time_s", "reaction_force_N", "neck_disp_m", "amplitude_m",
               "ek_ratio", "n_inner", "n_s_cum", "n_d_cum")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_timeseries(obs: Observables, path) -> None:
    """One row per outer step; fixed schema shared by all scenarios."""
    if len(obs) == 0:
        raise ValueError("no samples to write")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(len(obs)):
            row = (
                _fmt(obs.time[i]),
                _fmt(obs.reaction_force[i]),
                _fmt(obs.neck_disp[i]),
                _fmt(obs.amplitude[i]),
                _fmt(obs.ek_ratio[i]),
                _fmt(obs.n_inner[i]),
                _fmt(obs.ns_cum[i]),
                _fmt(obs.nd_cum[i]),
            )
            fh.write(",".join(row) + "\n")


def write_profiles(times, column_x, profiles, path) -> None:
    """Deflection profiles in long format: time_s, x_m, amplitude_m."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time_s,x_m,amplitude_m\n")
        for t, prof in zip(times, profiles):
            for x, y in zip(column_x, prof):
                fh.write(f"{_fmt(t)},{_fmt(x)},{_fmt(y)}\n")


def read_timeseries(path) -> dict:
    """Parse a timeseries CSV back into column arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array(rows, dtype=float)
    return {name: data[:, k] for k, name in enumerate(header)}


def write_snapshot(path, pos, def_grad=None, saturation=None, pressure=None,
                   velocity=None, vm_strain=None, title="particles") -> None:
    """Legacy ASCII VTK polydata point cloud with standard point data.

    Point-data arrays: von Mises strain (from the logarithmic strain of
    F unless `vm_strain` is supplied directly), saturation, fluid
    pressure and velocity magnitude.  2D positions are padded with
    z = 0 so standard viewers load the file directly.
    """
    pos = np.asarray(pos, dtype=float)
    n, d = pos.shape
    xyz = np.zeros((n, 3))
    xyz[:, :d] = pos

    if vm_strain is None:
        if def_grad is not None:
            vm_strain = tensors.von_mises_log_strain(np.asarray(def_grad))
        else:
            vm_strain = np.zeros(n)
    saturation = np.zeros(n) if saturation is None else np.asarray(saturation)
    pressure = np.zeros(n) if pressure is None else np.asarray(pressure)
    if velocity is None:
        vmag = np.zeros(n)
    else:
        velocity = np.asarray(velocity)
        vmag = np.sqrt(np.sum(velocity * velocity, axis=1))

    arrays = (
        ("von_mises_strain", vm_strain),
        ("saturation", saturation),
        ("fluid_pressure", pressure),
        ("velocity_magnitude", vmag),
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET POLYDATA\n")
        fh.write(f"POINTS {n} double\n")
        for p in xyz:
            fh.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        fh.write(f"VERTICES {n} {2 * n}\n")
        for i in range(n):
            fh.write(f"1 {i}\n")
        fh.write(f"POINT_DATA {n}\n")
        for name, values in arrays:
            fh.write(f"SCALARS {name} double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            for v in values:
                fh.write(f"{_fmt(v)}\n")


def read_snapshot(path) -> dict:
    """Reparse a snapshot written by `write_snapshot` (round-trip check)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines[0].startswith("# vtk DataFile"):
        raise ValueError("not a legacy VTK file")
    k = lines.index(next(ln for ln in lines if ln.startswith("POINTS")))
    n = int(lines[k].split()[1])
    pts = np.array([lines[k + 1 + i].split() for i in range(n)], dtype=float)
    out = {"points": pts}
    k = lines.index(next(ln for ln in lines if ln.startswith("POINT_DATA")))
    k += 1
    while k < len(lines) and lines[k].startswith("SCALARS"):
        name = lines[k].split()[1]
        vals = np.array(lines[k + 2:k + 2 + n], dtype=float)
        out[name] = vals
        k += 2 + n
    return out


@dataclass
class RunManifest:
    """Resolved-run record, written next to the outputs even on failure."""

    scenario: str
    params: dict
    version: str
    status: str = "running"
    error: str = ""
    runtime_s: float = 0.0
    n_particles: int = 0
    n_outer: int = 0
    n_inner: int = 0
    n_damping: int = 0
    clamp_events: int = 0
    cap_hits: int = 0
    warnings: list = field(default_factory=list)

    def write(self, path) -> None:
        payload = {
            "scenario": self.scenario,
            "status": self.status,
            "error": self.error,
            "version": self.version,
            "runtime_s": self.runtime_s,
            "n_particles": self.n_particles,
            "counters": {
                "n_outer": self.n_outer,
                "n_inner": self.n_inner,
                "n_damping": self.n_damping,
                "clamp_events": self.clamp_events,
                "cap_hits": self.cap_hits,
            },
            "warnings": list(self.warnings),
            "config": {k: self.params[k] for k in sorted(self.params)},
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, default=str)
            fh.write("\n")
