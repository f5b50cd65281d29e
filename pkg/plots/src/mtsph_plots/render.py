"""Render one recipe to an image file (inputs are never modified)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .recipes import SERIES_COLUMNS, FigureRecipe, RecipeError

_AXIS_LABELS = {
    "force_disp": ("time [s]", "reaction force [N]"),
    "radius_disp": ("time [s]", "neck radius reduction [m]"),
    "amplitude_profile": ("x [m]", "deflection [m]"),
    "energy_decay": ("time [s]", "kinetic energy ratio [-]"),
    "counters": ("time [s]", "inner iterations per outer step [-]"),
}


def read_csv(path) -> dict:
    """Read a comma-separated file with a header row into column arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise RecipeError(f"{path}: empty input")
        names = header.split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if not rows:
        raise RecipeError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] != len(names):
        raise RecipeError(f"{path}: ragged rows")
    return {name: data[:, k] for k, name in enumerate(names)}


def _column(data, name, path):
    if name not in data:
        raise RecipeError(f"{path}: missing column {name!r} "
                          f"(has: {', '.join(data)})")
    return data[name]


def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def render(recipe: FigureRecipe, out_path=None) -> str:
    """Render the recipe; returns the image path."""
    out = out_path or recipe.out
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        if recipe.kind == "amplitude_profile":
            _render_profiles(recipe, ax)
        else:
            _render_series(recipe, ax)
        if recipe.overlay:
            data = read_csv(recipe.overlay)
            names = list(data)
            ax.plot(data[names[0]], data[names[1]], "ko", markersize=3.5,
                    label=_stem(recipe.overlay))
        xl, yl = _AXIS_LABELS[recipe.kind]
        ax.set_xlabel(recipe.x_label or xl)
        ax.set_ylabel(recipe.y_label or yl)
        if recipe.title:
            ax.set_title(recipe.title)
        if recipe.log_y:
            ax.set_yscale("log")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(out, dpi=recipe.dpi)
    finally:
        plt.close(fig)
    return out


def _render_series(recipe: FigureRecipe, ax) -> None:
    xcol, ycol = SERIES_COLUMNS[recipe.kind]
    for path in recipe.inputs:
        data = read_csv(path)
        x = _column(data, xcol, path) * recipe.x_scale
        y = _column(data, ycol, path)
        if recipe.kind == "energy_decay" and recipe.require_monotone:
            if np.any(np.diff(y) > 1e-12 * np.max(np.abs(y))):
                raise RecipeError(
                    f"{path}: kinetic energy is not monotone decreasing")
        if recipe.kind == "counters":
            ax.step(x, y, where="post", label=_stem(path))
        else:
            ax.plot(x, y, label=_stem(path))


def _render_profiles(recipe: FigureRecipe, ax) -> None:
    for path in recipe.inputs:
        data = read_csv(path)
        t = _column(data, "time_s", path)
        x = _column(data, "x_m", path)
        y = _column(data, "amplitude_m", path)
        all_times = np.unique(t)
        wanted = recipe.times or all_times[
            np.linspace(0, len(all_times) - 1, min(5, len(all_times))).astype(int)
        ].tolist()
        for tw in wanted:
            nearest = all_times[np.argmin(np.abs(all_times - tw))]
            sel = t == nearest
            order = np.argsort(x[sel])
            label = f"{_stem(path)} t={nearest:g}s"
            ax.plot(x[sel][order] * recipe.x_scale, y[sel][order], label=label)
