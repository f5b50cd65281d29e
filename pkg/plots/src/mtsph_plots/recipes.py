"""Figure recipes: the same flat `key = value` grammar as run configs.

A recipe names the figure kind, the input CSV files (one plotted
series per file, legend from the file stem) and presentation options.
Unknown keys and missing columns are hard errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

FIGURE_KINDS = ("force_disp", "radius_disp", "amplitude_profile",
                "energy_decay", "counters")

# kind -> (x column, y column) of the timeseries schema
SERIES_COLUMNS = {
    "force_disp": ("time_s", "reaction_force_N"),
    "radius_disp": ("time_s", "neck_disp_m"),
    "energy_decay": ("time_s", "ek_ratio"),
    "counters": ("time_s", "n_inner"),
}

_SCHEMA = {
    "kind": str,
    "inputs": str,
    "out": str,
    "overlay": str,
    "title": str,
    "x_label": str,
    "y_label": str,
    "x_scale": float,
    "times": str,
    "require_monotone": bool,
    "dpi": int,
    "log_y": bool,
}


class RecipeError(ValueError):
    """Invalid recipe file or contents."""


@dataclass
class FigureRecipe:
    kind: str
    inputs: list
    out: str = ""
    overlay: str = ""
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    x_scale: float = 1.0
    times: list = field(default_factory=list)
    require_monotone: bool = False
    dpi: int = 150
    log_y: bool = False

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise RecipeError(
                f"unknown figure kind {self.kind!r} "
                f"(known: {', '.join(FIGURE_KINDS)})")
        if not self.inputs:
            raise RecipeError("recipe needs at least one input CSV")
        if not self.out:
            self.out = f"{self.kind}.png"


def _parse_value(key, text, line_no):
    typ = _SCHEMA[key]
    try:
        if typ is bool:
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if typ is int:
            return int(float(text))
        if typ is float:
            return float(text)
        return text
    except ValueError:
        raise RecipeError(
            f"line {line_no}: value {text!r} for key {key!r} is not "
            f"a valid {typ.__name__}") from None


def parse_recipe(path) -> FigureRecipe:
    """Parse a recipe file (flat key = value lines, # comments)."""
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise RecipeError(
                    f"line {line_no}: expected 'key = value', got {text!r}")
            key, _, val = text.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _SCHEMA:
                raise RecipeError(f"line {line_no}: unknown key {key!r}")
            if key in raw:
                raise RecipeError(f"line {line_no}: duplicate key {key!r}")
            raw[key] = _parse_value(key, val, line_no)
    if "kind" not in raw:
        raise RecipeError("recipe must set 'kind'")
    inputs = [s.strip() for s in raw.pop("inputs", "").split(",") if s.strip()]
    times = [float(s) for s in raw.pop("times", "").split(",") if s.strip()]
    return FigureRecipe(inputs=inputs, times=times, **raw)
