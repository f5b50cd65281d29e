"""Command line: render a figure from a recipe file.

    mtsph-plot plot <recipe-file> [--out PATH]
"""

from __future__ import annotations

import argparse
import sys

from .recipes import RecipeError, parse_recipe
from .render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mtsph-plot", description="render mtsph benchmark figures")
    sub = parser.add_subparsers(dest="command", required=True)
    plotp = sub.add_parser("plot", help="render a figure from a recipe file")
    plotp.add_argument("recipe", help="path to the recipe file")
    plotp.add_argument("--out", default=None, help="output image path")
    args = parser.parse_args(argv)

    try:
        recipe = parse_recipe(args.recipe)
        out = render(recipe, args.out)
    except (RecipeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
