"""Command line: shadowfigs render --csv PATH --panel NAME --out PATH."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .panels import PanelError, PanelSpec, render_panel


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="shadowfigs")
    sub = parser.add_subparsers(dest="command", required=True)
    rend = sub.add_parser("render", help="render one comparison panel to PNG")
    rend.add_argument("--csv", required=True, help="experiment CSV bundle")
    rend.add_argument("--panel", default=None, help="panel name to select (e.g. fig2a)")
    rend.add_argument("--out", required=True, help="output PNG path")
    rend.add_argument("--x-axis", default="x_index",
                      help="CSV column for the x axis (x_index, noise_strength, sample_count)")
    rend.add_argument("--component", default="re", choices=("re", "im"))
    rend.add_argument("--title", default=None)
    args = parser.parse_args(argv)

    spec = PanelSpec(
        csv_path=Path(args.csv),
        panel=args.panel,
        x_axis=args.x_axis,
        component=args.component,
        title=args.title or args.panel,
    )
    try:
        path = render_panel(spec, args.out)
    except PanelError as exc:
        print(exc, file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
