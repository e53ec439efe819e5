"""Comparison panels from experiment CSV bundles.

Renders mitigated vs unmitigated estimator series with error bars and the
exact-value reference line, purely from the CSV contents: nothing is ever
recomputed. Output is a PNG with fixed geometry and metadata so identical
inputs produce identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

REQUIRED_COLUMNS = ("estimator", "component", "value", "std_error", "x_index")
SERIES_STYLE = {
    "mitigated": {"color": "#1f6fb4", "marker": "o", "label": "mitigated"},
    "cs-baseline": {"color": "#d1752b", "marker": "s", "label": "unmitigated"},
}
DPI = 150


class PanelError(ValueError):
    """The CSV cannot back the requested panel."""


@dataclass(frozen=True)
class PanelSpec:
    """What to draw: which file, which panel rows, which x column."""

    csv_path: Path
    panel: str | None = None
    x_axis: str = "x_index"
    component: str = "re"
    series: tuple[str, ...] = ("mitigated", "cs-baseline")
    title: str | None = None
    x_label: str | None = None
    y_label: str = "estimate"


def _read_rows(spec: PanelSpec) -> list[dict]:
    path = Path(spec.csv_path)
    if not path.exists():
        raise PanelError(f"CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in (*REQUIRED_COLUMNS, spec.x_axis) if c not in header]
        if missing:
            raise PanelError(f"{path} is missing required columns: {missing}")
        rows = list(reader)
    if spec.panel is not None and "panel" in header:
        rows = [r for r in rows if r["panel"] == spec.panel]
    rows = [r for r in rows if r["component"] == spec.component]
    if not rows:
        raise PanelError(
            f"{path} holds no rows for panel={spec.panel!r} "
            f"component={spec.component!r}"
        )
    return rows


def _series_points(rows: list[dict], estimator: str, x_axis: str):
    """Per-x mean value and the (shared) std_error column, sorted by x."""
    grouped: dict[float, list[dict]] = {}
    for r in rows:
        if r["estimator"] != estimator or r.get("flag"):
            continue
        grouped.setdefault(float(r[x_axis]), []).append(r)
    xs = sorted(grouped)
    ys, errs = [], []
    for x in xs:
        vals = [float(r["value"]) for r in grouped[x]]
        ys.append(sum(vals) / len(vals))
        errs.append(float(grouped[x][0]["std_error"]))
    return xs, ys, errs


def render_panel(spec: PanelSpec, out_path: str | Path) -> Path:
    """Draw one panel; returns the written PNG path.

    Raises PanelError when a requested series has no rows or the reference
    value is absent, rather than emitting a blank image.
    """
    rows = _read_rows(spec)
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    try:
        for estimator in spec.series:
            xs, ys, errs = _series_points(rows, estimator, spec.x_axis)
            if not xs:
                raise PanelError(f"no rows for estimator {estimator!r}")
            style = SERIES_STYLE.get(estimator, {"label": estimator})
            ax.errorbar(xs, ys, yerr=errs, capsize=3, linestyle="-", **style)

        exact_vals = [float(r["value"]) for r in rows if r["estimator"] == "exact"]
        if not exact_vals:
            raise PanelError("no exact reference rows in the CSV")
        ref = sum(exact_vals) / len(exact_vals)
        ax.axhline(ref, color="0.25", linestyle=":", linewidth=1.4, label="exact")

        ax.set_xlabel(spec.x_label or spec.x_axis)
        ax.set_ylabel(spec.y_label)
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(frameon=False, fontsize=9)
        fig.tight_layout()

        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(
            out_path,
            dpi=DPI,
            metadata={"Software": "shadowfigs"},
        )
    finally:
        plt.close(fig)
    return out_path
