"""SVG figure rendering plus the CSV data product behind each figure.

The CSVs are the load-bearing artifacts; SVG rendering is best-effort
and falls back to a placeholder on any drawing failure.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

PLOT_Q_SUBSET = (-10.0, -5.0, -2.0, 2.0, 5.0, 10.0)

_PLACEHOLDER = ('<svg xmlns="http://www.w3.org/2000/svg" width="400" height="200">'
                '<rect width="400" height="200" fill="white"/>'
                '<text x="150" y="105" font-size="16">{message}</text></svg>\n')


def placeholder_svg(path, message: str = "no data") -> None:
    Path(path).write_text(_PLACEHOLDER.format(message=message), encoding="utf-8")


def _save(fig, path) -> None:
    try:
        fig.savefig(path, format="svg")
    except Exception:
        placeholder_svg(path, "render failed")
    finally:
        plt.close(fig)


def fluctuation_figure(surface, stem, svg: bool = True) -> None:
    """Log-log F_q(s) with consecutive q curves offset by one decade."""
    qs = [q for q in PLOT_Q_SUBSET if q in surface.config.q_grid]
    if not qs:
        qs = list(surface.config.q_grid[:: max(1, len(surface.config.q_grid) // 6)])
    scales = np.array(surface.scales, dtype=np.float64)
    rows = []
    for rank, q in enumerate(qs):
        i = surface.config.q_grid.index(q)
        rows.append(surface.values[i] * 10.0 ** rank)

    with open(f"{stem}.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["scale"] + [f"q={q:g}" for q in qs])
        for j, s in enumerate(surface.scales):
            w.writerow([s] + [repr(float(rows[k][j])) for k in range(len(qs))])

    if not svg:
        return
    fig, ax = plt.subplots(figsize=(6, 5))
    for q, row in zip(qs, rows):
        ax.loglog(scales, row, marker="o", ms=3, label=f"q={q:g}")
    ax.set_xlabel("s")
    ax.set_ylabel("F_q(s) (decade offsets)")
    ax.legend(fontsize=8)
    _save(fig, f"{stem}.svg")


def hurst_figure(curves: dict, stem, svg: bool = True) -> None:
    """Stacked panels: plain, shuffled and correlation exponents vs q."""
    order = [k for k in ("plain", "shuffled", "correlation") if k in curves]
    qs = np.array(curves[order[0]].config.q_grid)
    with open(f"{stem}.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["q"] + [f"h_{k}" for k in order])
        for i, q in enumerate(qs):
            w.writerow([f"{q:g}"] + [repr(float(curves[k].h[i])) for k in order])
    if not svg:
        return
    fig, axes = plt.subplots(len(order), 1, figsize=(5, 7), sharex=True)
    for ax, k in zip(np.atleast_1d(axes), order):
        ax.errorbar(qs, curves[k].h, yerr=curves[k].stderr, ms=3, marker="o")
        ax.set_ylabel(f"h {k}")
    np.atleast_1d(axes)[-1].set_xlabel("q")
    _save(fig, f"{stem}.svg")


def spectra_figure(summaries: dict, stem, svg: bool = True) -> None:
    """f(pi) overlay across flavors."""
    with open(f"{stem}.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["flavor", "pi", "f"])
        for k, summary in summaries.items():
            for pi, fv in summary.points:
                w.writerow([k, repr(float(pi)), repr(float(fv))])
    if not svg:
        return
    fig, ax = plt.subplots(figsize=(6, 5))
    for k, summary in summaries.items():
        ax.plot(summary.points[:, 0], summary.points[:, 1], marker="o", ms=3, label=k)
    ax.set_xlabel("pi")
    ax.set_ylabel("f(pi)")
    ax.legend(fontsize=8)
    _save(fig, f"{stem}.svg")


def _bar_figure(labels, values, ylabel, stem, svg: bool) -> None:
    with open(f"{stem}.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["country", ylabel])
        for lab, v in zip(labels, values):
            w.writerow([lab, repr(float(v))])
    if not svg:
        return
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(labels)), 4))
    ax.bar(range(len(labels)), values)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    _save(fig, f"{stem}.svg")


def width_scatter_figure(reports, stem, svg: bool = True) -> None:
    """Correlation width vs shuffled width, one point per entity."""
    with open(f"{stem}.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["country", "d_pi_shuf", "d_pi_cor"])
        for r in reports:
            w.writerow([r.label, repr(r.widths["shuffled"]), repr(r.widths["correlation"])])
    if not svg:
        return
    fig, ax = plt.subplots(figsize=(5, 5))
    for r in reports:
        ax.scatter(r.widths["shuffled"], r.widths["correlation"], s=12)
        ax.annotate(r.label, (r.widths["shuffled"], r.widths["correlation"]), fontsize=6)
    ax.set_xlabel("shuffled width")
    ax.set_ylabel("correlation width")
    _save(fig, f"{stem}.svg")


def emit_plots(result, out_dir, svg: bool = True) -> None:
    """Render every figure family for a pipeline result."""
    out = Path(out_dir)
    for label, art in result.artifacts.items():
        fluctuation_figure(art.surfaces["plain"], out / f"fig_fluctuation_{label}", svg=svg)
        hurst_figure(art.curves, out / f"fig_hurst_{label}", svg=svg)
        spectra_figure(art.summaries, out / f"fig_spectra_{label}", svg=svg)
    reports = result.reports
    if not reports:
        if svg:
            placeholder_svg(out / "fig_peaks.svg")
            placeholder_svg(out / "fig_width_scatter.svg")
        return
    labels = [r.label for r in reports]
    _bar_figure(labels, [r.peaks["correlation"] for r in reports],
                "pi_max_cor", out / "fig_peaks", svg)
    for key, name in (("shuffled", "d_pi_shuf"), ("correlation", "d_pi_cor")):
        order = sorted(range(len(reports)), key=lambda i: reports[i].widths[key])
        _bar_figure([labels[i] for i in order],
                    [reports[i].widths[key] for i in order],
                    name, out / f"fig_widths_{name}", svg)
    width_scatter_figure(reports, out / "fig_width_scatter", svg=svg)
