"""Command-line interface: analyze, synth, cluster, plot.

Exit codes: 0 success, 1 configuration error, 2 partial failures (some
entities failed), 3 total failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .cluster import FeatureMatrix, kmeans, normalize_features, silhouette
from .pipeline import ConfigError, load_run_config, run_pipeline
from .series import RngSpec, Series
from .synth import CascadeSpec, binomial_cascade, fgn, gaussian_white_noise


def _write_series_csv(s: Series, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["timestamp", "load_mw"])
        t = s.start_timestamp
        for v in s.values:
            w.writerow([t.isoformat(), repr(float(v))])
            t = t + s.step


def _cmd_analyze(args) -> int:
    try:
        cfg = load_run_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    result = run_pipeline(cfg)
    for label in sorted(result.failures):
        print(f"FAILED {label}: {result.failures[label]}", file=sys.stderr)
    print(f"report: {Path(cfg.output_dir) / 'report.csv'} "
          f"({len(result.reports)} entities, {len(result.failures)} failed)")
    if result.failures and not result.reports:
        return 3
    if result.failures:
        return 2
    return 0


def _cmd_synth(args) -> int:
    rng = RngSpec(args.seed, args.realization)
    if args.kind == "white":
        s = gaussian_white_noise(args.n, rng)
    elif args.kind == "fgn":
        s = fgn(args.n, args.hurst, rng)
    else:
        s = binomial_cascade(CascadeSpec(levels=args.levels, weight_a=args.weight_a), rng)
    s = Series(s.values, start_timestamp=datetime.fromisoformat(args.start),
               step=timedelta(hours=1), label=args.label or s.label, units="MW")
    _write_series_csv(s, args.out)
    print(f"wrote {len(s)} samples to {args.out}")
    return 0


def _cmd_cluster(args) -> int:
    labels: list[str] = []
    rows: list[list[float]] = []
    width_cols = ["d_pi", "d_pi_shuf", "d_pi_sur", "d_pi_cor", "d_pi_dist"]
    try:
        with open(args.report, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            missing = [c for c in ["country"] + width_cols if c not in (reader.fieldnames or [])]
            if missing:
                raise ConfigError(f"{args.report}: missing columns {missing}")
            for row in reader:
                labels.append(row["country"])
                rows.append([float(row[c]) for c in width_cols])
    except (OSError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    if len(rows) < max(2, args.k):
        print(f"config error: need at least {max(2, args.k)} rows to cluster", file=sys.stderr)
        return 1
    matrix = normalize_features(FeatureMatrix(tuple(labels), np.array(rows), tuple(width_cols)))
    km = kmeans(matrix, args.k, RngSpec(args.seed, 0))
    score = silhouette(matrix, km.labels) if len(set(km.labels.tolist())) > 1 else float("nan")
    out = args.out or (str(Path(args.report).with_suffix("")) + "_clusters.csv")
    with open(out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["country", "cluster"])
        for lab, c in zip(labels, km.labels):
            w.writerow([lab, int(c)])
    print(f"wrote {out} (k={args.k}, inertia={km.inertia:.4f}, silhouette={score:.4f})")
    return 0


def _cmd_plot(args) -> int:
    from .plots import _bar_figure, placeholder_svg, width_scatter_figure
    from .pipeline import CountryReport, WIDTH_KEYS
    run_dir = Path(args.artifacts)
    report_path = run_dir / "report.csv"
    if not report_path.exists():
        print(f"config error: {report_path} not found", file=sys.stderr)
        return 1
    reports = []
    with open(report_path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            widths = dict(zip(WIDTH_KEYS,
                              (float(row[c]) for c in ("d_pi", "d_pi_shuf", "d_pi_sur",
                                                       "d_pi_cor", "d_pi_dist"))))
            peaks = dict(zip(WIDTH_KEYS,
                             (float(row[c]) for c in ("pi_max", "pi_max_shuf", "pi_max_sur",
                                                      "pi_max_cor", "pi_max_dist"))))
            reports.append(CountryReport(label=row["country"], widths=widths, peaks=peaks,
                                         regime=row["regime"], test=None, ks_p=float("nan"),
                                         config_fingerprint=""))
    if not reports:
        placeholder_svg(run_dir / "fig_peaks.svg")
        placeholder_svg(run_dir / "fig_width_scatter.svg")
        print("no entities in report; placeholder figures written")
        return 0
    labels = [r.label for r in reports]
    _bar_figure(labels, [r.peaks["correlation"] for r in reports],
                "pi_max_cor", run_dir / "fig_peaks", True)
    for key, name in (("shuffled", "d_pi_shuf"), ("correlation", "d_pi_cor")):
        order = sorted(range(len(reports)), key=lambda i: reports[i].widths[key])
        _bar_figure([labels[i] for i in order], [reports[i].widths[key] for i in order],
                    name, run_dir / f"fig_widths_{name}", True)
    width_scatter_figure(reports, run_dir / "fig_width_scatter", svg=True)
    print(f"re-rendered figures in {run_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfspec",
                                description="Multifractal load time-series analysis")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="run the full pipeline from a config file")
    pa.add_argument("config", help="key = value run configuration file")
    pa.set_defaults(func=_cmd_analyze)

    ps = sub.add_parser("synth", help="emit a synthetic hourly CSV fixture")
    ps.add_argument("--kind", choices=["white", "fgn", "cascade"], required=True)
    ps.add_argument("--n", type=int, default=65536, help="sample count (white/fgn)")
    ps.add_argument("--hurst", type=float, default=0.8)
    ps.add_argument("--levels", type=int, default=16)
    ps.add_argument("--weight-a", type=float, default=0.75, dest="weight_a")
    ps.add_argument("--seed", type=int, default=2026)
    ps.add_argument("--realization", type=int, default=0)
    ps.add_argument("--start", default="2020-01-01T00:00:00")
    ps.add_argument("--label", default="")
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=_cmd_synth)

    pc = sub.add_parser("cluster", help="re-cluster the widths of an existing report")
    pc.add_argument("report", help="report.csv (or any CSV with the width columns)")
    pc.add_argument("--k", type=int, default=2)
    pc.add_argument("--seed", type=int, default=2026)
    pc.add_argument("--out", default=None)
    pc.set_defaults(func=_cmd_cluster)

    pp = sub.add_parser("plot", help="re-render figures from a run directory")
    pp.add_argument("artifacts", help="output directory of a previous analyze run")
    pp.set_defaults(func=_cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
