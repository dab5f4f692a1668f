"""End-to-end orchestration: ingest hourly load CSVs, run the analysis
per entity, emit the summary report, figure data and diagnostics."""

from __future__ import annotations

import csv
import glob
import hashlib
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .cluster import DEFAULT_FEATURE_NAMES, FeatureMatrix, kmeans, normalize_features
from .mfdfa import (FluctuationSurface, HurstCurve, MfdfaConfig, correlation_hurst,
                    distribution_hurst, ensemble_surface, fit_hurst,
                    fluctuation_function, surface_to_csv)
from .mfspectrum import SpectrumSummary, legendre_points, summary_to_csv
from .series import RngSpec, Series, build_profile
from .spectral import CarrierPolicy, decompose, inverse_dft
from .stattests import AutocorrTestResult, autocorr_test, ks_gaussian_test, qq_points
from .synth import gaussian_white_noise

REPORT_COLUMNS = ("country",
                  "d_pi", "d_pi_shuf", "d_pi_sur", "d_pi_cor", "d_pi_dist",
                  "pi_max", "pi_max_shuf", "pi_max_sur", "pi_max_cor", "pi_max_dist",
                  "regime", "cluster")

WIDTH_KEYS = ("plain", "shuffled", "surrogate", "correlation", "distribution")


class ConfigError(ValueError):
    """Invalid run configuration (bad file, unknown key, missing input)."""


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...]
    output_dir: str
    master_seed: int = 2026
    poly_order: int = 4
    q_min: float = -10.0
    q_max: float = 10.0
    q_step: float = 0.5
    scale_grid: tuple[int, ...] | None = None
    fit_min_scale: float | None = None
    fit_max_scale: float | None = None
    integration_order: int = 2
    n_shuffles: int = 50
    n_surrogates: int = 50
    window_scheme: str = "even_overlap"
    carrier_threshold_decades: float = 1.0
    alpha: float = 0.99
    autocorr_lags: int = 20
    k_clusters: int = 2
    threads: int | None = None
    emit_svg: bool = True

    def mfdfa_config(self) -> MfdfaConfig:
        n_steps = int(round((self.q_max - self.q_min) / self.q_step))
        q_grid = tuple(self.q_min + i * self.q_step for i in range(n_steps + 1))
        fit_range = None
        if self.fit_min_scale is not None or self.fit_max_scale is not None:
            fit_range = (self.fit_min_scale if self.fit_min_scale is not None else 0.0,
                         self.fit_max_scale if self.fit_max_scale is not None else float("inf"))
        return MfdfaConfig(poly_order=self.poly_order, q_grid=q_grid,
                           scale_grid=self.scale_grid, fit_range=fit_range,
                           integration_order=self.integration_order,
                           n_shuffles=self.n_shuffles, n_surrogates=self.n_surrogates,
                           window_scheme=self.window_scheme)

    def carrier_policy(self) -> CarrierPolicy:
        return CarrierPolicy(threshold_decades=self.carrier_threshold_decades)

    def worker_count(self, n_jobs: int) -> int:
        if self.threads is not None:
            cap = self.threads
        else:
            env = os.environ.get("MFSPEC_THREADS")
            cap = int(env) if env else min(8, os.cpu_count() or 1)
        return max(1, min(cap, max(n_jobs, 1)))


_CONFIG_KEYS = {
    "input": str, "output_dir": str, "master_seed": int, "poly_order": int,
    "q_min": float, "q_max": float, "q_step": float, "scale_grid": str,
    "fit_min_scale": float, "fit_max_scale": float, "integration_order": int,
    "n_shuffles": int, "n_surrogates": int, "window_scheme": str,
    "carrier_threshold_decades": float, "alpha": float, "autocorr_lags": int,
    "k_clusters": int, "threads": int, "emit_svg": str,
}


def load_run_config(path) -> RunConfig:
    """Parse the key = value run configuration file (see README schema)."""
    raw: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    for ln, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{ln}: expected key = value")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
        if value:
            raw[key] = value

    if "input" not in raw:
        raise ConfigError(f"{path}: missing required key 'input'")
    if "output_dir" not in raw:
        raise ConfigError(f"{path}: missing required key 'output_dir'")

    inputs: list[str] = []
    for pattern in raw["input"].split(","):
        pattern = pattern.strip()
        matches = sorted(glob.glob(pattern))
        if not matches and any(ch in pattern for ch in "*?["):
            continue  # empty glob is allowed: empty input set
        if not matches:
            raise ConfigError(f"input file not found: {pattern}")
        inputs.extend(matches)

    kwargs: dict = {"inputs": tuple(inputs), "output_dir": raw["output_dir"]}
    for key, conv in _CONFIG_KEYS.items():
        if key in ("input", "output_dir") or key not in raw:
            continue
        try:
            if key == "scale_grid":
                kwargs[key] = tuple(int(v) for v in raw[key].split(","))
            elif key == "emit_svg":
                kwargs[key] = raw[key].lower() in ("1", "true", "yes", "on")
            else:
                kwargs[key] = conv(raw[key])
        except ValueError as e:
            raise ConfigError(f"{path}: bad value for {key!r}: {raw[key]!r}") from e
    try:
        cfg = RunConfig(**kwargs)
        cfg.mfdfa_config()  # validate grids eagerly
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return cfg


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def ingest_load_csv(path, label: str | None = None, notes: list[str] | None = None) -> Series:
    """Read an hourly ``timestamp,load_mw`` CSV into a Series.

    Duplicate timestamps (DST fall-back) are averaged, a single missing
    hour is linearly interpolated, and runs of two or more missing hours
    abort with the offending interval.  Handling decisions are appended
    to ``notes`` when given.
    """
    label = label if label is not None else Path(path).stem
    rows: list[tuple[datetime, float]] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["timestamp", "load_mw"]:
            raise ValueError(f"{path}: expected header 'timestamp,load_mw'")
        for i, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: malformed row {i}: {row!r}")
            try:
                ts = datetime.fromisoformat(row[0].strip())
                value = float(row[1])
            except ValueError as e:
                raise ValueError(f"{path}: malformed row {i}: {e}") from e
            rows.append((ts, value))
    if not rows:
        raise ValueError(f"{path}: no data rows")

    # average duplicate timestamps (DST fall-back repetitions)
    dedup: list[tuple[datetime, float]] = []
    i = 0
    while i < len(rows):
        j = i
        while j + 1 < len(rows) and rows[j + 1][0] == rows[i][0]:
            j += 1
        if j > i:
            value = float(np.mean([v for _, v in rows[i:j + 1]]))
            dedup.append((rows[i][0], value))
            if notes is not None:
                notes.append(f"{label}: averaged {j - i + 1} duplicate rows at {rows[i][0].isoformat()}")
        else:
            dedup.append(rows[i])
        i = j + 1

    hour = timedelta(hours=1)
    values: list[float] = [dedup[0][1]]
    for (t0, v0), (t1, v1) in zip(dedup, dedup[1:]):
        if t1 <= t0:
            raise ValueError(f"{path}: non-monotone timestamp {t1.isoformat()} after {t0.isoformat()}")
        gap = t1 - t0
        steps, remainder = divmod(gap, hour)
        if remainder:
            raise ValueError(f"{path}: non-hourly spacing between {t0.isoformat()} and {t1.isoformat()}")
        missing = int(steps) - 1
        if missing >= 2:
            raise ValueError(f"{path}: gap of {missing} missing hours between "
                             f"{t0.isoformat()} and {t1.isoformat()}")
        if missing == 1:
            values.append(0.5 * (v0 + v1))
            if notes is not None:
                notes.append(f"{label}: interpolated 1 missing hour after {t0.isoformat()}")
        values.append(v1)
    return Series(np.asarray(values), start_timestamp=dedup[0][0], step=hour,
                  label=label, units="MW")


# ---------------------------------------------------------------------------
# per-entity analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountryReport:
    label: str
    widths: dict[str, float]       # keyed by flavor
    peaks: dict[str, float]
    regime: str
    test: AutocorrTestResult
    ks_p: float
    config_fingerprint: str
    cluster: int | None = None


@dataclass
class CountryArtifacts:
    surfaces: dict[str, FluctuationSurface]
    curves: dict[str, HurstCurve]
    summaries: dict[str, SpectrumSummary]
    autocorr_curve: list[AutocorrTestResult]
    qq: np.ndarray


@dataclass
class PipelineResult:
    reports: list[CountryReport]
    failures: dict[str, str]
    notes: list[str]
    artifacts: dict[str, CountryArtifacts] = field(default_factory=dict)


def classify_regime(pi_peak_cor: float) -> str:
    """Persistent-load vs derivative-process classification of the peak.

    Peaks within 0.02 of +-0.5 are flagged as boundary cases.
    """
    if min(abs(pi_peak_cor - 0.5), abs(pi_peak_cor + 0.5)) <= 0.02 + 1e-12:
        return "boundary"
    return "persistent_load" if -0.5 < pi_peak_cor < 0.5 else "antipersistent_derivative"


def config_fingerprint(cfg: MfdfaConfig, master_seed: int) -> str:
    digest = hashlib.sha256(f"{cfg!r}|seed={master_seed}".encode()).hexdigest()
    return digest[:12]


def entity_seed(master_seed: int, label: str) -> int:
    label_hash = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")
    ss = np.random.SeedSequence([master_seed, label_hash])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def analyze_series(series: Series, run_cfg: RunConfig) -> tuple[CountryReport, CountryArtifacts]:
    """Full single-entity analysis: carrier split, tests, MFDFA, spectra."""
    mf = run_cfg.mfdfa_config()
    seed = entity_seed(run_cfg.master_seed, series.label)

    decomp = decompose(series, run_cfg.carrier_policy())
    fluc = inverse_dft(decomp.fluctuation)

    test = autocorr_test(fluc, m=run_cfg.autocorr_lags, alpha=run_cfg.alpha)
    ac_curve = [autocorr_test(fluc, m=m, alpha=run_cfg.alpha)
                for m in range(1, run_cfg.autocorr_lags + 1)]
    ks = ks_gaussian_test(fluc)
    reference = gaussian_white_noise(min(len(fluc), 4096), RngSpec(seed, 0))
    qq = qq_points(fluc, reference)

    surfaces = {
        "plain": fluctuation_function(build_profile(fluc), mf),
        "shuffled": ensemble_surface(fluc, mf, "shuffled", RngSpec(seed, 1)),
        "surrogate": ensemble_surface(fluc, mf, "surrogate", RngSpec(seed, 1 + mf.n_shuffles)),
    }
    curves = {k: fit_hurst(v) for k, v in surfaces.items()}
    curves["correlation"] = correlation_hurst(curves["plain"], curves["shuffled"])
    curves["distribution"] = distribution_hurst(curves["plain"], curves["surrogate"])
    summaries = {k: legendre_points(v) for k, v in curves.items()}

    widths = {k: summaries[k].width for k in WIDTH_KEYS}
    peaks = {k: summaries[k].pi_peak for k in WIDTH_KEYS}
    report = CountryReport(
        label=series.label,
        widths=widths,
        peaks=peaks,
        regime=classify_regime(peaks["correlation"]),
        test=test,
        ks_p=ks.p_value,
        config_fingerprint=config_fingerprint(mf, run_cfg.master_seed),
    )
    artifacts = CountryArtifacts(surfaces=surfaces, curves=curves, summaries=summaries,
                                 autocorr_curve=ac_curve, qq=qq)
    return report, artifacts


# ---------------------------------------------------------------------------
# run orchestration
# ---------------------------------------------------------------------------

def _fmt3(v: float) -> str:
    out = f"{v:.3f}"
    return "0.000" if out == "-0.000" else out


def emit_report(reports, path) -> None:
    """Write the summary table: widths, peaks, regime and cluster per entity."""
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        f.write(",".join(REPORT_COLUMNS) + "\n")
        for r in reports:
            cells = [r.label]
            cells += [_fmt3(r.widths[k]) for k in WIDTH_KEYS]
            cells += [_fmt3(r.peaks[k]) for k in WIDTH_KEYS]
            cells.append(r.regime)
            cells.append("" if r.cluster is None else str(r.cluster))
            f.write(",".join(cells) + "\n")


def _write_country_artifacts(label: str, art: CountryArtifacts, out: Path) -> None:
    for flavor, surface in art.surfaces.items():
        surface_to_csv(surface, out / f"{label}_fluctuation_{flavor}.csv")
    with open(out / f"{label}_hurst.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        flavors = list(art.curves)
        w.writerow(["q"] + [f"h_{k}" for k in flavors] + [f"stderr_{k}" for k in flavors])
        qs = art.curves["plain"].config.q_grid
        for i, q in enumerate(qs):
            w.writerow([f"{q:g}"]
                       + [repr(float(art.curves[k].h[i])) for k in flavors]
                       + [repr(float(art.curves[k].stderr[i])) for k in flavors])
    for flavor, summary in art.summaries.items():
        summary_to_csv(summary, out / f"{label}_spectrum_{flavor}.csv")
    with open(out / f"{label}_autocorr.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["m", "q_statistic", "threshold", "rejected"])
        for t in art.autocorr_curve:
            w.writerow([t.m, repr(t.q_statistic), repr(t.threshold), int(t.rejected)])
    with open(out / f"{label}_qq.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["series_quantile", "reference_quantile"])
        for a, b in art.qq:
            w.writerow([repr(float(a)), repr(float(b))])


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Analyze every input file, cluster the widths, write all artifacts.

    A failure in one entity is recorded and the others proceed.  With a
    fixed master seed the emitted report is byte-identical regardless of
    the worker-thread count.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    notes: list[str] = []
    failures: dict[str, str] = {}

    series_list: list[Series] = []
    for path in cfg.inputs:
        label = Path(path).stem
        try:
            series_list.append(ingest_load_csv(path, label=label, notes=notes))
        except (ValueError, OSError) as e:
            failures[label] = str(e)
    series_list.sort(key=lambda s: s.label)

    if not cfg.inputs:
        warnings.warn("empty input set: emitting an empty report")

    results: list[tuple[CountryReport, CountryArtifacts] | None] = [None] * len(series_list)

    def job(i: int) -> None:
        try:
            results[i] = analyze_series(series_list[i], cfg)
        except Exception as e:  # record, let other entities proceed
            failures[series_list[i].label] = str(e)

    workers = cfg.worker_count(len(series_list))
    if series_list:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(job, range(len(series_list))))

    reports = [r for r, _ in (x for x in results if x is not None)]
    artifacts = {r.label: a for r, a in (x for x in results if x is not None)}

    if len(reports) >= max(2, cfg.k_clusters):
        matrix = FeatureMatrix(tuple(r.label for r in reports),
                               np.array([[r.widths[k] for k in WIDTH_KEYS] for r in reports]),
                               DEFAULT_FEATURE_NAMES)
        km = kmeans(normalize_features(matrix), cfg.k_clusters,
                    RngSpec(entity_seed(cfg.master_seed, "__cluster__"), 0))
        reports = [replace(r, cluster=int(c)) for r, c in zip(reports, km.labels)]

    emit_report(reports, out / "report.csv")
    if failures:
        with open(out / "failures.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["label", "error"])
            for label in sorted(failures):
                w.writerow([label, failures[label]])
    if notes:
        with open(out / "ingest_notes.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["note"])
            for note in notes:
                w.writerow([note])
    for label, art in artifacts.items():
        _write_country_artifacts(label, art, out)

    result = PipelineResult(reports=reports, failures=failures, notes=notes,
                            artifacts=artifacts)
    from .plots import emit_plots  # late import: matplotlib is heavy
    emit_plots(result, out, svg=cfg.emit_svg)
    return result
