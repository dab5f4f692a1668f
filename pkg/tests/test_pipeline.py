"""Ingestion, full pipeline runs, report formatting, plots, CLI."""

import csv
import subprocess
import sys
import xml.etree.ElementTree as ET
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
import pytest

from mfspec import (CascadeSpec, CountryReport, RngSpec, RunConfig, binomial_cascade,
                    classify_regime, emit_report, fgn, ingest_load_csv,
                    load_run_config, run_pipeline)
from mfspec.cli import _write_series_csv
from mfspec.pipeline import ConfigError
from mfspec.series import Series

FIXTURE = Path(__file__).parent / "data" / "europe_order4_widths.csv"


def write_csv(path, rows, header="timestamp,load_mw"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")


def hourly(i):
    return (datetime(2020, 1, 1) + timedelta(hours=i)).isoformat()


class TestIngest:
    def test_three_rows(self, tmp_path):
        p = tmp_path / "at.csv"
        write_csv(p, [f"{hourly(0)},100", f"{hourly(1)},110", f"{hourly(2)},120"])
        s = ingest_load_csv(p)
        assert s.values.tolist() == [100.0, 110.0, 120.0]
        assert s.step == timedelta(hours=1)
        assert s.label == "at"

    def test_single_missing_hour_interpolated(self, tmp_path):
        p = tmp_path / "x.csv"
        write_csv(p, [f"{hourly(0)},100", f"{hourly(2)},120"])
        notes = []
        s = ingest_load_csv(p, notes=notes)
        assert s.values.tolist() == [100.0, 110.0, 120.0]
        assert any("interpolated" in n for n in notes)

    def test_long_gap_rejected(self, tmp_path):
        p = tmp_path / "x.csv"
        write_csv(p, [f"{hourly(0)},100", f"{hourly(6)},120"])
        with pytest.raises(ValueError, match="5 missing hours.*2020-01-01T00:00:00.*2020-01-01T06:00:00"):
            ingest_load_csv(p)

    def test_malformed_row_number_reported(self, tmp_path):
        p = tmp_path / "x.csv"
        write_csv(p, [f"{hourly(0)},100", "not-a-date,5"])
        with pytest.raises(ValueError, match="row 3"):
            ingest_load_csv(p)

    def test_non_monotone_rejected(self, tmp_path):
        p = tmp_path / "x.csv"
        write_csv(p, [f"{hourly(1)},100", f"{hourly(0)},90"])
        with pytest.raises(ValueError, match="non-monotone"):
            ingest_load_csv(p)

    def test_duplicates_averaged(self, tmp_path):
        p = tmp_path / "x.csv"
        write_csv(p, [f"{hourly(0)},100", f"{hourly(1)},80", f"{hourly(1)},120",
                      f"{hourly(2)},130"])
        notes = []
        s = ingest_load_csv(p, notes=notes)
        assert s.values.tolist() == [100.0, 100.0, 130.0]
        assert any("duplicate" in n for n in notes)

    def test_wrong_header(self, tmp_path):
        p = tmp_path / "x.csv"
        write_csv(p, [f"{hourly(0)},1"], header="time,load")
        with pytest.raises(ValueError, match="header"):
            ingest_load_csv(p)


class TestRegime:
    def test_persistent_band(self):
        assert classify_regime(0.3) == "persistent_load"
        assert classify_regime(-0.3) == "persistent_load"
        assert classify_regime(0.0) == "persistent_load"

    def test_antipersistent_outside(self):
        assert classify_regime(0.7) == "antipersistent_derivative"
        assert classify_regime(-0.8) == "antipersistent_derivative"

    def test_boundary_band(self):
        for x in (0.48, 0.5, 0.52, -0.48, -0.5, -0.52):
            assert classify_regime(x) == "boundary", x
        assert classify_regime(0.521) == "antipersistent_derivative"
        assert classify_regime(0.479) == "persistent_load"


AUSTRIA = CountryReport(
    label="Austria",
    widths={"plain": 0.370, "shuffled": 0.175, "surrogate": 0.362,
            "correlation": 0.216, "distribution": 0.102},
    peaks={"plain": 1.266, "shuffled": 0.494, "surrogate": 1.232,
           "correlation": 0.772, "distribution": -0.018},
    regime="antipersistent_derivative",
    test=None, ks_p=0.0, config_fingerprint="x", cluster=1,
)


class TestEmitReport:
    def test_reference_row_byte_pattern(self, tmp_path):
        out = tmp_path / "report.csv"
        emit_report([AUSTRIA], out)
        lines = out.read_bytes().split(b"\n")
        assert lines[1].startswith(
            b"Austria,0.370,0.175,0.362,0.216,0.102,1.266,0.494,1.232,0.772,-0.018")

    def test_single_report_two_lines(self, tmp_path):
        out = tmp_path / "report.csv"
        emit_report([AUSTRIA], out)
        text = out.read_text(encoding="utf-8")
        assert len(text.strip().split("\n")) == 2
        header = text.split("\n")[0]
        assert header == ("country,d_pi,d_pi_shuf,d_pi_sur,d_pi_cor,d_pi_dist,"
                          "pi_max,pi_max_shuf,pi_max_sur,pi_max_cor,pi_max_dist,regime,cluster")

    def test_negative_zero_normalized(self, tmp_path):
        import dataclasses
        r = dataclasses.replace(AUSTRIA, peaks={**AUSTRIA.peaks, "distribution": -0.0001})
        out = tmp_path / "report.csv"
        emit_report([r], out)
        row = out.read_text().strip().split("\n")[1]
        assert ",-0.000" not in row
        assert row.split(",")[10] == "0.000"


def _synth_input(tmp_path, name, values):
    s = Series(values, start_timestamp=datetime(2020, 1, 1), step=timedelta(hours=1),
               label=name, units="MW")
    path = tmp_path / f"{name}.csv"
    _write_series_csv(s, path)
    return path


def _small_cfg(tmp_path, inputs, **kw):
    defaults = dict(
        inputs=tuple(str(p) for p in inputs),
        output_dir=str(tmp_path / "out"),
        master_seed=77, poly_order=2, n_shuffles=4, n_surrogates=4,
        autocorr_lags=5, emit_svg=False,
    )
    defaults.update(kw)
    return RunConfig(**defaults)


class TestRunPipeline:
    def test_fgn_full_run(self, tmp_path):
        values = fgn(2 ** 16, 0.8, RngSpec(900, 0)).values
        path = _synth_input(tmp_path, "fgn08", values)
        cfg = RunConfig(inputs=(str(path),), output_dir=str(tmp_path / "out"),
                        master_seed=3, poly_order=4, emit_svg=False)
        result = run_pipeline(cfg)
        assert not result.failures
        r = result.reports[0]
        assert r.widths["correlation"] < 0.15
        assert r.peaks["correlation"] == pytest.approx(0.3, abs=0.07)
        assert r.regime == "persistent_load"
        assert (tmp_path / "out" / "report.csv").exists()
        assert (tmp_path / "out" / "fgn08_hurst.csv").exists()
        assert (tmp_path / "out" / "fgn08_fluctuation_plain.csv").exists()
        assert (tmp_path / "out" / "fgn08_spectrum_correlation.csv").exists()

    def test_cascade_full_run(self, tmp_path):
        import time
        values = binomial_cascade(CascadeSpec(levels=16, weight_a=0.75), RngSpec(901, 0)).values
        path = _synth_input(tmp_path, "cascade", values)
        cfg = RunConfig(inputs=(str(path),), output_dir=str(tmp_path / "out"),
                        master_seed=3, poly_order=4, emit_svg=False)
        t0 = time.perf_counter()
        result = run_pipeline(cfg)
        elapsed = time.perf_counter() - t0
        assert not result.failures
        r = result.reports[0]
        assert r.widths["plain"] > 1.0
        assert r.regime in ("persistent_load", "antipersistent_derivative", "boundary")
        assert elapsed < 60.0

    def test_empty_input_set(self, tmp_path):
        cfg = _small_cfg(tmp_path, [])
        with pytest.warns(UserWarning, match="empty input"):
            result = run_pipeline(cfg)
        assert result.reports == [] and result.failures == {}
        report = (tmp_path / "out" / "report.csv").read_text()
        assert report.startswith("country,")
        assert len(report.strip().split("\n")) == 1

    def test_partial_failure_isolated(self, tmp_path):
        good = _synth_input(tmp_path, "good", fgn(2 ** 12, 0.6, RngSpec(902, 0)).values)
        bad = tmp_path / "bad.csv"
        write_csv(bad, [f"{hourly(0)},100", f"{hourly(6)},120"])
        cfg = _small_cfg(tmp_path, [good, bad])
        result = run_pipeline(cfg)
        assert [r.label for r in result.reports] == ["good"]
        assert "bad" in result.failures
        assert "missing hours" in result.failures["bad"]
        assert (tmp_path / "out" / "failures.csv").exists()

    def test_determinism_across_thread_counts(self, tmp_path):
        inputs = [_synth_input(tmp_path, f"e{i}", fgn(2 ** 12, 0.7, RngSpec(i, 0)).values)
                  for i in range(3)]
        cfg1 = _small_cfg(tmp_path, inputs, threads=1, output_dir=str(tmp_path / "o1"))
        cfg8 = _small_cfg(tmp_path, inputs, threads=8, output_dir=str(tmp_path / "o8"))
        run_pipeline(cfg1)
        run_pipeline(cfg8)
        b1 = (tmp_path / "o1" / "report.csv").read_bytes()
        b8 = (tmp_path / "o8" / "report.csv").read_bytes()
        assert b1 == b8

    def test_cluster_column_populated(self, tmp_path):
        inputs = [_synth_input(tmp_path, f"e{i}", fgn(2 ** 12, h, RngSpec(10 + i, 0)).values)
                  for i, h in enumerate((0.3, 0.35, 0.75, 0.8))]
        cfg = _small_cfg(tmp_path, inputs, k_clusters=2)
        result = run_pipeline(cfg)
        assert all(r.cluster in (0, 1) for r in result.reports)

    def test_threads_env_cap(self, tmp_path, monkeypatch):
        cfg = _small_cfg(tmp_path, [])
        monkeypatch.setenv("MFSPEC_THREADS", "3")
        assert cfg.worker_count(10) == 3
        assert cfg.worker_count(2) == 2
        monkeypatch.delenv("MFSPEC_THREADS")
        explicit = _small_cfg(tmp_path, [], threads=5)
        assert explicit.worker_count(10) == 5

    def test_empty_run_placeholder_svgs(self, tmp_path):
        cfg = _small_cfg(tmp_path, [], emit_svg=True)
        with pytest.warns(UserWarning):
            run_pipeline(cfg)
        peaks = Path(cfg.output_dir) / "fig_peaks.svg"
        assert peaks.exists()
        assert "no data" in peaks.read_text()


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("plots")
    path = _synth_input(tmp, "ent", fgn(2 ** 12, 0.7, RngSpec(903, 0)).values)
    cfg = _small_cfg(tmp, [path], emit_svg=True)
    run_pipeline(cfg)
    return Path(cfg.output_dir)


class TestPlots:

    def test_decade_offsets_exact(self, run_dir):
        with open(run_dir / "fig_fluctuation_ent.csv", newline="") as f:
            rows = list(csv.reader(f))
        header, data = rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
        with open(run_dir / "ent_fluctuation_plain.csv", newline="") as f:
            surf_rows = list(csv.reader(f))
        q_of = {float(r[0]): np.array([float(v) for v in r[1:]]) for r in surf_rows[1:]}
        for k, name in enumerate(header[1:]):
            q = float(name.split("=")[1])
            np.testing.assert_allclose(data[:, k + 1], q_of[q] * 10.0 ** k, rtol=1e-12)

    def test_svgs_are_xml(self, run_dir):
        svgs = sorted(run_dir.glob("*.svg"))
        assert svgs, "no SVG output"
        for svg in svgs:
            root = ET.parse(svg).getroot()
            assert root.tag.endswith("svg")

    def test_placeholder_for_empty(self, tmp_path):
        from mfspec.plots import placeholder_svg
        placeholder_svg(tmp_path / "x.svg")
        root = ET.parse(tmp_path / "x.svg").getroot()
        assert "no data" in ET.tostring(root, encoding="unicode")


class TestRunConfigFile:
    def test_round_trip(self, tmp_path):
        data = _synth_input(tmp_path, "e0", fgn(2 ** 12, 0.6, RngSpec(904, 0)).values)
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            f"""
            # demo run
            input = {data}
            output_dir = {tmp_path / 'out'}
            master_seed = 5
            poly_order = 2
            n_shuffles = 3
            n_surrogates = 3
            q_min = -4
            q_max = 4
            q_step = 0.5
            alpha = 0.99
            k_clusters = 2
            emit_svg = false
            """, encoding="utf-8")
        cfg = load_run_config(cfg_file)
        assert cfg.poly_order == 2 and cfg.n_shuffles == 3
        assert cfg.mfdfa_config().q_grid[0] == -4.0

    def test_unknown_key(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("input = x.csv\noutput_dir = o\nbogus = 1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="bogus"):
            load_run_config(f)

    def test_missing_input_file(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text(f"input = {tmp_path}/nope.csv\noutput_dir = o\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(f)

    def test_empty_glob_allowed(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text(f"input = {tmp_path}/*.csv\noutput_dir = {tmp_path}/o\n", encoding="utf-8")
        cfg = load_run_config(f)
        assert cfg.inputs == ()

    def test_bad_value(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("input = x\noutput_dir = o\npoly_order = high\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_run_config(f)


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "mfspec", *args],
                          capture_output=True, text=True, cwd=cwd)


class TestCli:
    def test_synth_then_analyze(self, tmp_path):
        out_csv = tmp_path / "fgn.csv"
        r = run_cli("synth", "--kind", "fgn", "--n", "4096", "--hurst", "0.7",
                    "--seed", "11", "--out", str(out_csv))
        assert r.returncode == 0, r.stderr
        s = ingest_load_csv(out_csv)
        assert len(s) == 4096

        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            f"input = {out_csv}\noutput_dir = {tmp_path / 'out'}\n"
            "poly_order = 2\nn_shuffles = 3\nn_surrogates = 3\nemit_svg = false\n",
            encoding="utf-8")
        r = run_cli("analyze", str(cfg_file))
        assert r.returncode == 0, r.stderr
        assert (tmp_path / "out" / "report.csv").exists()

    def test_analyze_bad_config_exit_1(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("output_dir = o\n", encoding="utf-8")
        r = run_cli("analyze", str(cfg_file))
        assert r.returncode == 1
        assert "config error" in r.stderr

    def test_analyze_partial_failure_exit_2(self, tmp_path):
        good = tmp_path / "good.csv"
        run_cli("synth", "--kind", "fgn", "--n", "4096", "--hurst", "0.6",
                "--seed", "3", "--out", str(good))
        bad = tmp_path / "bad.csv"
        write_csv(bad, [f"{hourly(0)},1", f"{hourly(9)},2"])
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            f"input = {good},{bad}\noutput_dir = {tmp_path / 'out'}\n"
            "poly_order = 2\nn_shuffles = 2\nn_surrogates = 2\nemit_svg = false\n",
            encoding="utf-8")
        r = run_cli("analyze", str(cfg_file))
        assert r.returncode == 2
        assert "FAILED bad" in r.stderr

    def test_analyze_total_failure_exit_3(self, tmp_path):
        bad = tmp_path / "bad.csv"
        write_csv(bad, [f"{hourly(0)},1", f"{hourly(9)},2"])
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            f"input = {bad}\noutput_dir = {tmp_path / 'out'}\nemit_svg = false\n",
            encoding="utf-8")
        r = run_cli("analyze", str(cfg_file))
        assert r.returncode == 3

    def test_synth_cascade_kind(self, tmp_path):
        out_csv = tmp_path / "c.csv"
        r = run_cli("synth", "--kind", "cascade", "--levels", "8", "--weight-a", "0.75",
                    "--seed", "4", "--out", str(out_csv))
        assert r.returncode == 0, r.stderr
        s = ingest_load_csv(out_csv)
        assert len(s) == 256
        assert float(np.sum(s.values)) == pytest.approx(256.0, rel=1e-9)

    def test_cluster_subcommand(self, tmp_path):
        r = run_cli("cluster", str(FIXTURE), "--k", "2", "--seed", "7",
                    "--out", str(tmp_path / "clusters.csv"))
        assert r.returncode == 0, r.stderr
        with open(tmp_path / "clusters.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 35
        by = {r["country"]: r["cluster"] for r in rows}
        assert len({by[c] for c in ("Iceland", "Spain", "Estonia", "Poland")}) == 1

    def test_plot_subcommand(self, tmp_path):
        out_csv = tmp_path / "e.csv"
        run_cli("synth", "--kind", "fgn", "--n", "4096", "--hurst", "0.7",
                "--seed", "5", "--out", str(out_csv))
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            f"input = {out_csv}\noutput_dir = {tmp_path / 'out'}\n"
            "poly_order = 2\nn_shuffles = 2\nn_surrogates = 2\nemit_svg = false\n",
            encoding="utf-8")
        assert run_cli("analyze", str(cfg_file)).returncode == 0
        r = run_cli("plot", str(tmp_path / "out"))
        assert r.returncode == 0, r.stderr
        assert (tmp_path / "out" / "fig_width_scatter.svg").exists()
        ET.parse(tmp_path / "out" / "fig_peaks.svg")
