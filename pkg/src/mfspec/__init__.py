"""mfspec: multifractal time-series analysis toolkit.

Spectral carrier/fluctuation splitting, MFDFA with shuffled and
phase-surrogate ensembles, Legendre multifractal spectra with
width/peak metrics, and k-means clustering of the per-entity widths.
"""

from ._kernels import BACKEND
from .cluster import FeatureMatrix, KmeansResult, kmeans, normalize_features, silhouette
from .mfdfa import (DEFAULT_Q_GRID, FluctuationSurface, HurstCurve, MfdfaConfig,
                    correlation_hurst, distribution_hurst, ensemble_surface,
                    fit_hurst, fluctuation_function, segment_starts,
                    surface_to_csv, window_variance)
from .mfspectrum import (SpectrumMetrics, SpectrumSummary, legendre_points,
                         scaling_function, spectrum_metrics, summary_to_csv)
from .pipeline import (ConfigError, CountryReport, RunConfig, analyze_series,
                       classify_regime, emit_report, ingest_load_csv,
                       load_run_config, run_pipeline)
from .series import (RngSpec, Series, SummaryStats, build_profile, shuffle_series,
                     summary_stats)
from .spectral import (CarrierPolicy, Spectrum, SpectrumDecomposition, decompose,
                       export_decomposition_csv, forward_dft, inverse_dft,
                       make_surrogate, phase_randomized)
from .stattests import (AutocorrTestResult, KsResult, autocorr_test, chi2_inverse_cdf,
                        ks_gaussian_test, ljung_box_statistic, qq_points,
                        sample_autocorrelation)
from .synth import (CascadeSpec, analytic_cascade_hurst, binomial_cascade, fgn,
                    fgn_autocovariance, gaussian_white_noise)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "Series", "RngSpec", "SummaryStats", "build_profile", "shuffle_series", "summary_stats",
    "Spectrum", "CarrierPolicy", "SpectrumDecomposition", "forward_dft", "inverse_dft",
    "decompose", "make_surrogate", "phase_randomized", "export_decomposition_csv",
    "AutocorrTestResult", "KsResult", "sample_autocorrelation", "ljung_box_statistic",
    "chi2_inverse_cdf", "autocorr_test", "ks_gaussian_test", "qq_points",
    "MfdfaConfig", "DEFAULT_Q_GRID", "FluctuationSurface", "HurstCurve", "segment_starts",
    "window_variance", "fluctuation_function", "fit_hurst", "ensemble_surface",
    "correlation_hurst", "distribution_hurst", "surface_to_csv",
    "SpectrumSummary", "SpectrumMetrics", "scaling_function", "legendre_points",
    "spectrum_metrics", "summary_to_csv",
    "CascadeSpec", "gaussian_white_noise", "fgn", "fgn_autocovariance",
    "binomial_cascade", "analytic_cascade_hurst",
    "FeatureMatrix", "KmeansResult", "normalize_features", "kmeans", "silhouette",
    "RunConfig", "ConfigError", "CountryReport", "load_run_config", "ingest_load_csv",
    "analyze_series", "run_pipeline", "emit_report", "classify_regime",
]
