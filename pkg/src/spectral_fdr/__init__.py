"""Dimension selection for principal subspaces with false discovery rate control."""

from .spectral import (Spectrum, SpacingProfile, SpectralError, is_symmetric, projection_overlap,
                       singular_spectrum, spacings, symmetric_spectrum)
from .transforms import (BulkEvaluationError, BulkSpectrum, TransformValue, cauchy_estimate,
                         d_transform_estimate, phi_estimate, ratio_asymmetric, ratio_symmetric,
                         split_bulk)
from .rank import DegenerateMedianWarning, RankConfig, RankResult, default_threshold, rank_estimate
from .fdr import (FdrCurve, SelectionResult, fdr_curve_asymmetric, fdr_curve_symmetric, select,
                  select_dimension)
from .ensembles import (EnsembleInstance, NoiseSpec, SignalSpec, bbp_estimate, make_rng, preset,
                        sample_instance, sample_noise, signal_spectrum)
from .oracle import (LimitLaw, SpikeForecast, bbp_threshold, fdr_infinity, law_quantile,
                     law_transform, spike_forecast)
from .montecarlo import ExperimentConfig, ExperimentReport, run_experiment, true_fdr_trial

__version__ = "0.1.0"
