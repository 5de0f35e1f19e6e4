"""rtshorten: reverberation-time shortening toolkit.

RIR synthesis and exponential target-shortening windows, Schroeder
energy-decay analysis with blind T60 estimation, STFT feature
extraction, cross-band verification of the subband reverberation model,
and a deterministic paired-dataset builder with feature-domain metrics.
"""

from .rir import (
    Rir,
    WindowSpec,
    PolackParams,
    synth_polack_rir,
    decay_rate_q,
    build_window,
    shorten_rir,
    detect_direct_path,
)
from .acoustics import (
    Edc,
    ResidualRir,
    InsufficientDecayError,
    schroeder_edc,
    estimate_t60,
    identify_remaining_rir,
    edc_report,
)
from .stft import (
    StftConfig,
    Spectrogram,
    FeatureMatrix,
    stft,
    istft,
    features,
    resynth,
    write_feature_file,
    read_feature_file,
)
from .crossband import (
    CrossbandFilters,
    crossband_filters,
    crossband_apply,
    model_error,
    narrowband_error,
    narrowband_transfer,
    write_crossband_file,
    read_crossband_file,
)
from .dataset import (
    ManifestEntry,
    TrainingPair,
    read_manifest,
    write_manifest,
    convolve,
    mix_at_snr,
    make_pair,
    build_dataset,
    synth_noise,
    synth_speech,
)
from .metrics import MetricReport, spectral_mse, evaluate_corpus

__version__ = "0.1.0"

__all__ = [
    "Rir",
    "WindowSpec",
    "PolackParams",
    "synth_polack_rir",
    "decay_rate_q",
    "build_window",
    "shorten_rir",
    "detect_direct_path",
    "Edc",
    "ResidualRir",
    "InsufficientDecayError",
    "schroeder_edc",
    "estimate_t60",
    "identify_remaining_rir",
    "edc_report",
    "StftConfig",
    "Spectrogram",
    "FeatureMatrix",
    "stft",
    "istft",
    "features",
    "resynth",
    "write_feature_file",
    "read_feature_file",
    "CrossbandFilters",
    "crossband_filters",
    "crossband_apply",
    "model_error",
    "narrowband_error",
    "narrowband_transfer",
    "write_crossband_file",
    "read_crossband_file",
    "ManifestEntry",
    "TrainingPair",
    "read_manifest",
    "write_manifest",
    "convolve",
    "mix_at_snr",
    "make_pair",
    "build_dataset",
    "synth_noise",
    "synth_speech",
    "MetricReport",
    "spectral_mse",
    "evaluate_corpus",
]
