"""Toy-scale subband/fullband sequence models for feature-matrix regression.

The package trains small recurrent models that map noisy-reverberant
cubic-root magnitude features to windowed-target features. It exchanges
only files with the waveform toolkit that generates those features —
WAV corpora and JSON-lines manifests go in, ".ftm" feature matrices come
back — and shells out to the ``rtshorten`` executable for every acoustic
operation, so the STFT convention lives in exactly one code base.
"""

from .data import Corpus, build_feature_corpus, load_corpus, run_toolkit, toy_speech
from .ftm import read_ftm, write_ftm
from .model import (
    FullSubNet,
    ModelConfig,
    SubNet,
    band_neighborhoods,
    build_model,
    enhance_features,
)
from .train import (
    RunConfig,
    TrainRun,
    enhance_file,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "FullSubNet",
    "ModelConfig",
    "RunConfig",
    "SubNet",
    "TrainRun",
    "band_neighborhoods",
    "build_feature_corpus",
    "build_model",
    "enhance_features",
    "enhance_file",
    "load_checkpoint",
    "load_corpus",
    "read_ftm",
    "run_toolkit",
    "save_checkpoint",
    "toy_speech",
    "train",
    "write_ftm",
    "__version__",
]
