"""Subband and fullband-fused sequence models over feature matrices.

Both architectures map a (bands x frames) feature matrix to a prediction
of the same shape. The subband model runs one shared BLSTM over every
band's frame sequence, seeing that band plus its neighbors within a
fixed radius (edges replicate), so every band is processed by identical
parameters and the output at band k cannot depend on bands outside
[k-r, k+r]. The fused variant first runs a full-band BLSTM across the
whole spectrum per frame and hands each band a scalar summary alongside
its neighborhood — deliberately giving up that locality for global
spectral context.
"""

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

ARCHS = ("subnet", "fullsubnet")


@dataclass(frozen=True)
class ModelConfig:
    arch: str = "subnet"
    neighbor_radius: int = 4
    subband_hidden: int = 256
    fullband_hidden: int = 384
    bidirectional: bool = True
    # full-band input width; the subband path works on any band count
    # of at least one neighborhood
    n_bands: int = 257

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ValueError(f"arch must be one of {ARCHS}, got {self.arch!r}")
        if self.neighbor_radius < 0:
            raise ValueError("neighbor_radius must be >= 0")
        if self.subband_hidden <= 0 or self.fullband_hidden <= 0:
            raise ValueError("hidden sizes must be positive")
        if self.n_bands < 2 * self.neighbor_radius + 1:
            raise ValueError(
                f"n_bands must cover one neighborhood "
                f"({2 * self.neighbor_radius + 1}), got {self.n_bands}"
            )

    @classmethod
    def toy(cls, arch: str = "subnet", **overrides) -> "ModelConfig":
        """Desk-scale sizes for tests and demos."""
        values = dict(arch=arch, subband_hidden=64, fullband_hidden=96)
        values.update(overrides)
        return cls(**values)


def band_neighborhoods(features: torch.Tensor, radius: int) -> torch.Tensor:
    """(K, P) -> (K, P, 2*radius+1): each band's row plus the rows within
    `radius` of it, ordered low band to high, edges replicated."""
    if features.ndim != 2:
        raise ValueError("features must be 2-D (bands x frames)")
    n_bands = features.shape[0]
    width = 2 * radius + 1
    if n_bands < width:
        raise ValueError(f"need at least {width} bands for radius {radius}, got {n_bands}")
    if radius == 0:
        return features.unsqueeze(-1)
    padded = torch.cat(
        [features[:1].expand(radius, -1), features, features[-1:].expand(radius, -1)],
        dim=0,
    )
    return padded.unfold(0, width, 1)


class SubNet(nn.Module):
    """One shared BLSTM over every band's neighborhood sequence.

    The bands form the batch dimension, which is what makes the weight
    sharing and the +-radius locality structural rather than learned.
    `extra_inputs` widens the per-frame input so a fused front end can
    append its per-band summary.
    """

    def __init__(self, config: ModelConfig, extra_inputs: int = 0):
        super().__init__()
        self.config = config
        in_size = 2 * config.neighbor_radius + 1 + extra_inputs
        self.lstm = nn.LSTM(
            in_size,
            config.subband_hidden,
            batch_first=True,
            bidirectional=config.bidirectional,
        )
        width = config.subband_hidden * (2 if config.bidirectional else 1)
        self.head = nn.Linear(width, 1)

    def forward_bands(self, bands: torch.Tensor) -> torch.Tensor:
        """(K, P, C) stacked band inputs -> (K, P) predictions."""
        out, _ = self.lstm(bands)
        return self.head(out).squeeze(-1)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        bands = band_neighborhoods(features, self.config.neighbor_radius)
        return self.forward_bands(bands.contiguous())


class FullSubNet(nn.Module):
    """Full-band BLSTM summary concatenated into each band's subband input."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.fullband = nn.LSTM(
            config.n_bands,
            config.fullband_hidden,
            batch_first=True,
            bidirectional=config.bidirectional,
        )
        width = config.fullband_hidden * (2 if config.bidirectional else 1)
        self.fullband_head = nn.Linear(width, config.n_bands)
        self.subband = SubNet(config, extra_inputs=1)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        n_bands = features.shape[0]
        if n_bands != self.config.n_bands:
            raise ValueError(f"expected {self.config.n_bands} bands, got {n_bands}")
        frames = features.T.unsqueeze(0)  # (1, P, K): the spectrum per frame
        summary, _ = self.fullband(frames)
        embedding = self.fullband_head(summary)[0]  # (P, K), one scalar per band
        bands = band_neighborhoods(features, self.config.neighbor_radius)
        stacked = torch.cat([bands, embedding.T.unsqueeze(-1)], dim=-1)
        return self.subband.forward_bands(stacked.contiguous())


def build_model(config: ModelConfig, seed: int = 0) -> nn.Module:
    """Deterministically initialized model for the configured architecture."""
    torch.manual_seed(seed)
    if config.arch == "subnet":
        return SubNet(config)
    return FullSubNet(config)


def enhance_features(model: nn.Module, values: np.ndarray) -> np.ndarray:
    """Run a trained model on one feature matrix.

    Predictions are clamped at zero: the features are cubic-root
    magnitudes, which are nonnegative by definition.
    """
    model.eval()
    with torch.no_grad():
        x = torch.as_tensor(np.asarray(values, dtype=np.float32))
        pred = model(x)
    return np.maximum(pred.numpy(), 0.0).astype(np.float32)
