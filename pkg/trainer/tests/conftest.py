"""Shared fixtures and helpers for the trainer tests.

The model-structure checks (weight sharing, locality, gradients) and the
sanity suite use the same tiny instances, so the builders live here.
"""

import numpy as np
import torch

from subfull import ModelConfig, build_model
from subfull.data import Corpus


def toy_features(n_bands: int, n_frames: int, seed: int) -> np.ndarray:
    """Nonnegative float32 matrix shaped like cubic-root magnitudes."""
    rng = np.random.default_rng(seed)
    return np.abs(rng.standard_normal((n_bands, n_frames))).astype(np.float32)


def make_corpus(n_utts: int, n_bands: int = 16, n_frames: int = 10, seed: int = 0) -> Corpus:
    """Synthetic corpus where the target is a fixed affine map of the input."""
    rng = np.random.default_rng(seed)
    corpus = Corpus()
    for i in range(n_utts):
        x = np.abs(rng.standard_normal((n_bands, n_frames))).astype(np.float32)
        y = (0.5 * x + 0.1).astype(np.float32)
        corpus.utt_ids.append(f"u{i:03d}")
        corpus.inputs.append(x)
        corpus.targets.append(y)
    return corpus


def tiny_config(arch: str) -> ModelConfig:
    """Smallest instance that still exercises both recurrences."""
    return ModelConfig(
        arch=arch,
        neighbor_radius=0,
        subband_hidden=3,
        fullband_hidden=3,
        n_bands=2,
    )


def max_grad_rel_err(arch: str, h: float = 1e-6) -> float:
    """Central-difference check of d<model(x), v>/dtheta over every
    parameter and the input, on a 2-band, 3-frame instance in float64.

    Returns the worst relative error with denominator
    max(|analytic|, |numeric|, 1e-6), so zero-gradient entries cannot
    blow the ratio up.
    """
    torch.manual_seed(0)
    model = build_model(tiny_config(arch), seed=0).double()
    x = torch.randn(2, 3, dtype=torch.float64, requires_grad=True)
    v = torch.randn(2, 3, dtype=torch.float64)

    def scalar() -> float:
        return float((model(x) * v).sum())

    model.zero_grad()
    (model(x) * v).sum().backward()

    worst = 0.0
    leaves = [p for p in model.parameters()] + [x]
    with torch.no_grad():
        for leaf in leaves:
            grad = leaf.grad.reshape(-1)
            flat = leaf.reshape(-1)
            for i in range(flat.numel()):
                keep = float(flat[i])
                flat[i] = keep + h
                f_plus = scalar()
                flat[i] = keep - h
                f_minus = scalar()
                flat[i] = keep
                fd = (f_plus - f_minus) / (2.0 * h)
                a = float(grad[i])
                rel = abs(fd - a) / max(abs(a), abs(fd), 1e-6)
                worst = max(worst, rel)
    return worst
