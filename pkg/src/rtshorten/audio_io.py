"""WAV and JSON-sidecar I/O helpers.

All DSP in this package runs in float64; files may narrow to float32.
WAV support covers mono PCM16 and IEEE float32 at any sample rate.
Sidecars are plain JSON files sharing the WAV basename with a ".json"
extension and carry whatever metadata the producing operation recorded
(direct-path index, nominal/estimated T60, window spec, seeds, ...).
"""

from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np
from scipy.io import wavfile


def read_wav(path: str) -> tuple[int, np.ndarray]:
    """Read a mono WAV file and return (fs, samples as float64).

    PCM16 is rescaled to [-1, 1) by 1/32768; float32/float64 data is
    passed through unchanged. Multichannel input is rejected rather
    than silently downmixed.
    """
    fs, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported WAV sample format {data.dtype}")
    return int(fs), samples


def write_wav(path: str, fs: int, samples: np.ndarray, dtype: str = "float32") -> None:
    """Write a mono WAV file.

    dtype "float32" (default) keeps full dynamic range without scaling;
    "pcm16" scales by 32768 and clips to the int16 range.
    """
    samples = np.asarray(samples)
    if samples.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got shape {samples.shape}")
    if dtype == "float32":
        wavfile.write(path, int(fs), samples.astype(np.float32))
    elif dtype == "pcm16":
        scaled = np.clip(np.round(samples * 32768.0), -32768, 32767).astype(np.int16)
        wavfile.write(path, int(fs), scaled)
    else:
        raise ValueError(f"unsupported output dtype {dtype!r}")


def sidecar_path(wav_path: str) -> str:
    base, _ = os.path.splitext(wav_path)
    return base + ".json"


def write_sidecar(wav_path: str, meta: dict) -> str:
    """Write the JSON sidecar next to ``wav_path``; returns the sidecar path.

    Serialization is canonical (sorted keys, fixed separators) so repeated
    builds produce byte-identical files.
    """
    path = sidecar_path(wav_path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta, sort_keys=True, separators=(",", ":")))
        fh.write("\n")
    return path


def read_sidecar(wav_path: str) -> Optional[dict]:
    """Load the sidecar for ``wav_path`` if one exists, else None."""
    path = sidecar_path(wav_path)
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
