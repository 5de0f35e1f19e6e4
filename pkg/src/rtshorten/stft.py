"""STFT analysis/synthesis and cubic-root magnitude features.

Conventions (fixed here, relied on everywhere else):

- Analysis: periodic (DFT-even) taper of length win_len, hop-advanced
  frames, one-sided rfft of length fft_len. Frame p covers samples
  [p*hop, p*hop + win_len) of the padded signal; phase is frame-relative
  (no per-frame phase rotation is applied).
- Padding: win_len - hop samples at BOTH ends ("reflect" by default, or
  "zero"), then zero-fill at the tail so the last frame is complete.
  With this policy every original sample is covered by a full set of
  overlapping frames, so reconstruction is exact end to end, not just on
  the interior.
- Synthesis: weighted overlap-add with the least-squares dual window
  w_s(n) = w_a(n) / sum_j w_a(n - j*hop)^2 (the sum over all shifts that
  land inside the window). The construction makes
  sum_j w_s(n - j*hop) * w_a(n - j*hop) = 1 identically, which is checked
  to 1e-12 when a config is built.
- Features: cubic-root compressed magnitude |X|^(1/3).

File format ".ftm": one UTF-8 JSON header line
{"dims":[K,P],"dtype":"f32","byte_order":"little","layout":"frequency-major"}
terminated by a newline, followed by K*P raw little-endian float32 values
(frequency-major: all P values of band 0, then band 1, ...). A phase
matrix is stored identically with an extra "kind":"phase" key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.signal import get_window

PR_TOLERANCE = 1e-12
FTM_HEADER_KEYS = {"dims", "dtype", "byte_order", "layout", "kind"}


@dataclass(frozen=True)
class StftConfig:
    win_len: int = 512
    hop: int = 256
    fs: int = 16000
    analysis_window: str = "hamming"
    fft_len: Optional[int] = None

    def __post_init__(self):
        if self.fft_len is None:
            object.__setattr__(self, "fft_len", self.win_len)
        if not (0 < self.hop <= self.win_len <= self.fft_len):
            raise ValueError(
                f"need 0 < hop <= win_len <= fft_len, got "
                f"hop={self.hop}, win_len={self.win_len}, fft_len={self.fft_len}"
            )
        if self.fs <= 0:
            raise ValueError("fs must be positive")
        w_a, w_s = _dual_windows(self.win_len, self.hop, self.analysis_window)
        object.__setattr__(self, "_w_a", w_a)
        object.__setattr__(self, "_w_s", w_s)

    @property
    def n_bands(self) -> int:
        return self.fft_len // 2 + 1

    @property
    def pad(self) -> int:
        return self.win_len - self.hop

    def windows(self) -> Tuple[np.ndarray, np.ndarray]:
        """(analysis, synthesis) taper pair; read-only views."""
        return self._w_a, self._w_s

    def to_dict(self) -> dict:
        return {
            "win_len": self.win_len,
            "hop": self.hop,
            "fs": self.fs,
            "analysis_window": self.analysis_window,
            "fft_len": self.fft_len,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StftConfig":
        return cls(**d)


def _dual_windows(win_len: int, hop: int, name: str) -> Tuple[np.ndarray, np.ndarray]:
    """Analysis taper + least-squares dual synthesis taper.

    The normalizer D(n) = sum_j w_a(n - j*hop)^2 is hop-periodic, so it is
    computed per residue class of n mod hop. A residue with zero overlap
    energy means the window/hop pair cannot reconstruct and is rejected.
    """
    w_a = get_window(name, win_len, fftbins=True).astype(np.float64)
    denom = np.zeros(hop, dtype=np.float64)
    sq = w_a * w_a
    for start in range(0, win_len, hop):
        chunk = sq[start:start + hop]
        denom[: chunk.size] += chunk
    if np.any(denom <= 0):
        raise ValueError(
            f"window {name!r} with win_len={win_len}, hop={hop} has dead overlap "
            "positions; perfect reconstruction is impossible"
        )
    w_s = w_a / np.tile(denom, -(-win_len // hop))[:win_len]
    # construction-time check of the overlap-add partition of unity
    ola = np.zeros(hop, dtype=np.float64)
    prod = w_a * w_s
    for start in range(0, win_len, hop):
        chunk = prod[start:start + hop]
        ola[: chunk.size] += chunk
    err = np.max(np.abs(ola - 1.0))
    if err > PR_TOLERANCE:
        raise ValueError(
            f"analysis/synthesis pair misses perfect reconstruction "
            f"(identity error {err:.3e} > {PR_TOLERANCE})"
        )
    w_a.setflags(write=False)
    w_s.setflags(write=False)
    return w_a, w_s


@dataclass
class Spectrogram:
    """Complex one-sided STFT coefficients on a K x P grid.

    n_samples/pad_mode record how the grid was produced so that istft can
    undo the padding; they are in-memory metadata only and are not part
    of any file format.
    """

    coeffs: np.ndarray
    config: StftConfig
    n_samples: Optional[int] = None
    pad_mode: str = "reflect"

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] != self.config.n_bands:
            raise ValueError(
                f"coeffs must be (K={self.config.n_bands}) x P, got {self.coeffs.shape}"
            )
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite STFT coefficients")

    @property
    def n_frames(self) -> int:
        return self.coeffs.shape[1]


@dataclass
class FeatureMatrix:
    """Cubic-root magnitude features on the same K x P grid."""

    values: np.ndarray
    config: StftConfig
    n_samples: Optional[int] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.config.n_bands:
            raise ValueError(
                f"values must be (K={self.config.n_bands}) x P, got {self.values.shape}"
            )
        if np.any(self.values < 0):
            raise ValueError("features are magnitudes and must be >= 0")


def _pad_signal(x: np.ndarray, config: StftConfig, pad_mode: str) -> np.ndarray:
    pad = config.pad
    if pad_mode == "reflect":
        if pad > 0 and x.size < pad + 1:
            raise ValueError(
                f"signal of {x.size} samples is too short to reflect-pad by {pad}; "
                "use pad_mode='zero'"
            )
        padded = np.pad(x, pad, mode="reflect") if pad > 0 else x
    elif pad_mode == "zero":
        padded = np.pad(x, pad, mode="constant") if pad > 0 else x
    else:
        raise ValueError(f"unknown pad_mode {pad_mode!r}")
    # zero-fill the tail so the last hop-advanced frame is complete
    if padded.size < config.win_len:
        n_frames = 1
    else:
        n_frames = -(-(padded.size - config.win_len) // config.hop) + 1
    needed = (n_frames - 1) * config.hop + config.win_len
    if needed > padded.size:
        padded = np.pad(padded, (0, needed - padded.size), mode="constant")
    return padded


def stft(signal: np.ndarray, config: StftConfig = None, pad_mode: str = "reflect") -> Spectrogram:
    """One-sided STFT of a real signal under the module's padding policy."""
    if config is None:
        config = StftConfig()
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("signal must be a non-empty 1-D array")
    padded = _pad_signal(x, config, pad_mode)
    w_a, _ = config.windows()
    frames = np.lib.stride_tricks.sliding_window_view(padded, config.win_len)[:: config.hop]
    coeffs = np.fft.rfft(frames * w_a, n=config.fft_len, axis=1)
    return Spectrogram(
        coeffs=coeffs.T.copy(), config=config, n_samples=x.size, pad_mode=pad_mode
    )


def istft(spec: Spectrogram, n_samples: Optional[int] = None) -> np.ndarray:
    """Weighted overlap-add resynthesis; exact inverse of ``stft``.

    n_samples overrides the length recorded on the spectrogram; when
    neither is available the result is the full overlap-add minus the
    edge padding.
    """
    config = spec.config
    _, w_s = config.windows()
    frames = np.fft.irfft(spec.coeffs.T, n=config.fft_len, axis=1)[:, : config.win_len]
    frames = frames * w_s
    n_frames = frames.shape[0]
    total = (n_frames - 1) * config.hop + config.win_len
    out = np.zeros(total, dtype=np.float64)
    for p in range(n_frames):
        out[p * config.hop: p * config.hop + config.win_len] += frames[p]
    target_len = n_samples if n_samples is not None else spec.n_samples
    if target_len is None:
        return out[config.pad: total - config.pad]
    end = config.pad + int(target_len)
    if end > total:
        raise ValueError(
            f"requested {target_len} samples but the grid only covers {total - config.pad}"
        )
    return out[config.pad: end]


def features(spec: Spectrogram) -> FeatureMatrix:
    """Cubic-root compressed magnitudes |X|^(1/3)."""
    return FeatureMatrix(
        values=np.cbrt(np.abs(spec.coeffs)), config=spec.config, n_samples=spec.n_samples
    )


def resynth(feats: FeatureMatrix, phase_source: Spectrogram, n_samples: Optional[int] = None) -> np.ndarray:
    """Invert features to a waveform, borrowing the phase of ``phase_source``.

    Coefficients are rebuilt as values^3 * exp(i * angle(phase_source))
    and run through istft. Grids must match exactly.
    """
    if feats.values.shape != phase_source.coeffs.shape:
        raise ValueError(
            f"grid mismatch: features {feats.values.shape} vs phase {phase_source.coeffs.shape}"
        )
    if feats.config != phase_source.config:
        raise ValueError("features and phase source use different STFT configs")
    mag = feats.values ** 3
    coeffs = mag * np.exp(1j * np.angle(phase_source.coeffs))
    spec = Spectrogram(
        coeffs=coeffs,
        config=phase_source.config,
        n_samples=phase_source.n_samples,
        pad_mode=phase_source.pad_mode,
    )
    return istft(spec, n_samples=n_samples)


# ---------------------------------------------------------------------------
# .ftm file format
# ---------------------------------------------------------------------------

def write_feature_file(path: str, values: np.ndarray, kind: Optional[str] = None) -> None:
    """Write a K x P real matrix in the ".ftm" format (see module docstring)."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
    k, p = values.shape
    header = {
        "dims": [int(k), int(p)],
        "dtype": "f32",
        "byte_order": "little",
        "layout": "frequency-major",
    }
    if kind is not None:
        header["kind"] = str(kind)
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def read_feature_file(path: str) -> Tuple[np.ndarray, dict]:
    """Read an ".ftm" file; returns (float32 K x P matrix, header dict)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: bad .ftm header: {exc}") from exc
    unknown = set(header) - FTM_HEADER_KEYS
    if unknown:
        raise ValueError(f"{path}: unknown .ftm header keys {sorted(unknown)}")
    for key, expected in (("dtype", "f32"), ("byte_order", "little"), ("layout", "frequency-major")):
        if header.get(key) != expected:
            raise ValueError(f"{path}: header {key}={header.get(key)!r}, expected {expected!r}")
    dims = header.get("dims")
    if (
        not isinstance(dims, list)
        or len(dims) != 2
        or not all(isinstance(d, int) and d > 0 for d in dims)
    ):
        raise ValueError(f"{path}: bad dims {dims!r}")
    k, p = dims
    expected_bytes = 4 * k * p
    if len(payload) != expected_bytes:
        raise ValueError(
            f"{path}: payload holds {len(payload)} bytes, header implies {expected_bytes}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(k, p)
    return data, header
