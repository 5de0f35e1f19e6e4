"""Cross-band filters: the exact STFT-domain picture of time-domain convolution.

Convolving a signal with an impulse response looks, on the STFT grid,
like a sum of per-band convolutions across neighboring frequency bands::

    Y(k, p) = sum_d sum_m  A(k, k+d, m) * X(k+d, p - m)

This module extracts the band-to-band filters A constructively instead
of transcribing a closed form: band k' is probed with the time-domain
atom whose (two-sided) spectrogram is a unit coefficient at (k', p0) —
the synthesis waveform w_s(n) * exp(2*pi*i*k'*n/fft_len)/fft_len placed
at frame p0. Convolving the atom with the impulse response and analyzing
the result reads off A(., k', .) directly. Because synthesis, convolution
and analysis are all linear and the frame grid is hop-shift invariant,
the extracted taps satisfy the relation above exactly (to floating
precision) for any input, which the tests exploit as a master oracle.

Two conventions matter and are deliberate:

- Band offsets live on the TWO-SIDED frequency circle: the neighbor
  (k + d) mod fft_len of a one-sided band k may land above Nyquist, in
  which case it is the conjugate mirror of band fft_len - (k+d). Near DC
  and Nyquist these mirrored neighbors carry O(1) weight, so clamping
  the neighborhood into [0, K-1] would break the full-radius equivalence
  with time-domain convolution. crossband_apply realizes the mirrors by
  hermitian extension of the one-sided input.
- The filters are not causal in frames: a window that overlaps the next
  hop sees energy "early". Taps are stored with lag index p in [0, L-1]
  and an origin offset lag_offset = ceil(win_len/hop) - 1, so the true
  frame lag is p - lag_offset.

All probing and application assume the zero-padded STFT grid
(pad_mode="zero"): a zero prefix commutes with convolution, which keeps
stft(s * a) and the filtered stft(s) on one shared grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft
from scipy.signal import fftconvolve

from .rir import Rir
from .stft import Spectrogram, StftConfig, stft


@dataclass
class CrossbandFilters:
    """Band-to-band filter tensor.

    taps[k, d, p] couples output band k (one-sided, K rows) to input band
    (k + d - l) mod fft_len at stored lag p; ``l`` is the neighbor radius
    (so axis 1 has 2l+1 entries ordered d = -l..+l), ``L`` the lag count,
    ``lag_offset`` the index of the zero-lag tap.
    """

    taps: np.ndarray
    l: int
    L: int
    lag_offset: int
    config: StftConfig

    def __post_init__(self):
        k, d, L = self.taps.shape
        if k != self.config.n_bands or d != 2 * self.l + 1 or L != self.L:
            raise ValueError(
                f"taps shape {self.taps.shape} inconsistent with "
                f"K={self.config.n_bands}, l={self.l}, L={self.L}"
            )
        if not np.all(np.isfinite(self.taps)):
            raise ValueError("non-finite filter taps")

    def truncated(self, radius: int) -> "CrossbandFilters":
        """Restrict to a smaller neighbor radius (taps are radius-independent)."""
        if not (0 <= radius <= self.l):
            raise ValueError(f"radius {radius} outside [0, {self.l}]")
        sub = self.taps[:, self.l - radius: self.l + radius + 1, :]
        return CrossbandFilters(
            taps=sub, l=radius, L=self.L, lag_offset=self.lag_offset, config=self.config
        )


def _analysis_frames(canvas: np.ndarray, config: StftConfig, n_frames: int) -> np.ndarray:
    """Two-sided STFT of a (possibly complex) canvas, frames anchored at 0."""
    w_a, _ = config.windows()
    needed = (n_frames - 1) * config.hop + config.win_len
    if canvas.size < needed:
        canvas = np.pad(canvas, (0, needed - canvas.size))
    frames = np.lib.stride_tricks.sliding_window_view(canvas, config.win_len)[:: config.hop]
    frames = frames[:n_frames]
    return np.fft.fft(frames * w_a, n=config.fft_len, axis=1).T  # (fft_len, n_frames)


def crossband_filters(
    rir: Rir, config: StftConfig, l: int, probe_frame: Optional[int] = None
) -> CrossbandFilters:
    """Extract the cross-band filters of ``rir`` out to neighbor radius ``l``.

    L = ceil(len(rir)/hop) + ceil(win_len/hop) + 1 lags are stored, which
    covers the full support of the underlying filters (window pre-echo
    included). ``probe_frame`` places the probing atom (default: the
    first frame whose full anticausal extent is on the grid); the result
    is probe-position independent, which the tests assert.
    """
    if rir.fs != config.fs:
        raise ValueError(f"rir at {rir.fs} Hz does not match config fs {config.fs}")
    K = config.n_bands
    if not (0 <= l <= K - 1):
        raise ValueError(f"neighbor radius {l} outside [0, {K - 1}]")
    W, h, Nf = config.win_len, config.hop, config.fft_len
    R = len(rir)
    m0 = -(-W // h) - 1
    L = -(-R // h) + -(-W // h) + 1
    p0 = m0 if probe_frame is None else int(probe_frame)
    if p0 < m0:
        raise ValueError(f"probe_frame must be >= {m0} to keep anticausal lags on the grid")
    n_frames = p0 + L - m0  # covers output frames p0 - m0 .. p0 + L - 1 - m0

    _, w_s = config.windows()
    n = np.arange(W)
    offsets = np.arange(-l, l + 1)
    taps = np.zeros((K, 2 * l + 1, L), dtype=np.complex128)

    for c in range(K):  # probe one-sided input bands; mirrors come for free
        atom = w_s * np.exp(2j * np.pi * c * n / Nf) / Nf
        probe = np.concatenate([np.zeros(p0 * h, dtype=np.complex128), atom])
        response = fftconvolve(probe, rir.samples)
        M = _analysis_frames(response, config, n_frames)[:, p0 - m0: p0 - m0 + L]

        # taps[k, d] reads input column (k + d) mod Nf; fill every (k, d)
        # whose column is this probe...
        k_direct = (c - offsets) % Nf
        sel = k_direct < K
        taps[k_direct[sel], np.nonzero(sel)[0], :] = M[k_direct[sel], :]

        # ...and every (k, d) whose column is the conjugate mirror Nf - c:
        # for a real response A(k, Nf-c, m) = conj(A(Nf-k, c, m))
        c2 = (Nf - c) % Nf
        if c2 != c:
            k_mirror = (c2 - offsets) % Nf
            sel2 = k_mirror < K
            taps[k_mirror[sel2], np.nonzero(sel2)[0], :] = np.conj(
                M[(Nf - k_mirror[sel2]) % Nf, :]
            )

    if 2 * l == Nf:
        # offsets -l and +l alias to the same column at full radius;
        # zero one slab so applying never double-counts it
        taps[:, 0, :] = 0.0

    return CrossbandFilters(taps=taps, l=l, L=L, lag_offset=m0, config=config)


def crossband_apply(source_spec: Spectrogram, filters: CrossbandFilters) -> Spectrogram:
    """Filter a spectrogram through the cross-band tensor.

    Implements Y(k, .) = sum_d taps[k, d, :] (*) X((k + d - l) mod Nf, .)
    with the convolution along frames done by FFT. The one-sided input is
    hermitian-extended so mirrored neighbors are available. Output frames
    are aligned so index p of the result corresponds to frame p of
    stft(signal * rir) on the same zero-padded grid.
    """
    if source_spec.config != filters.config:
        raise ValueError("source spectrogram and filters use different STFT configs")
    X = source_spec.coeffs
    K, P = X.shape
    Nf = filters.config.fft_len
    L, l, m0 = filters.L, filters.l, filters.lag_offset

    X2 = np.empty((Nf, P), dtype=np.complex128)
    X2[:K] = X
    if Nf > K:
        X2[K:] = np.conj(X[Nf - K: 0: -1, :])

    n_full = P + L - 1
    n_fft = scipy.fft.next_fast_len(n_full)
    Xf = np.fft.fft(X2, n=n_fft, axis=1)
    Zf = np.zeros((K, n_fft), dtype=np.complex128)
    ks = np.arange(K)
    for di in range(2 * l + 1):
        rows = (ks + (di - l)) % Nf
        Zf += np.fft.fft(filters.taps[:, di, :], n=n_fft, axis=1) * Xf[rows, :]
    z = np.fft.ifft(Zf, axis=1)[:, :n_full]
    out = z[:, m0:]
    return Spectrogram(
        coeffs=out, config=filters.config, n_samples=None, pad_mode=source_spec.pad_mode
    )


def _reference_and_filtered(
    s: np.ndarray, rir: Rir, config: StftConfig, filters: CrossbandFilters
):
    source = stft(s, config, pad_mode="zero")
    reference = stft(fftconvolve(s, rir.samples), config, pad_mode="zero")
    filtered = crossband_apply(source, filters)
    P = min(reference.n_frames, filtered.n_frames)
    return reference.coeffs[:, :P], filtered.coeffs[:, :P]


def model_error(
    s: np.ndarray,
    rir: Rir,
    config: StftConfig,
    l: int,
    filters: Optional[CrossbandFilters] = None,
) -> float:
    """Relative error of the radius-l cross-band model against true convolution.

    ||stft(s*a) - apply(stft(s))||_F / ||stft(s*a)||_F over the common
    frame support. Non-increasing in l; at full radius it collapses to
    floating noise (the module's master oracle).
    """
    s = np.asarray(s, dtype=np.float64)
    if s.size < config.fs:
        raise ValueError("need at least one second of probe signal")
    if filters is None:
        filters = crossband_filters(rir, config, l)
    elif filters.l != l:
        filters = filters.truncated(l)
    ref, fil = _reference_and_filtered(s, rir, config, filters)
    return float(np.linalg.norm(ref - fil) / np.linalg.norm(ref))


def narrowband_transfer(rir: Rir, config: StftConfig) -> np.ndarray:
    """Per-band multiplicative transfer A(k): the alias-folded one-sided DFT
    of the impulse response at the STFT's FFT length."""
    Nf = config.fft_len
    a = rir.samples
    n_blocks = -(-a.size // Nf)
    folded = np.zeros(n_blocks * Nf, dtype=np.float64)
    folded[: a.size] = a
    folded = folded.reshape(n_blocks, Nf).sum(axis=0)
    return np.fft.rfft(folded)


def narrowband_error(s: np.ndarray, rir: Rir, config: StftConfig) -> float:
    """Relative error of the memoryless per-band model Y ~= A(k) * X.

    Large whenever the response is long compared to the analysis window;
    small only for responses much shorter than a hop.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.size < config.fs:
        raise ValueError("need at least one second of probe signal")
    source = stft(s, config, pad_mode="zero")
    reference = stft(fftconvolve(s, rir.samples), config, pad_mode="zero")
    A = narrowband_transfer(rir, config)
    approx = A[:, None] * source.coeffs
    P = min(reference.n_frames, approx.shape[1])
    ref = reference.coeffs[:, :P]
    return float(np.linalg.norm(ref - approx[:, :P]) / np.linalg.norm(ref))


# ---------------------------------------------------------------------------
# tensor file format (same envelope as .ftm, complex payload)
# ---------------------------------------------------------------------------

def write_crossband_file(path: str, filters: CrossbandFilters) -> None:
    """Serialize the filter tensor: one JSON header line, then K*(2l+1)*L
    complex values as interleaved little-endian float32 (re, im) pairs."""
    k, d, L = filters.taps.shape
    header = {
        "dims": [int(k), int(d), int(L)],
        "dtype": "c8",
        "byte_order": "little",
        "layout": "row-major",
        "l": int(filters.l),
        "L": int(filters.L),
        "lag_offset": int(filters.lag_offset),
        "config": filters.config.to_dict(),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(filters.taps, dtype="<c8").tobytes())


def read_crossband_file(path: str) -> CrossbandFilters:
    """Inverse of write_crossband_file (float32 precision)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("dtype") != "c8" or header.get("byte_order") != "little":
        raise ValueError(f"{path}: unsupported tensor encoding")
    k, d, L = header["dims"]
    expected = 8 * k * d * L
    if len(payload) != expected:
        raise ValueError(f"{path}: payload holds {len(payload)} bytes, expected {expected}")
    taps = np.frombuffer(payload, dtype="<c8").reshape(k, d, L).astype(np.complex128)
    return CrossbandFilters(
        taps=taps,
        l=int(header["l"]),
        L=int(header["L"]),
        lag_offset=int(header["lag_offset"]),
        config=StftConfig.from_dict(header["config"]),
    )
