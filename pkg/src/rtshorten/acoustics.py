"""Energy-decay analysis: Schroeder EDC, blind T60, residual-RIR identification.

The energy decay curve of an impulse response is the reverse cumulative
energy EDC(n) = sum_{n' >= n} a(n')^2 (the Schroeder backward integral).
On a dB scale an exponentially decaying response turns into a straight
line, so T60 falls out of a least-squares line fit: we fit over the
(-5, -25) dB span and extrapolate to -60 dB (the usual "T20" convention;
the range is configurable), giving T60 = -60 / (slope * fs).

The residual response left in an enhanced signal x~(n) relative to the
clean source s(n) is identified by regularized frequency-domain
deconvolution::

    a~ = Re IDFT[ DFT(x~) conj(DFT(s)) / (|DFT(s)|^2 + eps * max|DFT(s)|^2) ]

with both signals zero-padded to a common FFT length covering the full
linear convolution. eps = 0 reproduces the plain spectral ratio; the
small default (1e-8) keeps near-nulls of real spectra from blowing up.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
import scipy.fft
from scipy.stats import linregress

from .rir import Rir


class InsufficientDecayError(ValueError):
    """The EDC does not decay far enough to support the requested fit."""


@dataclass
class Edc:
    """Schroeder energy decay curve.

    values[n] is the energy remaining from sample n onward; values[0] is
    the total energy. ``db`` is the curve normalized to its start on a
    decibel scale (0 at n = 0, -inf where the remaining energy is zero).
    """

    values: np.ndarray
    fs: int

    @property
    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.values / self.values[0])


@dataclass
class ResidualRir:
    """Deconvolved residual impulse response (length = the analysis FFT length)."""

    samples: np.ndarray
    fs: int
    regularization: float

    def truncated(self, seconds: float = 1.0) -> "ResidualRir":
        """Copy truncated to the analysis length used before EDC fitting."""
        n = min(len(self.samples), int(round(seconds * self.fs)))
        if n < 1:
            raise ValueError("truncation length must cover at least one sample")
        return ResidualRir(self.samples[:n].copy(), self.fs, self.regularization)


def schroeder_edc(rir: Union[Rir, np.ndarray], fs: int = None) -> Edc:
    """Reverse cumulative energy of an impulse response.

    Accepts a ``Rir`` or a bare array (then ``fs`` is required). Raises on
    an all-zero input because the normalized dB curve would be undefined.
    """
    if isinstance(rir, Rir):
        samples, fs = rir.samples, rir.fs
    else:
        samples = np.asarray(rir, dtype=np.float64)
        if fs is None:
            raise ValueError("fs is required when passing a bare array")
    if samples.size == 0:
        raise ValueError("empty RIR")
    energy = samples * samples
    values = np.cumsum(energy[::-1])[::-1]
    if values[0] == 0.0:
        raise ValueError("all-zero RIR: EDC undefined")
    return Edc(values=values, fs=int(fs))


def estimate_t60(edc: Edc, fit_range_db: Tuple[float, float] = (-5.0, -25.0)) -> float:
    """Blind T60 from a least-squares line fit to the dB decay curve.

    The fit runs over all samples whose normalized level lies inside
    ``fit_range_db`` (order-insensitive; default -5 to -25 dB), and the
    fitted slope (dB/sample) is extrapolated to the full 60 dB decay:
    T60 = -60 / (slope * fs).

    Raises InsufficientDecayError when the curve never reaches the lower
    bound or the fit span holds fewer than two samples (e.g. a bare
    impulse, whose EDC drops from 0 dB straight to -inf).
    """
    hi, lo = max(fit_range_db), min(fit_range_db)
    db = edc.db
    if not np.any(db <= lo):
        raise InsufficientDecayError(
            f"EDC never reaches {lo} dB (min {db.min():.1f} dB); "
            "use a longer response or a narrower fit range"
        )
    mask = (db <= hi) & (db >= lo)
    idx = np.nonzero(mask)[0]
    if idx.size < 2:
        raise InsufficientDecayError(
            f"fewer than two EDC samples inside [{lo}, {hi}] dB"
        )
    fit = linregress(idx.astype(np.float64), db[idx])
    if not (fit.slope < 0):
        raise InsufficientDecayError("EDC fit slope is not negative")
    return -60.0 / (fit.slope * edc.fs)


def identify_remaining_rir(
    enhanced: np.ndarray,
    clean: np.ndarray,
    fs: int,
    epsilon: float = 1e-8,
    fft_len: int = None,
) -> ResidualRir:
    """Deconvolve the residual impulse response of ``enhanced`` w.r.t. ``clean``.

    Both signals are zero-padded to a common FFT length (at least
    len(enhanced) + len(clean) - 1, rounded up to an FFT-friendly size);
    the returned residual has exactly that length. ``epsilon`` scales the
    Tikhonov floor eps * max|DFT(clean)|^2 added to the denominator;
    epsilon = 0 is the unregularized spectral ratio.
    """
    enhanced = np.asarray(enhanced, dtype=np.float64)
    clean = np.asarray(clean, dtype=np.float64)
    if enhanced.size == 0 or clean.size == 0:
        raise ValueError("empty signal")
    if not np.any(clean):
        raise ValueError("clean signal has zero energy")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    min_len = enhanced.size + clean.size - 1
    n = int(fft_len) if fft_len is not None else scipy.fft.next_fast_len(min_len)
    if n < min_len:
        raise ValueError(f"fft_len {n} below the linear-convolution length {min_len}")
    x = np.fft.fft(enhanced, n)
    s = np.fft.fft(clean, n)
    s_pow = np.abs(s) ** 2
    denom = s_pow + epsilon * s_pow.max()
    residual = np.real(np.fft.ifft(x * np.conj(s) / denom))
    return ResidualRir(samples=residual, fs=int(fs), regularization=float(epsilon))


def edc_report(rirs: Sequence[Tuple[str, Union[Rir, np.ndarray]]], fs: int = None) -> dict:
    """Time-aligned normalized dB decay curves for a set of labeled responses.

    Returns {"time_s": array, "curves": {label: db array}}; all curves
    start at 0 dB, shorter curves are NaN-padded to the longest. Feed
    the result to ``csv`` writers or plotting as-is.
    """
    if len(rirs) == 0:
        raise ValueError("need at least one labeled RIR")
    curves = {}
    fs_out = None
    for label, rir in rirs:
        edc = schroeder_edc(rir, fs=fs)
        if fs_out is None:
            fs_out = edc.fs
        elif edc.fs != fs_out:
            raise ValueError("all RIRs in a report must share one sample rate")
        curves[str(label)] = edc.db
    n_max = max(c.size for c in curves.values())
    padded = {}
    for label, c in curves.items():
        if c.size < n_max:
            c = np.concatenate([c, np.full(n_max - c.size, np.nan)])
        padded[label] = c
    time_s = np.arange(n_max, dtype=np.float64) / fs_out
    return {"time_s": time_s, "curves": padded}
