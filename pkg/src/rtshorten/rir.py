"""Room impulse response synthesis and target-shortening windows.

The core idea: a reverberant RIR decays (roughly) exponentially with a
rate set by its T60. Multiplying the RIR by a second exponential window
that is flat up to the direct path and decays at rate q beyond it yields
a response that is still exponential but with a shorter reverberation
time. The decay rates add, so the window needed to move a response from
T60 to a target T'60 is::

    q = 3 / (T'60 * fs) - 3 / (T60 * fs)      [per sample, in log10 units]

because a response with per-sample rate p (amplitude 10^(-p*n)) has
T60 = 3 / (p * fs) -- 60 dB is a factor 10^3 in amplitude.

Window families
---------------
- "rts":          flat, then 10^(-q (n - N1)) with q as above.
- "direct_path":  flat up to the direct-path end, zero after.
- "early":        flat up to direct path + early_ms, zero after.
- "const_exp":    flat, then 10^(-q_const (n - N1)) with a fixed rate.

All four are 1 on [0, N1] where N1 is the direct-path end: the peak
index plus a small guard (default 0.5 ms) that absorbs the few samples
over which real measured responses smear their direct path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

WINDOW_KINDS = ("direct_path", "early", "rts", "const_exp")


@dataclass
class Rir:
    """A sampled room impulse response.

    Attributes
    ----------
    samples : np.ndarray
        Amplitude sequence, float64, non-empty.
    fs : int
        Sample rate in Hz, > 0.
    n1 : int
        Direct-path sample index (the arrival peak), 0 <= n1 < len.
    t60_nominal : float, optional
        Reverberation time in seconds when known (e.g. from synthesis).
    """

    samples: np.ndarray
    fs: int
    n1: int
    t60_nominal: Optional[float] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("Rir.samples must be a non-empty 1-D sequence")
        if self.fs <= 0:
            raise ValueError(f"Rir.fs must be positive, got {self.fs}")
        if not (0 <= self.n1 < self.samples.size):
            raise ValueError(
                f"Rir.n1 = {self.n1} out of range for length {self.samples.size}"
            )

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class WindowSpec:
    """Parameters of one target-shortening window family.

    kind : one of "direct_path", "early", "rts", "const_exp"
    early_ms : early-reflection span kept by the "early" kind (ms)
    target_t60 : target reverberation time for "rts" (s)
    q_const : fixed per-sample decay rate for "const_exp" (>= 0)
    guard_ms : flat extension past the peak, applied to every kind (ms)
    """

    kind: str
    early_ms: float = 50.0
    target_t60: Optional[float] = None
    q_const: Optional[float] = None
    guard_ms: float = 0.5

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise ValueError(f"unknown window kind {self.kind!r}; expected one of {WINDOW_KINDS}")
        if self.early_ms <= 0:
            raise ValueError("early_ms must be positive")
        if self.kind == "rts" and self.target_t60 is not None and self.target_t60 <= 0:
            raise ValueError("target_t60 must be positive")
        if self.kind == "const_exp":
            if self.q_const is None:
                raise ValueError("const_exp window requires q_const")
            if self.q_const < 0:
                raise ValueError("q_const must be >= 0")
        if self.guard_ms < 0:
            raise ValueError("guard_ms must be >= 0")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "guard_ms": self.guard_ms}
        if self.kind == "early":
            d["early_ms"] = self.early_ms
        if self.kind == "rts":
            d["target_t60"] = self.target_t60
        if self.kind == "const_exp":
            d["q_const"] = self.q_const
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WindowSpec":
        known = {"kind", "early_ms", "target_t60", "q_const", "guard_ms"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown WindowSpec keys: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class PolackParams:
    """Parameters of the stochastic exponential-tail RIR model.

    The synthesized response is a single direct-path impulse followed by
    zero-mean Gaussian noise under an exponential envelope::

        a(n1) = direct_gain
        a(n)  = b(n) * reverb_gain * 10^(-p (n - n1)),  n > n1

    with p = 3 / (t60 * fs) and b(n) ~ N(0, 1).

    reverb_gain = None (default) picks the gain that makes the expected
    tail energy equal the direct-path energy (a 0 dB direct-to-reverberant
    ratio): reverb_gain = direct_gain * sqrt((1 - r) / r), r = 10^(-2p).
    """

    t60: float
    duration: float
    direct_delay: float = 0.0
    direct_gain: float = 1.0
    reverb_gain: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.t60 <= 0:
            raise ValueError("t60 must be positive")
        if self.duration < self.direct_delay:
            raise ValueError("duration must be >= direct_delay")
        if self.direct_gain <= 0:
            raise ValueError("direct_gain must be positive")
        if self.reverb_gain is not None and self.reverb_gain < 0:
            raise ValueError("reverb_gain must be >= 0")


def detect_direct_path(rir: Union[Rir, np.ndarray]) -> int:
    """Index of the strongest arrival: argmax of |samples|, first on ties."""
    samples = rir.samples if isinstance(rir, Rir) else np.asarray(rir, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("empty RIR")
    if not np.any(samples):
        raise ValueError("all-zero RIR has no direct path")
    return int(np.argmax(np.abs(samples)))


def decay_rate_q(t60_orig: float, t60_target: float, fs: float) -> float:
    """Per-sample window decay rate moving a response from t60_orig to t60_target.

    Returns 3/(t60_target*fs) - 3/(t60_orig*fs). Positive iff the target
    time is shorter. A negative result (target longer than original)
    means the window would *grow*; it is returned as-is with a warning.
    """
    if t60_orig <= 0 or t60_target <= 0 or fs <= 0:
        raise ValueError("t60_orig, t60_target and fs must all be positive")
    q = 3.0 / (t60_target * fs) - 3.0 / (t60_orig * fs)
    if q < 0:
        warnings.warn(
            "target T60 exceeds original T60: q is negative and the window grows",
            RuntimeWarning,
            stacklevel=2,
        )
    return q


def _anchor_index(rir: Rir, spec: WindowSpec) -> int:
    """Direct-path end: peak index plus the guard, clipped to the last sample."""
    guard = int(round(spec.guard_ms * 1e-3 * rir.fs))
    return min(rir.n1 + guard, len(rir) - 1)


def build_window(spec: WindowSpec, rir: Rir, t60: Optional[float] = None) -> np.ndarray:
    """Construct the shortening window for ``rir``, same length as the RIR.

    Every kind is exactly 1 on [0, N1] with N1 the direct-path end
    (peak + guard). Beyond N1:

    - rts:         10^(-q m), m = n - N1, q from decay_rate_q
    - const_exp:   10^(-q_const m)
    - direct_path: 0
    - early:       1 until n1 + round(early_ms*fs/1000) + guard, then 0

    Parameters
    ----------
    t60 : float, optional
        Source reverberation time for the "rts" kind; overrides
        rir.t60_nominal. Required (one of the two) for "rts".
    """
    n = len(rir)
    n1_eff = _anchor_index(rir, spec)
    win = np.ones(n, dtype=np.float64)

    if spec.kind == "direct_path":
        win[n1_eff + 1:] = 0.0
    elif spec.kind == "early":
        early = int(round(spec.early_ms * 1e-3 * rir.fs))
        guard = int(round(spec.guard_ms * 1e-3 * rir.fs))
        boundary = rir.n1 + early + guard
        win[boundary + 1:] = 0.0
    elif spec.kind == "rts":
        if spec.target_t60 is None:
            raise ValueError("rts window requires target_t60")
        t60_src = t60 if t60 is not None else rir.t60_nominal
        if t60_src is None:
            raise ValueError(
                "rts window needs the source T60: set rir.t60_nominal, pass t60=..., "
                "or supply a blind estimate (see acoustics.estimate_t60)"
            )
        q = decay_rate_q(t60_src, spec.target_t60, rir.fs)
        m = np.arange(1, n - n1_eff, dtype=np.float64)
        win[n1_eff + 1:] = 10.0 ** (-q * m)
    elif spec.kind == "const_exp":
        m = np.arange(1, n - n1_eff, dtype=np.float64)
        win[n1_eff + 1:] = 10.0 ** (-spec.q_const * m)
    else:  # pragma: no cover - guarded by WindowSpec validation
        raise ValueError(f"unknown window kind {spec.kind!r}")
    return win


def shorten_rir(rir: Rir, spec: WindowSpec, t60: Optional[float] = None) -> Rir:
    """Apply the shortening window: returns w(n) * a(n), same length and n1.

    For the "rts" kind the output's t60_nominal is the target time (the
    product of exponentials decays at the summed rate); for "const_exp"
    it is derived from the source T60 when known; the truncating kinds
    ("direct_path", "early") leave it unset.
    """
    win = build_window(spec, rir, t60=t60)
    out = rir.samples * win
    if spec.kind == "rts":
        t60_out: Optional[float] = spec.target_t60
    elif spec.kind == "const_exp" and (t60 is not None or rir.t60_nominal is not None):
        t60_src = t60 if t60 is not None else rir.t60_nominal
        p_out = 3.0 / (t60_src * rir.fs) + spec.q_const
        t60_out = 3.0 / (p_out * rir.fs)
    else:
        t60_out = None
    return Rir(samples=out, fs=rir.fs, n1=rir.n1, t60_nominal=t60_out)


def synth_polack_rir(params: PolackParams, fs: int) -> Rir:
    """Synthesize a stochastic exponential-tail RIR.

    The direct path is a single impulse of amplitude direct_gain at
    n1 = round(direct_delay * fs); samples before n1 are zero (no
    pre-ringing); samples after follow the Gaussian-times-envelope model
    with p = 3/(t60*fs). The Gaussian sequence comes from numpy's
    default_rng (PCG64) seeded with params.seed, so outputs are
    bit-reproducible for a fixed seed.
    """
    if fs <= 0:
        raise ValueError("fs must be positive")
    n1 = int(round(params.direct_delay * fs))
    length = int(round(params.duration * fs))
    if length <= n1:
        length = n1 + 1  # always room for the direct impulse
    p = 3.0 / (params.t60 * fs)

    if params.reverb_gain is None:
        r = 10.0 ** (-2.0 * p)
        reverb_gain = params.direct_gain * np.sqrt((1.0 - r) / r)
    else:
        reverb_gain = params.reverb_gain

    samples = np.zeros(length, dtype=np.float64)
    samples[n1] = params.direct_gain
    n_tail = length - n1 - 1
    if n_tail > 0 and reverb_gain != 0.0:
        rng = np.random.default_rng(params.seed)
        b = rng.standard_normal(n_tail)
        m = np.arange(1, n_tail + 1, dtype=np.float64)
        samples[n1 + 1:] = b * reverb_gain * 10.0 ** (-p * m)

    return Rir(samples=samples, fs=int(fs), n1=n1, t60_nominal=params.t60)
