"""Deterministic paired-utterance corpus generation.

Each manifest entry turns one speech file into a training pair: the input
is speech convolved with a room response plus noise at a prescribed SNR,
the target is the same speech convolved with the window-shortened
response. Both sides are truncated to the segment length so they align
sample-for-sample.

Reproducibility conventions (the whole module is built around them):

- Sampling rate is fixed at 16 kHz.
- Per-entry randomness derives from SeedSequence([entry.seed, H(utt_id)])
  where H is the first 8 bytes of sha256(utt_id), little-endian; the
  sequence is spawned into independent (rir, noise) streams. Entries are
  therefore order-independent and safe to build in parallel.
- SNR is referenced to the full-segment mean square of the REVERBERANT
  speech (not the dry speech); the choice is recorded in each metadata
  sidecar since conventions vary.
- All JSON output is canonical (sorted keys, fixed separators) and WAVs
  are written as float32, so rebuilding a manifest is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.signal import fftconvolve

from .acoustics import estimate_t60, schroeder_edc
from .audio_io import read_wav, write_wav
from .rir import PolackParams, Rir, WindowSpec, detect_direct_path, shorten_rir, synth_polack_rir

FS = 16000

_UTT_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")
_NOISE_KINDS = ("white", "pink")


@dataclass
class ManifestEntry:
    utt_id: str
    speech_path: str
    rir_id: str
    window_spec: WindowSpec
    snr_db: float
    segment_s: float = 3.0
    seed: int = 0
    noise_kind: str = "pink"

    def __post_init__(self):
        if not _UTT_ID_RE.match(self.utt_id):
            raise ValueError(f"utt_id {self.utt_id!r} is not a safe file stem")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.segment_s <= 0:
            raise ValueError("segment_s must be positive")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")
        if self.noise_kind not in _NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {_NOISE_KINDS}")

    def to_dict(self) -> dict:
        return {
            "utt_id": self.utt_id,
            "speech_path": self.speech_path,
            "rir_id": self.rir_id,
            "window_spec": self.window_spec.to_dict(),
            "snr_db": float(self.snr_db),
            "segment_s": float(self.segment_s),
            "seed": int(self.seed),
            "noise_kind": self.noise_kind,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        known = {
            "utt_id", "speech_path", "rir_id", "window_spec",
            "snr_db", "segment_s", "seed", "noise_kind",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
        missing = {"utt_id", "speech_path", "rir_id", "window_spec", "snr_db"} - set(d)
        if missing:
            raise ValueError(f"missing manifest keys: {sorted(missing)}")
        kwargs = dict(d)
        kwargs["window_spec"] = WindowSpec.from_dict(d["window_spec"])
        return cls(**kwargs)


@dataclass
class TrainingPair:
    """Aligned (input, target) signals plus the provenance needed to group
    them by condition later."""

    input: np.ndarray
    target: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.input.shape != self.target.shape:
            raise ValueError("input and target must have identical length")


def read_manifest(path: str) -> list[ManifestEntry]:
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = ManifestEntry.from_dict(json.loads(line))
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from exc
            if entry.utt_id in seen:
                raise ValueError(f"{path}:{line_no}: duplicate utt_id {entry.utt_id!r}")
            seen.add(entry.utt_id)
            entries.append(entry)
    return entries


def write_manifest(path: str, entries: list[ManifestEntry]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_dict(), sort_keys=True, separators=(",", ":")))
            fh.write("\n")


# ---------------------------------------------------------------------------
# signal-level operations
# ---------------------------------------------------------------------------

def convolve(signal: np.ndarray, rir: Union[Rir, np.ndarray]) -> np.ndarray:
    """FFT-based linear convolution truncated to the input length.

    Truncation (rather than keeping the len(s)+len(a)-1 tail) is what lets
    input and target renders of the same speech align sample-for-sample.
    """
    samples = rir.samples if isinstance(rir, Rir) else np.asarray(rir, dtype=np.float64)
    signal = np.asarray(signal, dtype=np.float64)
    if signal.size == 0 or samples.size == 0:
        raise ValueError("convolve needs non-empty signal and rir")
    return fftconvolve(signal, samples)[: signal.size]


def _fit_length(noise: np.ndarray, n: int) -> np.ndarray:
    if noise.size >= n:
        return noise[:n]
    reps = -(-n // noise.size)
    return np.tile(noise, reps)[:n]


def mix_at_snr(reverberant: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    """Add noise scaled to sit snr_db below the reverberant signal's power.

    Power is the mean square over the full segment. The scale is
    sqrt(P_rev / P_noise) * 10^(-snr_db/20), which makes the achieved SNR
    exact by construction; snr_db = +inf degenerates to a clean copy.
    """
    reverberant = np.asarray(reverberant, dtype=np.float64)
    noise = _fit_length(np.asarray(noise, dtype=np.float64), reverberant.size)
    p_rev = float(np.mean(reverberant**2))
    p_noise = float(np.mean(noise**2))
    if p_rev == 0.0 or p_noise == 0.0:
        raise ValueError("mix_at_snr needs nonzero-energy inputs")
    scale = math.sqrt(p_rev / p_noise) * 10.0 ** (-snr_db / 20.0)
    return reverberant + scale * noise


def make_pair(
    speech: np.ndarray,
    rir: Rir,
    spec: WindowSpec,
    snr_db: float,
    noise: np.ndarray,
    rir_id: str = "",
) -> TrainingPair:
    """Render one training pair: noisy reverberant input, shortened target."""
    reverberant = convolve(speech, rir)
    shortened = shorten_rir(rir, spec)
    target = convolve(speech, shortened)
    mixed = mix_at_snr(reverberant, noise, snr_db)
    return TrainingPair(
        input=mixed,
        target=target,
        metadata={
            "rir_id": rir_id,
            "snr_db": float(snr_db),
            "window_spec": spec.to_dict(),
            "n1": int(rir.n1),
        },
    )


# ---------------------------------------------------------------------------
# synthetic sources
# ---------------------------------------------------------------------------

def synth_noise(kind: str, duration: float, seed: int, fs: int = FS) -> np.ndarray:
    """Stationary noise, unit RMS. 'pink' is FFT-shaped 1/sqrt(f) white noise:
    mean power per octave band falls by 3 dB per octave."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    if kind not in _NOISE_KINDS:
        raise ValueError(f"unknown noise kind {kind!r}")
    n = int(round(duration * fs))
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n)
    if kind == "white":
        return white
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    shape = np.zeros_like(freqs)
    shape[1:] = 1.0 / np.sqrt(freqs[1:])
    pink = np.fft.irfft(spectrum * shape, n=n)
    return pink / math.sqrt(float(np.mean(pink**2)))


def synth_speech(duration: float, seed: int, fs: int = FS) -> np.ndarray:
    """Speech-like test source: low-passed noise under a syllabic-rate
    envelope with pause-like dips. Good enough to exercise feature and
    training pipelines without shipping recordings."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = int(round(duration * fs))
    rng = np.random.default_rng(seed)
    carrier = rng.standard_normal(n)
    kernel = np.ones(12) / 12.0
    carrier = np.convolve(carrier, kernel, mode="same")
    carrier = np.convolve(carrier, kernel, mode="same")

    ctrl_rate = 25.0  # Hz, syllabic
    n_ctrl = max(int(duration * ctrl_rate) + 2, 4)
    ctrl = rng.standard_normal(n_ctrl)
    ctrl = np.convolve(ctrl, np.ones(3) / 3.0, mode="same")
    t_ctrl = np.arange(n_ctrl) / ctrl_rate
    envelope = np.interp(np.arange(n) / fs, t_ctrl, ctrl)
    envelope = 0.08 + np.clip(envelope, 0.0, None) ** 2

    out = carrier * envelope
    return 0.5 * out / float(np.max(np.abs(out)))


def _crop_or_pad(x: np.ndarray, n: int) -> np.ndarray:
    if x.size >= n:
        return x[:n]
    return np.pad(x, (0, n - x.size))


def _hash64(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def _entry_seeds(entry: ManifestEntry) -> tuple[int, int]:
    root = np.random.SeedSequence([entry.seed, _hash64(entry.utt_id)])
    rir_ss, noise_ss = root.spawn(2)
    return (
        int(rir_ss.generate_state(1, np.uint64)[0]),
        int(noise_ss.generate_state(1, np.uint64)[0]),
    )


def _realize_rir(rir_id: str, seed: int) -> Rir:
    """A rir_id is either a WAV path or a 'polack:k=v,...' descriptor whose
    tail noise is drawn from the entry's own stream."""
    if rir_id.startswith("polack:"):
        params: dict = {}
        for item in rir_id[len("polack:"):].split(","):
            key, _, value = item.partition("=")
            if not _:
                raise ValueError(f"malformed rir descriptor item {item!r}")
            params[key.strip()] = float(value)
        allowed = {"t60", "duration", "direct_delay", "direct_gain", "reverb_gain"}
        unknown = set(params) - allowed
        if unknown:
            raise ValueError(f"unknown rir descriptor keys: {sorted(unknown)}")
        if "t60" not in params:
            raise ValueError("rir descriptor needs t60")
        params.setdefault("duration", params["t60"])
        return synth_polack_rir(PolackParams(seed=seed, **params), FS)
    fs, samples = read_wav(rir_id)
    if fs != FS:
        raise ValueError(f"{rir_id}: expected {FS} Hz, got {fs}")
    rir = Rir(samples=samples.astype(np.float64), fs=fs, n1=detect_direct_path(samples))
    # measured responses carry no nominal decay time; the blind estimate
    # feeds the windows that need one (rts, const_exp)
    rir.t60_nominal = estimate_t60(schroeder_edc(rir))
    return rir


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":")))
        fh.write("\n")


def _build_entry(entry_dict: dict, out_dir: str) -> dict:
    entry = ManifestEntry.from_dict(entry_dict)
    fs, speech = read_wav(entry.speech_path)
    if fs != FS:
        raise ValueError(f"{entry.speech_path}: expected {FS} Hz, got {fs}")
    n = int(round(entry.segment_s * FS))
    speech = _crop_or_pad(speech.astype(np.float64), n)

    rir_seed, noise_seed = _entry_seeds(entry)
    rir = _realize_rir(entry.rir_id, rir_seed)
    noise = synth_noise(entry.noise_kind, entry.segment_s, noise_seed)
    pair = make_pair(speech, rir, entry.window_spec, entry.snr_db, noise, rir_id=entry.rir_id)

    write_wav(os.path.join(out_dir, "input", entry.utt_id + ".wav"), FS, pair.input)
    write_wav(os.path.join(out_dir, "target", entry.utt_id + ".wav"), FS, pair.target)
    meta = dict(pair.metadata)
    meta.update(
        {
            "utt_id": entry.utt_id,
            "speech_path": entry.speech_path,
            "segment_s": float(entry.segment_s),
            "seed": int(entry.seed),
            "noise_kind": entry.noise_kind,
            "snr_reference": "reverberant",
        }
    )
    _write_json(os.path.join(out_dir, "meta", entry.utt_id + ".json"), meta)
    return meta


def build_dataset(
    manifest: Union[str, list[ManifestEntry]], out_dir: str, jobs: int = 1
) -> dict:
    """Render every manifest entry under out_dir/{input,target,meta}.

    Per-entry failures are collected into the report instead of aborting;
    the build raises only if nothing could be built. Serial and parallel
    runs produce byte-identical trees (entries share no state).
    """
    entries = read_manifest(manifest) if isinstance(manifest, str) else list(manifest)
    ids = [e.utt_id for e in entries]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate utt_ids in manifest")
    if not entries:
        raise ValueError("empty manifest")

    for sub in ("input", "target", "meta"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)

    results: list[Optional[dict]] = [None] * len(entries)
    failures: dict[str, str] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_build_entry, entry.to_dict(), out_dir) for entry in entries
            ]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except Exception as exc:
                    failures[entries[i].utt_id] = str(exc)
    else:
        for i, entry in enumerate(entries):
            try:
                results[i] = _build_entry(entry.to_dict(), out_dir)
            except Exception as exc:
                failures[entry.utt_id] = str(exc)

    by_window: dict[str, int] = {}
    by_rir: dict[str, int] = {}
    by_snr: dict[str, int] = {}
    for entry, meta in zip(entries, results):
        if meta is None:
            continue
        kind = entry.window_spec.kind
        by_window[kind] = by_window.get(kind, 0) + 1
        by_rir[entry.rir_id] = by_rir.get(entry.rir_id, 0) + 1
        snr_key = f"{entry.snr_db:g}"
        by_snr[snr_key] = by_snr.get(snr_key, 0) + 1

    report = {
        "n_entries": len(entries),
        "n_ok": len(entries) - len(failures),
        "n_failed": len(failures),
        "failures": failures,
        "by_window": by_window,
        "by_rir": by_rir,
        "by_snr": by_snr,
    }
    _write_json(os.path.join(out_dir, "build_report.json"), report)
    if entries and len(failures) == len(entries):
        raise RuntimeError(f"all {len(entries)} entries failed; first: {next(iter(failures.values()))}")
    return report
