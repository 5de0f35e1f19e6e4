"""Corpus plumbing: toolkit CLI runs, toy speech, and feature loading.

Everything acoustic — dataset rendering, STFT features, metric
evaluation — happens inside the ``rtshorten`` executable; this module
only writes the files it consumes (speech WAVs, JSON-lines manifests)
and reads the ".ftm" matrices it emits.
"""

import json
import os
import subprocess
from dataclasses import dataclass, field
from glob import glob
from typing import Optional

import numpy as np
from scipy.io import wavfile
from scipy.signal import lfilter

from .ftm import read_ftm

FS = 16000


def run_toolkit(args: list) -> dict:
    """Run one ``rtshorten`` command and return its JSON summary.

    The toolkit prints a single JSON object on stdout (an error object on
    failure), so a nonzero exit is surfaced with whichever of the two
    streams carries the diagnostic.
    """
    cmd = ["rtshorten"] + [str(a) for a in args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        detail = proc.stdout.strip() or proc.stderr.strip()
        raise RuntimeError(f"`{' '.join(cmd)}` exited {proc.returncode}: {detail}")
    return json.loads(proc.stdout)


def toy_speech(duration: float, seed: int, fs: int = FS) -> np.ndarray:
    """Speech-shaped test audio: noise through three damped resonators
    under a slow random amplitude modulation, peak 0.5."""
    n = int(round(duration * fs))
    if n < 1:
        raise ValueError("duration must cover at least one sample")
    rng = np.random.default_rng(seed)
    excitation = rng.standard_normal(n)
    voiced = np.zeros(n)
    for freq, bandwidth, gain in ((450.0, 90.0, 1.0), (1400.0, 140.0, 0.6), (2600.0, 220.0, 0.35)):
        r = np.exp(-np.pi * bandwidth / fs)
        theta = 2.0 * np.pi * freq / fs
        voiced += gain * lfilter([1.0], [1.0, -2.0 * r * np.cos(theta), r * r], excitation)
    # syllable-rate modulation: one-pole lowpassed noise, rectified
    alpha = np.exp(-2.0 * np.pi * 4.0 / fs)
    control = lfilter([1.0 - alpha], [1.0, -alpha], rng.standard_normal(n))
    envelope = np.abs(control)
    envelope /= envelope.max() + 1e-12
    out = voiced * (0.15 + 0.85 * envelope)
    return 0.5 * out / (np.max(np.abs(out)) + 1e-12)


def write_speech_wav(path: str, samples: np.ndarray, fs: int = FS) -> None:
    wavfile.write(path, fs, np.asarray(samples, dtype=np.float32))


@dataclass
class Corpus:
    """Paired (input, target) feature matrices, aligned by utterance."""

    utt_ids: list = field(default_factory=list)
    inputs: list = field(default_factory=list)
    targets: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.utt_ids)

    def subset(self, utt_ids) -> "Corpus":
        wanted = list(utt_ids)
        index = {u: i for i, u in enumerate(self.utt_ids)}
        missing = [u for u in wanted if u not in index]
        if missing:
            raise KeyError(f"utterances not in corpus: {missing}")
        rows = [index[u] for u in wanted]
        return Corpus(
            utt_ids=wanted,
            inputs=[self.inputs[i] for i in rows],
            targets=[self.targets[i] for i in rows],
        )


def load_corpus(input_dir: str, target_dir: str) -> Corpus:
    """Pair input/target feature files by stem; every input needs a target."""
    input_paths = sorted(glob(os.path.join(input_dir, "*.ftm")))
    if not input_paths:
        raise ValueError(f"no feature files under {input_dir}")
    corpus = Corpus()
    for path in input_paths:
        stem = os.path.splitext(os.path.basename(path))[0]
        target_path = os.path.join(target_dir, stem + ".ftm")
        if not os.path.exists(target_path):
            raise FileNotFoundError(f"no target features for {stem!r} under {target_dir}")
        x, _ = read_ftm(path)
        y, _ = read_ftm(target_path)
        if x.shape != y.shape:
            raise ValueError(f"{stem}: input {x.shape} vs target {y.shape}")
        corpus.utt_ids.append(stem)
        corpus.inputs.append(x)
        corpus.targets.append(y)
    return corpus


def write_manifest(path: str, rows: list) -> None:
    """JSON-lines manifest in the toolkit's schema; rows pass through as-is."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def build_feature_corpus(
    root: str,
    window: dict,
    speech_paths: list,
    *,
    t60: float = 0.5,
    snr_db: float = 20.0,
    segment_s: float = 0.7,
    base_seed: int = 0,
    jobs: int = 1,
) -> dict:
    """Render one windowed-target dataset and extract features for it.

    Entries are keyed by the speech file stem and seeded by position, so
    two calls differing only in `window` produce sample-aligned corpora:
    same rooms, same noise, different targets. Returns the directory map
    {"dataset", "input", "target"} where the last two hold ".ftm" files.
    """
    os.makedirs(root, exist_ok=True)
    rows = []
    for i, speech_path in enumerate(speech_paths):
        stem = os.path.splitext(os.path.basename(speech_path))[0]
        rows.append(
            {
                "utt_id": stem,
                "speech_path": speech_path,
                "rir_id": f"polack:t60={t60:g}",
                "window_spec": dict(window),
                "snr_db": float(snr_db),
                "segment_s": float(segment_s),
                "seed": base_seed + i,
            }
        )
    manifest = os.path.join(root, "manifest.jsonl")
    write_manifest(manifest, rows)

    dataset = os.path.join(root, "dataset")
    run_toolkit(["build-dataset", "--manifest", manifest, "--out", dataset, "--jobs", jobs])

    dirs = {"dataset": dataset}
    for split in ("input", "target"):
        wavs = sorted(glob(os.path.join(dataset, split, "*.wav")))
        out_dir = os.path.join(root, f"ftm_{split}")
        run_toolkit(["features", *wavs, "--out-dir", out_dir])
        dirs[split] = out_dir
    return dirs
