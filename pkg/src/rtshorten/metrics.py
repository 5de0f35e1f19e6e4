"""Feature-domain MSE and corpus-level comparison reports.

The distance is the mean squared difference of cubic-root magnitude
features — the same domain the enhancement networks train in, so
"unprocessed MSE" (input vs target) and "enhanced MSE" (prediction vs
target) are directly comparable numbers.
"""

from __future__ import annotations

import csv
import glob
import io
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .audio_io import read_wav
from .stft import FeatureMatrix, StftConfig, features, stft


def spectral_mse(a: FeatureMatrix, b: FeatureMatrix) -> float:
    """Mean over all K*P bins of (a - b)^2. Symmetric, >= 0, 0 iff equal."""
    if a.config != b.config:
        raise ValueError("feature matrices use different STFT configs")
    if a.values.shape != b.values.shape:
        raise ValueError(
            f"feature grids differ: {a.values.shape} vs {b.values.shape}"
        )
    diff = a.values - b.values
    return float(np.mean(diff * diff))


@dataclass
class MetricReport:
    """Per-utterance MSEs plus aggregates, grouped by generation condition."""

    utterances: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    missing: list = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "utterances": self.utterances,
            "aggregates": self.aggregates,
            "missing": self.missing,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["utt_id", "condition", "mse_unprocessed", "mse_enhanced"])
        for row in self.utterances:
            enhanced = row.get("mse_enhanced")
            writer.writerow(
                [
                    row["utt_id"],
                    row["condition"],
                    f"{row['mse_unprocessed']:.12g}",
                    "" if enhanced is None else f"{enhanced:.12g}",
                ]
            )
        return buf.getvalue()


def _wav_features(path: str, config: StftConfig) -> FeatureMatrix:
    fs, samples = read_wav(path)
    if fs != config.fs:
        raise ValueError(f"{path}: sample rate {fs} does not match config fs {config.fs}")
    return features(stft(samples, config))


def _condition_label(meta: Optional[dict]) -> str:
    if not meta:
        return "unknown"
    window = meta.get("window_spec", {}).get("kind", "unknown")
    rir = meta.get("rir_id", "unknown")
    snr = meta.get("snr_db")
    snr_part = "snr?" if snr is None else f"snr{snr:g}"
    return f"{window}|{rir}|{snr_part}"


def _mean(values: list) -> Optional[float]:
    return float(np.mean(values)) if values else None


def evaluate_corpus(
    pred_dir: Optional[str],
    target_dir: str,
    input_dir: str,
    config: StftConfig,
) -> MetricReport:
    """Score a corpus tree: mse_unprocessed = d(input, target) per utterance,
    mse_enhanced = d(pred, target) when a prediction exists.

    The utterance set is defined by target_dir/*.wav. Metadata sidecars in
    the sibling ``meta`` directory (the dataset builder's layout) provide
    the condition labels for grouping. Missing counterparts are listed and
    excluded from the aggregates they cannot contribute to.
    """
    target_paths = sorted(glob.glob(os.path.join(target_dir, "*.wav")))
    if not target_paths:
        raise ValueError(f"no target WAVs under {target_dir}")
    meta_dir = os.path.join(os.path.dirname(os.path.normpath(target_dir)), "meta")

    report = MetricReport()
    for target_path in target_paths:
        utt_id = os.path.splitext(os.path.basename(target_path))[0]
        input_path = os.path.join(input_dir, utt_id + ".wav")
        if not os.path.exists(input_path):
            report.missing.append(f"input/{utt_id}.wav")
            continue

        meta = None
        meta_path = os.path.join(meta_dir, utt_id + ".json")
        if os.path.exists(meta_path):
            with open(meta_path, "r", encoding="utf-8") as fh:
                meta = json.load(fh)

        target_feats = _wav_features(target_path, config)
        input_feats = _wav_features(input_path, config)
        row = {
            "utt_id": utt_id,
            "condition": _condition_label(meta),
            "mse_unprocessed": spectral_mse(input_feats, target_feats),
            "mse_enhanced": None,
        }
        if pred_dir is not None:
            pred_path = os.path.join(pred_dir, utt_id + ".wav")
            if os.path.exists(pred_path):
                row["mse_enhanced"] = spectral_mse(
                    _wav_features(pred_path, config), target_feats
                )
            else:
                report.missing.append(f"pred/{utt_id}.wav")
        report.utterances.append(row)

    conditions = sorted({row["condition"] for row in report.utterances})
    by_condition = {}
    for cond in conditions:
        rows = [r for r in report.utterances if r["condition"] == cond]
        by_condition[cond] = {
            "n": len(rows),
            "mse_unprocessed": _mean([r["mse_unprocessed"] for r in rows]),
            "mse_enhanced": _mean(
                [r["mse_enhanced"] for r in rows if r["mse_enhanced"] is not None]
            ),
        }
    report.aggregates = {
        "overall": {
            "n": len(report.utterances),
            "mse_unprocessed": _mean([r["mse_unprocessed"] for r in report.utterances]),
            "mse_enhanced": _mean(
                [
                    r["mse_enhanced"]
                    for r in report.utterances
                    if r["mse_enhanced"] is not None
                ]
            ),
        },
        "by_condition": by_condition,
    }
    return report
