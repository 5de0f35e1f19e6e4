"""Which regression target is easier to learn?

Renders two tiny corpora from the same speech, rooms, and noise — one
with a reverberation-shortened target, one with a direct-path target —
fits the same small subband model to each, and scores held-out
utterances with the toolkit's `mse` command. The shortened target sits
much closer to the input, so its model lands at a lower enhanced error.
Writes learnability.csv. Takes about half a minute on a laptop CPU.

Requires both packages installed (`pip install -e . -e trainer`).
Run:  python demos/train_toy_models.py [--out-dir demos/out]
"""

import argparse
import csv
import os
from statistics import fmean

from subfull import ModelConfig, RunConfig, enhance_features, train, write_ftm
from subfull.data import (
    build_feature_corpus,
    load_corpus,
    run_toolkit,
    toy_speech,
    write_speech_wav,
)

N_UTTS = 32
N_TRAIN = 24


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="demos/out")
    parser.add_argument("--epochs", type=int, default=12)
    args = parser.parse_args()
    root = os.path.join(args.out_dir, "toy_training")
    os.makedirs(root, exist_ok=True)

    speech_dir = os.path.join(root, "speech")
    os.makedirs(speech_dir, exist_ok=True)
    wavs = []
    for i in range(N_UTTS):
        path = os.path.join(speech_dir, f"s{i:02d}.wav")
        write_speech_wav(path, toy_speech(0.8, seed=700 + i))
        wavs.append(path)

    windows = {
        "rts": {"kind": "rts", "target_t60": 0.15},
        "direct_path": {"kind": "direct_path"},
    }
    results = []
    for label, window in windows.items():
        print(f"[{label}] rendering corpus + features ...")
        dirs = build_feature_corpus(
            os.path.join(root, label), window, wavs, t60=0.5, snr_db=20.0, segment_s=0.7
        )
        corpus = load_corpus(dirs["input"], dirs["target"])
        train_ids = corpus.utt_ids[:N_TRAIN]
        held_out = corpus.utt_ids[N_TRAIN:]

        print(f"[{label}] training {args.epochs} epochs on {len(train_ids)} utterances ...")
        model, record = train(
            corpus.subset(train_ids),
            ModelConfig.toy("fullsubnet"),
            RunConfig(epochs=args.epochs, lr=1e-3, seed=0),
            os.path.join(root, f"run_{label}"),
            window_kind=label,
        )
        print(f"[{label}] loss {record.losses[0]:.4g} -> {record.losses[-1]:.4g}")

        held = corpus.subset(held_out)
        enhanced_dir = os.path.join(root, f"enhanced_{label}")
        os.makedirs(enhanced_dir, exist_ok=True)
        unprocessed, enhanced = [], []
        for utt_id, x in zip(held.utt_ids, held.inputs):
            pred_path = os.path.join(enhanced_dir, f"{utt_id}.ftm")
            write_ftm(pred_path, enhance_features(model, x))
            target = os.path.join(dirs["target"], f"{utt_id}.ftm")
            source = os.path.join(dirs["input"], f"{utt_id}.ftm")
            enhanced.append(run_toolkit(["mse", "--a", pred_path, "--b", target])["mse"])
            unprocessed.append(run_toolkit(["mse", "--a", source, "--b", target])["mse"])
        results.append((label, fmean(unprocessed), fmean(enhanced)))

    print(f"\n{'target':<12} {'unprocessed':>12} {'enhanced':>12}")
    for label, unproc, enh in results:
        print(f"{label:<12} {unproc:>12.4g} {enh:>12.4g}")

    out = os.path.join(args.out_dir, "learnability.csv")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "mean_unprocessed_mse", "mean_enhanced_mse"])
        for label, unproc, enh in results:
            writer.writerow([label, f"{unproc:.6g}", f"{enh:.6g}"])
    print(f"\nwrote {out}")


if __name__ == "__main__":
    main()
