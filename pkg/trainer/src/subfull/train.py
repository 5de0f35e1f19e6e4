"""Training loop: per-utterance MSE regression with seeded determinism.

One step consumes one utterance; its bands form the batch. The loss is
the mean squared error over every band and frame, the same definition
the toolkit's ``mse`` command applies to feature files, so training loss
and evaluation numbers live on one scale.
"""

import csv
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

import numpy as np
import torch

from .data import Corpus, run_toolkit
from .ftm import read_ftm, write_ftm
from .model import ModelConfig, build_model, enhance_features


@dataclass(frozen=True)
class RunConfig:
    epochs: int = 10
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


@dataclass
class TrainRun:
    """Everything a finished run leaves behind, loss curve included."""

    dataset: str
    window_kind: str
    epochs: int
    batch_utts: int
    lr: float
    seed: int
    checkpoints: list = field(default_factory=list)
    losses: list = field(default_factory=list)


def save_checkpoint(path: str, model: torch.nn.Module, config: ModelConfig) -> None:
    torch.save({"model_config": asdict(config), "state_dict": model.state_dict()}, path)


def load_checkpoint(path: str) -> torch.nn.Module:
    if not os.path.exists(path):
        raise FileNotFoundError(f"no checkpoint at {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    config = ModelConfig(**payload["model_config"])
    model = build_model(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


def write_loss_curve(path: str, losses: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "loss"])
        for i, value in enumerate(losses):
            writer.writerow([i, f"{value:.9g}"])


def train(
    corpus: Corpus,
    model_config: ModelConfig,
    run: RunConfig,
    out_dir: str,
    *,
    dataset_label: str = "",
    window_kind: str = "",
) -> Tuple[torch.nn.Module, TrainRun]:
    """Fit a model to the corpus; writes model.pt and loss.csv to out_dir.

    Deterministic for a fixed seed: the seed fixes the initial weights
    and the epoch shuffling, and training runs single-process on CPU.
    Aborts with a diagnostic if the loss leaves the reals.
    """
    if len(corpus) == 0:
        raise ValueError("empty corpus; nothing to train on")
    os.makedirs(out_dir, exist_ok=True)

    model = build_model(model_config, seed=run.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=run.lr)
    order_rng = np.random.default_rng(run.seed)
    pairs = [
        (
            torch.as_tensor(np.asarray(x, dtype=np.float32)),
            torch.as_tensor(np.asarray(y, dtype=np.float32)),
        )
        for x, y in zip(corpus.inputs, corpus.targets)
    ]

    losses = []
    model.train()
    for epoch in range(run.epochs):
        for index in order_rng.permutation(len(pairs)):
            x, y = pairs[index]
            optimizer.zero_grad()
            loss = torch.mean((model(x) - y) ** 2)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise RuntimeError(
                    f"loss became non-finite ({value}) at step {len(losses)} "
                    f"(epoch {epoch}, utterance {corpus.utt_ids[index]}); "
                    "lower the learning rate or inspect the features"
                )
            loss.backward()
            optimizer.step()
            losses.append(value)

    checkpoint = os.path.join(out_dir, "model.pt")
    save_checkpoint(checkpoint, model, model_config)
    write_loss_curve(os.path.join(out_dir, "loss.csv"), losses)
    record = TrainRun(
        dataset=dataset_label,
        window_kind=window_kind,
        epochs=run.epochs,
        batch_utts=1,
        lr=run.lr,
        seed=run.seed,
        checkpoints=[checkpoint],
        losses=losses,
    )
    return model, record


def enhance_file(
    checkpoint: str,
    wav_path: str,
    out_path: str,
    workdir: Optional[str] = None,
) -> dict:
    """Predict target features for one WAV and write them as ".ftm".

    The input features come from the toolkit CLI so the STFT convention
    stays in one code base; completing a waveform is then
    ``rtshorten resynth --features out.ftm --phase-source input.wav``
    (the model predicts magnitudes only, phase is reused from the input).
    """
    model = load_checkpoint(checkpoint)
    stem = os.path.splitext(os.path.basename(wav_path))[0]
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        run_toolkit(["features", wav_path, "--out-dir", tmp])
        values, _ = read_ftm(os.path.join(tmp, stem + ".ftm"))
    predicted = enhance_features(model, values)
    write_ftm(out_path, predicted)
    return {"out": out_path, "dims": list(predicted.shape)}
