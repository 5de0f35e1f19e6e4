"""Command-line surface: `train` fits a model to paired feature
directories, `enhance` applies a checkpoint to one WAV. Summaries are
JSON on stdout, mirroring the waveform toolkit's convention."""

import argparse
import json
import sys

from . import __version__
from .data import load_corpus
from .model import ModelConfig
from .train import RunConfig, enhance_file, train


def _cmd_train(args) -> dict:
    corpus = load_corpus(args.input_dir, args.target_dir)
    config = ModelConfig(
        arch=args.arch,
        neighbor_radius=args.radius,
        subband_hidden=args.subband_hidden,
        fullband_hidden=args.fullband_hidden,
        bidirectional=not args.unidirectional,
        n_bands=args.n_bands,
    )
    run = RunConfig(epochs=args.epochs, lr=args.lr, seed=args.seed)
    _, record = train(
        corpus,
        config,
        run,
        args.out,
        dataset_label=args.input_dir,
        window_kind=args.window_kind,
    )
    return {
        "checkpoint": record.checkpoints[-1],
        "steps": len(record.losses),
        "first_loss": record.losses[0],
        "final_loss": record.losses[-1],
        "n_utterances": len(corpus),
        "out": args.out,
    }


def _cmd_enhance(args) -> dict:
    return enhance_file(args.checkpoint, args.wav, args.out)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subfull",
        description="Toy subband/fullband feature-regression trainer",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("train", help="fit a model to paired .ftm directories")
    p.add_argument("--input-dir", required=True, dest="input_dir")
    p.add_argument("--target-dir", required=True, dest="target_dir")
    p.add_argument("--out", required=True, help="run directory (model.pt, loss.csv)")
    p.add_argument("--arch", choices=["subnet", "fullsubnet"], default="subnet")
    p.add_argument("--radius", type=int, default=4)
    p.add_argument("--subband-hidden", type=int, default=64, dest="subband_hidden")
    p.add_argument("--fullband-hidden", type=int, default=96, dest="fullband_hidden")
    p.add_argument("--n-bands", type=int, default=257, dest="n_bands")
    p.add_argument("--unidirectional", action="store_true")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--window-kind",
        default="",
        dest="window_kind",
        help="target window label recorded with the run",
    )

    p = sub.add_parser("enhance", help="apply a checkpoint to one WAV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True, help="output .ftm path")

    return parser


HANDLERS = {"train": _cmd_train, "enhance": _cmd_enhance}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        summary = HANDLERS[args.command](args)
    except Exception as exc:
        sys.stdout.write(
            json.dumps(
                {"error": {"type": type(exc).__name__, "message": str(exc)}},
                sort_keys=True,
                separators=(",", ":"),
            )
        )
        sys.stdout.write("\n")
        return 1
    sys.stdout.write(json.dumps(summary, sort_keys=True, separators=(",", ":")))
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
