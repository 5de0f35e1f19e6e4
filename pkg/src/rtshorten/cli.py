"""Command-line surface: one subcommand per pipeline operation.

Conventions shared by every subcommand:

- the machine-readable result is a single JSON object on stdout;
  human-oriented logging goes to stderr
- exit code 0 on success, 1 on runtime failure (with a JSON error object
  on stdout), 2 on usage errors (argparse's convention)
- global flags (--fs, --win-len, --hop, --seed, --out-dir, --log-level)
  come before the subcommand; defaults can also be provided by a JSON
  config file named in $RTSHORTEN_CONFIG or --config, with explicit
  flags taking precedence
- `--dump-config` prints the effective global configuration and exits;
  feeding the dump back as a config file reproduces it
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import __version__
from .acoustics import edc_report, estimate_t60, identify_remaining_rir, schroeder_edc
from .audio_io import read_sidecar, read_wav, write_sidecar, write_wav
from .crossband import (
    crossband_filters,
    model_error,
    narrowband_error,
    write_crossband_file,
)
from .dataset import build_dataset, synth_noise
from .metrics import evaluate_corpus, spectral_mse
from .rir import (
    PolackParams,
    Rir,
    WindowSpec,
    decay_rate_q,
    detect_direct_path,
    shorten_rir,
    synth_polack_rir,
)
from .stft import (
    FeatureMatrix,
    StftConfig,
    features,
    read_feature_file,
    resynth,
    stft,
    write_feature_file,
)

log = logging.getLogger("rtshorten")

ENV_CONFIG = "RTSHORTEN_CONFIG"


@dataclass
class CliConfig:
    """Global settings every subcommand sees."""

    fs: int = 16000
    win_len: int = 512
    hop: int = 256
    seed: int = 0
    out_dir: str = "."
    log_level: str = "info"

    @classmethod
    def from_dict(cls, d: dict) -> "CliConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def stft_config(self) -> StftConfig:
        return StftConfig(win_len=self.win_len, hop=self.hop, fs=self.fs)


def _resolve_config(args: argparse.Namespace) -> CliConfig:
    values = asdict(CliConfig())
    path = args.config or os.environ.get(ENV_CONFIG)
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        values.update(CliConfig.from_dict(file_values).__dict__)
    for key in values:
        override = getattr(args, key, None)
        if override is not None:
            values[key] = override
    return CliConfig.from_dict(values)


def _out_path(config: CliConfig, explicit: Optional[str], default_name: str) -> str:
    if explicit:
        return explicit
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, default_name)


def _load_rir(path: str, fs_expected: int, need_t60: bool = False) -> Rir:
    """Load a response WAV, preferring sidecar metadata over re-derivation."""
    fs, samples = read_wav(path)
    if fs != fs_expected:
        raise ValueError(f"{path}: sample rate {fs}, expected {fs_expected}")
    sidecar = read_sidecar(path) or {}
    n1 = int(sidecar["n1"]) if "n1" in sidecar else detect_direct_path(samples)
    t60 = sidecar.get("t60_nominal")
    rir = Rir(samples=samples, fs=fs, n1=n1, t60_nominal=t60)
    if need_t60 and rir.t60_nominal is None:
        rir.t60_nominal = estimate_t60(schroeder_edc(rir))
        log.info("no nominal T60 for %s; blind estimate %.4f s", path, rir.t60_nominal)
    return rir


def _read_features_or_wav(path: str, config: StftConfig) -> FeatureMatrix:
    if path.endswith(".ftm"):
        values, header = read_feature_file(path)
        if header.get("kind") == "phase":
            raise ValueError(f"{path} holds phase data, not magnitude features")
        return FeatureMatrix(values=values.astype(np.float64), config=config, n_samples=None)
    fs, samples = read_wav(path)
    if fs != config.fs:
        raise ValueError(f"{path}: sample rate {fs}, expected {config.fs}")
    return features(stft(samples, config))


# ---------------------------------------------------------------------------
# subcommand handlers: each returns the JSON summary dict
# ---------------------------------------------------------------------------

def _cmd_synth_rir(args, config: CliConfig) -> dict:
    params = PolackParams(
        t60=args.t60,
        duration=args.duration if args.duration is not None else args.t60,
        direct_delay=args.direct_delay,
        direct_gain=args.direct_gain,
        reverb_gain=args.reverb_gain,
        seed=config.seed,
    )
    rir = synth_polack_rir(params, config.fs)
    out = _out_path(config, args.out, "rir.wav")
    write_wav(out, config.fs, rir.samples)
    write_sidecar(
        out,
        {
            "n1": rir.n1,
            "t60_nominal": rir.t60_nominal,
            "fs": config.fs,
            "seed": config.seed,
            "kind": "polack",
        },
    )
    return {"out": out, "n1": rir.n1, "t60_nominal": rir.t60_nominal, "length": len(rir)}


def _cmd_shorten(args, config: CliConfig) -> dict:
    spec = WindowSpec(
        kind=args.mode,
        target_t60=args.target_t60,
        early_ms=args.early_ms,
        guard_ms=args.guard_ms,
        q_const=args.q_const,
    )
    needs_t60 = args.mode in ("rts", "const_exp") and args.t60 is None
    rir = _load_rir(args.rir, config.fs, need_t60=needs_t60)
    shortened = shorten_rir(rir, spec, t60=args.t60)
    out = _out_path(config, args.out, "shortened.wav")
    write_wav(out, config.fs, shortened.samples)
    write_sidecar(
        out,
        {
            "n1": shortened.n1,
            "t60_nominal": shortened.t60_nominal,
            "fs": config.fs,
            "window_spec": spec.to_dict(),
            "source": args.rir,
        },
    )
    return {
        "out": out,
        "mode": args.mode,
        "n1": shortened.n1,
        "t60_nominal": shortened.t60_nominal,
    }


def _cmd_edc(args, config: CliConfig) -> dict:
    labeled = []
    for path in args.rir:
        label = os.path.splitext(os.path.basename(path))[0]
        labeled.append((label, _load_rir(path, config.fs)))
    table = edc_report(labeled)
    out = _out_path(config, args.out, "edc.csv")
    labels = list(table["curves"])
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_s"] + labels)
        for i, t in enumerate(table["time_s"]):
            row = [f"{t:.9g}"]
            for label in labels:
                v = table["curves"][label][i]
                row.append("nan" if math.isnan(v) else f"{v:.9g}")
            writer.writerow(row)
    return {"out": out, "labels": labels, "n_rows": len(table["time_s"])}


def _cmd_t60(args, config: CliConfig) -> dict:
    rir = _load_rir(args.rir, config.fs)
    edc = schroeder_edc(rir)
    t60 = estimate_t60(edc, fit_range_db=(args.fit_hi, args.fit_lo))
    return {"rir": args.rir, "t60": t60, "fit_range_db": [args.fit_hi, args.fit_lo]}


def _cmd_q_param(args, config: CliConfig) -> dict:
    q = decay_rate_q(args.t60, args.target_t60, config.fs)
    return {
        "q": q,
        "display": f"{q:.6e}",
        "t60": args.t60,
        "target_t60": args.target_t60,
        "fs": config.fs,
    }


def _cmd_crossband_check(args, config: CliConfig) -> dict:
    stft_config = config.stft_config()
    rir = _load_rir(args.rir, config.fs)
    rng = np.random.default_rng(config.seed)
    signal = rng.standard_normal(int(args.signal_seconds * config.fs))

    max_l = stft_config.n_bands - 1 if args.full else args.radius
    filters = crossband_filters(rir, stft_config, max_l)
    errors = {
        str(l): model_error(signal, rir, stft_config, l, filters=filters.truncated(l))
        for l in range(args.radius + 1)
    }
    summary = {
        "rir": args.rir,
        "model_error_by_radius": errors,
        "narrowband_error": narrowband_error(signal, rir, stft_config),
    }
    if args.full:
        summary["full_radius_error"] = model_error(
            signal, rir, stft_config, max_l, filters=filters
        )
    if args.save_filters:
        write_crossband_file(args.save_filters, filters)
        summary["filters"] = args.save_filters
    return summary


def _cmd_ident_rir(args, config: CliConfig) -> dict:
    fs_e, enhanced = read_wav(args.enhanced)
    fs_c, clean = read_wav(args.clean)
    if fs_e != config.fs or fs_c != config.fs:
        raise ValueError(f"inputs must be {config.fs} Hz")
    residual = identify_remaining_rir(
        enhanced, clean, config.fs, epsilon=args.epsilon, fft_len=args.fft_len
    )
    truncated = residual.truncated(args.truncate)
    out = _out_path(config, args.out, "residual.wav")
    write_wav(out, config.fs, truncated.samples)
    write_sidecar(
        out,
        {
            "fs": config.fs,
            "epsilon": args.epsilon,
            "truncate_s": args.truncate,
            "enhanced": args.enhanced,
            "clean": args.clean,
        },
    )
    return {"out": out, "length": len(truncated.samples), "epsilon": args.epsilon}


def _cmd_synth_noise(args, config: CliConfig) -> dict:
    noise = synth_noise(args.kind, args.duration, config.seed, fs=config.fs)
    out = _out_path(config, args.out, f"{args.kind}.wav")
    write_wav(out, config.fs, noise)
    return {"out": out, "kind": args.kind, "n_samples": int(noise.size)}


def _cmd_build_dataset(args, config: CliConfig) -> dict:
    report = build_dataset(args.manifest, args.out, jobs=args.jobs)
    return {"out": args.out, **report}


def _cmd_features(args, config: CliConfig) -> dict:
    stft_config = config.stft_config()
    out_dir = args.out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    stems = [os.path.splitext(os.path.basename(p))[0] for p in args.wav]
    if len(set(stems)) != len(stems):
        raise ValueError(
            "duplicate output stems; run once per source directory or rename inputs"
        )
    written = []
    for path, stem in zip(args.wav, stems):
        fs, samples = read_wav(path)
        if fs != config.fs:
            raise ValueError(f"{path}: sample rate {fs}, expected {config.fs}")
        spec = stft(samples, stft_config, pad_mode=args.pad_mode)
        feats = features(spec)
        out = os.path.join(out_dir, stem + ".ftm")
        write_feature_file(out, feats.values)
        written.append({"path": out, "dims": list(feats.values.shape)})
    return {"written": written, "n_files": len(written)}


def _cmd_resynth(args, config: CliConfig) -> dict:
    stft_config = config.stft_config()
    values, header = read_feature_file(args.features)
    if header.get("kind") == "phase":
        raise ValueError(f"{args.features} holds phase data, not magnitude features")
    fs, phase_samples = read_wav(args.phase_source)
    if fs != config.fs:
        raise ValueError(f"{args.phase_source}: sample rate {fs}, expected {config.fs}")
    phase_spec = stft(phase_samples, stft_config, pad_mode=args.pad_mode)
    feats = FeatureMatrix(
        values=values.astype(np.float64), config=stft_config, n_samples=phase_spec.n_samples
    )
    signal = resynth(feats, phase_spec)
    out = _out_path(config, args.out, "resynth.wav")
    write_wav(out, config.fs, signal)
    return {"out": out, "n_samples": int(signal.size)}


def _cmd_mse(args, config: CliConfig) -> dict:
    stft_config = config.stft_config()
    a = _read_features_or_wav(args.a, stft_config)
    b = _read_features_or_wav(args.b, stft_config)
    return {"a": args.a, "b": args.b, "mse": spectral_mse(a, b)}


def _cmd_report(args, config: CliConfig) -> dict:
    report = evaluate_corpus(
        args.pred_dir, args.target_dir, args.input_dir, config.stft_config()
    )
    summary = json.loads(report.to_json())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        summary["csv"] = args.csv
    return summary


HANDLERS = {
    "synth-rir": _cmd_synth_rir,
    "shorten": _cmd_shorten,
    "edc": _cmd_edc,
    "t60": _cmd_t60,
    "q-param": _cmd_q_param,
    "crossband-check": _cmd_crossband_check,
    "ident-rir": _cmd_ident_rir,
    "synth-noise": _cmd_synth_noise,
    "build-dataset": _cmd_build_dataset,
    "features": _cmd_features,
    "resynth": _cmd_resynth,
    "mse": _cmd_mse,
    "report": _cmd_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtshorten",
        description="Reverberation-time shortening toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--fs", type=int, help="sample rate (default 16000)")
    parser.add_argument("--win-len", type=int, dest="win_len", help="STFT window length")
    parser.add_argument("--hop", type=int, help="STFT hop size")
    parser.add_argument("--seed", type=int, help="seed for stochastic outputs")
    parser.add_argument("--out-dir", dest="out_dir", help="default output directory")
    parser.add_argument(
        "--log-level",
        dest="log_level",
        choices=["debug", "info", "warning", "error"],
        help="stderr log level",
    )
    parser.add_argument("--config", help=f"JSON config file (also ${ENV_CONFIG})")
    parser.add_argument(
        "--dump-config",
        action="store_true",
        help="print the effective global config as JSON and exit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth-rir", help="synthesize a stochastic exponential-tail RIR")
    p.add_argument("--t60", type=float, required=True)
    p.add_argument("--duration", type=float, help="seconds (default: t60)")
    p.add_argument("--direct-delay", type=float, default=0.0, dest="direct_delay")
    p.add_argument("--direct-gain", type=float, default=1.0, dest="direct_gain")
    p.add_argument("--reverb-gain", type=float, default=None, dest="reverb_gain")
    p.add_argument("--out", help="output WAV path")

    p = sub.add_parser("shorten", help="apply a shortening window to an RIR")
    p.add_argument("--rir", required=True)
    p.add_argument(
        "--mode", required=True, choices=["rts", "direct_path", "early", "const_exp"]
    )
    p.add_argument("--target-t60", type=float, default=None, dest="target_t60")
    p.add_argument("--early-ms", type=float, default=50.0, dest="early_ms")
    p.add_argument("--guard-ms", type=float, default=0.5, dest="guard_ms")
    p.add_argument("--q-const", type=float, default=None, dest="q_const")
    p.add_argument("--t60", type=float, default=None, help="source T60 override")
    p.add_argument("--out", help="output WAV path")

    p = sub.add_parser("edc", help="energy decay curves of one or more RIRs to CSV")
    p.add_argument("--rir", action="append", required=True, help="repeatable")
    p.add_argument("--out", help="CSV path")

    p = sub.add_parser("t60", help="blind T60 from the Schroeder curve")
    p.add_argument("--rir", required=True)
    p.add_argument("--fit-hi", type=float, default=-5.0, dest="fit_hi")
    p.add_argument("--fit-lo", type=float, default=-25.0, dest="fit_lo")

    p = sub.add_parser("q-param", help="window decay rate between two T60s")
    p.add_argument("--t60", type=float, required=True)
    p.add_argument("--target-t60", type=float, required=True, dest="target_t60")

    p = sub.add_parser(
        "crossband-check", help="reverberation-model error versus neighbor radius"
    )
    p.add_argument("--rir", required=True)
    p.add_argument("--radius", type=int, default=4)
    p.add_argument("--full", action="store_true", help="also verify at full radius")
    p.add_argument(
        "--signal-seconds", type=float, default=1.0, dest="signal_seconds"
    )
    p.add_argument("--save-filters", dest="save_filters", help="write filter tensor here")

    p = sub.add_parser("ident-rir", help="deconvolve the residual response")
    p.add_argument("--enhanced", required=True)
    p.add_argument("--clean", required=True)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--fft-len", type=int, default=None, dest="fft_len")
    p.add_argument("--truncate", type=float, default=1.0, help="analysis seconds")
    p.add_argument("--out", help="output WAV path")

    p = sub.add_parser("synth-noise", help="deterministic stationary noise")
    p.add_argument("--kind", choices=["white", "pink"], default="pink")
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--out", help="output WAV path")

    p = sub.add_parser("build-dataset", help="render a manifest into a corpus tree")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("features", help="cubic-root magnitude features to .ftm")
    p.add_argument("wav", nargs="+")
    p.add_argument("--out-dir", dest="out_dir", help="defaults to the global out dir")
    p.add_argument("--pad-mode", choices=["reflect", "zero"], default="reflect")

    p = sub.add_parser("resynth", help="waveform from features plus a phase source")
    p.add_argument("--features", required=True)
    p.add_argument("--phase-source", required=True, dest="phase_source")
    p.add_argument("--pad-mode", choices=["reflect", "zero"], default="reflect")
    p.add_argument("--out", help="output WAV path")

    p = sub.add_parser("mse", help="feature-domain MSE between two files (.wav or .ftm)")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = sub.add_parser("report", help="corpus-level MSE report")
    p.add_argument("--pred-dir", dest="pred_dir", default=None)
    p.add_argument("--target-dir", dest="target_dir", required=True)
    p.add_argument("--input-dir", dest="input_dir", required=True)
    p.add_argument("--csv", help="also write per-utterance rows here")

    return parser


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, separators=(",", ":")))
    sys.stdout.write("\n")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
    except Exception as exc:
        logging.basicConfig(stream=sys.stderr, level=logging.WARNING)
        log.error("config error: %s", exc)
        _emit({"error": {"type": type(exc).__name__, "message": str(exc)}})
        return 1
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, config.log_level.upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.dump_config:
        _emit(asdict(config))
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        summary = HANDLERS[args.command](args, config)
    except Exception as exc:
        log.error("%s failed: %s", args.command, exc)
        _emit({"error": {"type": type(exc).__name__, "message": str(exc)}})
        return 1
    _emit(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
