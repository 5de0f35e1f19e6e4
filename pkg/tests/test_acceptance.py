"""End-to-end acceptance checks for the toolkit's shipped guarantees.

Each test prints exactly one [PASS]/[FAIL] line (visible with `pytest -s`
or in captured output) carrying the measured values, then asserts. The
checks are numbered A1-A8 and cover, in order: window decay-rate
arithmetic, end-to-end shortening accuracy, the blind T60 estimator,
energy-decay-curve properties plus residual-response identification,
cross-band reverberation-model accuracy, STFT reconstruction, dataset
determinism and SNR exactness, and the feature-MSE ordering across
target windows on a generated 100-utterance corpus.
"""

import hashlib
import math
import os
import time

import numpy as np

from rtshorten.acoustics import estimate_t60, identify_remaining_rir, schroeder_edc
from rtshorten.audio_io import write_wav
from rtshorten.crossband import crossband_filters, model_error, narrowband_error
from rtshorten.dataset import (
    FS,
    ManifestEntry,
    build_dataset,
    convolve,
    mix_at_snr,
    synth_noise,
    synth_speech,
)
from rtshorten.metrics import evaluate_corpus
from rtshorten.rir import (
    PolackParams,
    Rir,
    WindowSpec,
    decay_rate_q,
    shorten_rir,
    synth_polack_rir,
)
from rtshorten.stft import StftConfig, istft, stft


def _verdict(tag: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    print(line)
    return line


def _tree_digest(root: str) -> dict:
    digests = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            full = os.path.join(dirpath, name)
            with open(full, "rb") as fh:
                digests[os.path.relpath(full, root)] = hashlib.sha256(fh.read()).hexdigest()
    return digests


def test_a1_window_decay_rate_arithmetic():
    q = decay_rate_q(0.7, 0.15, 16000)
    # by hand: 3/(0.15*16000) - 3/(0.7*16000) = 1/800 - 3/11200 = 11/11200
    expected = 11.0 / 11200.0
    zeros = [decay_rate_q(t, t, 16000) for t in (0.25, 0.5, 0.7)]
    ok = (
        abs(q - expected) < 1e-12
        and f"{q:.6e}" == "9.821429e-04"
        and all(z == 0.0 for z in zeros)
    )
    detail = f"q(0.7->0.15)={q:.15e}, |q-11/11200|={abs(q - expected):.3e}, q(T->T)={zeros}"
    assert ok, _verdict("A1 decay-rate arithmetic", ok, detail)
    _verdict("A1 decay-rate arithmetic", ok, detail)


def test_a2_shortening_reaches_target_t60():
    t_start = time.monotonic()
    target = 0.15
    medians = {}
    for t60 in (0.25, 0.5, 0.7):
        estimates = []
        for seed in range(20):
            rir = synth_polack_rir(PolackParams(t60=t60, duration=t60, seed=seed), 16000)
            short = shorten_rir(rir, WindowSpec(kind="rts", target_t60=target))
            estimates.append(estimate_t60(schroeder_edc(short)))
        medians[t60] = float(np.median(estimates))
    elapsed = time.monotonic() - t_start
    ok = all(0.135 <= m <= 0.165 for m in medians.values()) and elapsed < 10.0
    detail = (
        "median blind T60 after shortening to 0.15 s: "
        + ", ".join(f"{k}->{v:.4f}" for k, v in medians.items())
        + f" (20 seeds each, {elapsed:.1f} s)"
    )
    assert ok, _verdict("A2 end-to-end shortening", ok, detail)
    _verdict("A2 end-to-end shortening", ok, detail)


def test_a3_blind_t60_estimator():
    # deterministic exponential envelopes: the dB decay is exactly linear,
    # so the fit must recover the decay time to a small fraction of 1%
    worst_exact = 0.0
    for t60 in (0.2, 0.5, 1.0):
        n = np.arange(int(1.25 * t60 * FS))
        envelope = 10.0 ** (-3.0 * n / (t60 * FS))
        est = estimate_t60(schroeder_edc(envelope, FS))
        worst_exact = max(worst_exact, abs(est - t60) / t60)

    # stochastic responses: median relative error per decay time
    medians = []
    for t60 in (0.3, 0.6):
        errs = []
        for seed in range(11):
            rir = synth_polack_rir(PolackParams(t60=t60, duration=t60, seed=seed), FS)
            errs.append(abs(estimate_t60(schroeder_edc(rir)) - t60) / t60)
        medians.append(float(np.median(errs)))

    ok = worst_exact < 1e-3 and max(medians) < 0.05
    detail = (
        f"exact-envelope worst rel err {worst_exact:.2e} (<1e-3), "
        f"stochastic median rel err {max(medians):.3f} (<0.05)"
    )
    assert ok, _verdict("A3 blind T60 estimator", ok, detail)
    _verdict("A3 blind T60 estimator", ok, detail)


def test_a4_edc_properties_and_residual_identification():
    rir = synth_polack_rir(PolackParams(t60=0.5, duration=0.5, seed=7), FS)
    edc = schroeder_edc(rir)

    nonincreasing = bool(np.all(np.diff(edc.values) <= 0.0))
    total = float(np.sum(rir.samples**2))
    starts_at_total = abs(edc.values[0] - total) <= 1e-12 * total
    t_ref = estimate_t60(edc)
    t_scaled = estimate_t60(schroeder_edc(rir.samples * 3.0, FS))
    scale_invariant = abs(t_scaled - t_ref) <= 1e-9 * t_ref
    scale_exact = estimate_t60(schroeder_edc(rir.samples * 4.0, FS)) == t_ref

    # enhanced = clean speech convolved with the shortened response; the
    # deconvolved residual must reproduce that response's decay curve.
    # The probe's zeroed tail keeps length-truncated convolution lossless.
    short = shorten_rir(rir, WindowSpec(kind="rts", target_t60=0.15))
    clean = np.random.default_rng(11).standard_normal(2 * FS)
    clean[-int(0.8 * FS):] = 0.0
    enhanced = convolve(clean, short)
    residual = identify_remaining_rir(enhanced, clean, FS).truncated(0.5)
    db_ref = schroeder_edc(short).db
    db_res = schroeder_edc(residual.samples, FS).db
    mask = db_ref > -40.0
    max_dev = float(np.max(np.abs(db_res[mask] - db_ref[mask])))

    ok = (
        nonincreasing
        and starts_at_total
        and scale_invariant
        and scale_exact
        and max_dev <= 0.5
    )
    detail = (
        f"nonincreasing={nonincreasing}, EDC(0)=total-energy rel err "
        f"{abs(edc.values[0] - total) / total:.1e}, scale-invariant T60 "
        f"(x3 rel {abs(t_scaled - t_ref) / t_ref:.1e}, x4 exact={scale_exact}), "
        f"residual-EDC max dev above -40 dB = {max_dev:.3f} dB (<=0.5)"
    )
    assert ok, _verdict("A4 EDC properties + residual identification", ok, detail)
    _verdict("A4 EDC properties + residual identification", ok, detail)


def test_a5_crossband_model_accuracy():
    t_start = time.monotonic()
    config = StftConfig()
    signal = np.random.default_rng(0).standard_normal(FS)  # 1 s white noise

    rir = synth_polack_rir(PolackParams(t60=0.7, duration=0.75, seed=5), FS)
    full_l = config.n_bands - 1
    filters = crossband_filters(rir, config, full_l)
    full_err = model_error(signal, rir, config, full_l, filters=filters)
    errs = [
        model_error(signal, rir, config, l, filters=filters.truncated(l))
        for l in range(5)
    ]
    monotone = all(errs[i + 1] <= errs[i] + 1e-12 for i in range(4))
    nb_long = narrowband_error(signal, rir, config)

    # a response much shorter than the analysis window (hop/4 samples):
    # the per-band multiplicative model should be nearly sufficient
    n_short = config.hop // 4
    decay = 10.0 ** (-3.0 * np.arange(n_short) / n_short)
    short_samples = decay * np.random.default_rng(12).standard_normal(n_short)
    short_samples[0] = 1.0
    short = Rir(samples=short_samples, fs=FS, n1=0, t60_nominal=None)
    nb_short = narrowband_error(signal, short, config)

    elapsed = time.monotonic() - t_start
    ok = (
        full_err < 1e-8
        and monotone
        and nb_long > 0.5
        and nb_short < 0.05
        and elapsed < 60.0
    )
    detail = (
        f"full-radius rel err {full_err:.2e} (<1e-8), neighbor sweep "
        + "/".join(f"{e:.3f}" for e in errs)
        + f" monotone={monotone}, narrow-band err long {nb_long:.3f} (>0.5) "
        f"vs short {nb_short:.4f} (<0.05), {elapsed:.1f} s"
    )
    assert ok, _verdict("A5 cross-band model accuracy", ok, detail)
    _verdict("A5 cross-band model accuracy", ok, detail)


def test_a6_stft_reconstruction():
    config = StftConfig()
    x = np.random.default_rng(1).standard_normal(FS)
    y = istft(stft(x, config))
    assert y.size == x.size
    core = slice(config.win_len, x.size - config.win_len)
    rel = float(np.linalg.norm(y[core] - x[core]) / np.linalg.norm(x[core]))
    ok = rel < 1e-10
    detail = f"interior round-trip rel err {rel:.2e} (<1e-10), 512/256 default"
    assert ok, _verdict("A6 STFT reconstruction", ok, detail)
    _verdict("A6 STFT reconstruction", ok, detail)


def test_a7_dataset_determinism_and_snr(tmp_path):
    # byte-identical rebuilds of the same manifest
    speech_paths = []
    for i in range(2):
        p = str(tmp_path / f"sp{i}.wav")
        write_wav(p, FS, synth_speech(0.9, seed=21 + i))
        speech_paths.append(p)
    entries = []
    for i, (window, snr) in enumerate(
        [("rts", 20.0), ("rts", 5.0), ("direct_path", 20.0), ("direct_path", 5.0)]
    ):
        spec = WindowSpec(kind=window, target_t60=0.15 if window == "rts" else None)
        entries.append(
            ManifestEntry(
                utt_id=f"u{i}",
                speech_path=speech_paths[i % 2],
                rir_id="polack:t60=0.3",
                window_spec=spec,
                snr_db=snr,
                segment_s=0.8,
                seed=i,
            )
        )
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    report = build_dataset(entries, out_a)
    build_dataset(entries, out_b)
    identical = report["n_ok"] == 4 and _tree_digest(out_a) == _tree_digest(out_b)

    # achieved SNR against the reverberant-power reference
    speech = synth_speech(1.2, seed=33)
    rir = synth_polack_rir(PolackParams(t60=0.4, duration=0.4, seed=2), FS)
    reverberant = convolve(speech, rir)
    noise = synth_noise("pink", 1.2, seed=9)
    worst = 0.0
    for snr in (20.0, 5.0):
        mixed = mix_at_snr(reverberant, noise, snr)
        recovered = mixed - reverberant
        achieved = 10.0 * math.log10(
            float(np.mean(reverberant**2)) / float(np.mean(recovered**2))
        )
        worst = max(worst, abs(achieved - snr))

    ok = identical and worst < 1e-6
    detail = (
        f"rebuild byte-identical={identical} (4 entries), "
        f"worst |achieved-requested| SNR dev {worst:.2e} dB (<1e-6) at 20/5 dB"
    )
    assert ok, _verdict("A7 dataset determinism + SNR exactness", ok, detail)
    _verdict("A7 dataset determinism + SNR exactness", ok, detail)


def test_a8_feature_mse_ordering_across_windows(tmp_path):
    t_start = time.monotonic()
    t60s = [0.25, 0.5, 0.7]
    windows = ["early", "rts", "direct_path"]

    speech_paths = []
    for i in range(12):
        p = str(tmp_path / f"sp{i:02d}.wav")
        write_wav(p, FS, synth_speech(1.6, seed=300 + i))
        speech_paths.append(p)

    # one measured-response file per combo so all three windows of a combo
    # see the identical room, making the comparison paired
    rir_paths = []
    for c in range(34):
        t60 = t60s[c % 3]
        rir = synth_polack_rir(PolackParams(t60=t60, duration=t60, seed=40 + c), FS)
        p = str(tmp_path / f"rir{c:02d}.wav")
        write_wav(p, FS, rir.samples)
        rir_paths.append(p)

    def window_spec(kind: str) -> WindowSpec:
        return WindowSpec(kind=kind, target_t60=0.15 if kind == "rts" else None)

    entries = []
    for k in range(100):
        combo = k // 3
        entries.append(
            ManifestEntry(
                utt_id=f"u{k:03d}",
                speech_path=speech_paths[combo % 12],
                rir_id=rir_paths[combo],
                window_spec=window_spec(windows[k % 3]),
                snr_db=20.0,
                segment_s=1.5,
                seed=combo,
            )
        )

    out = str(tmp_path / "corpus")
    report = build_dataset(entries, out)
    assert report["n_ok"] == 100, f"dataset build failed: {report['failures']}"

    metric = evaluate_corpus(
        None, os.path.join(out, "target"), os.path.join(out, "input"), StftConfig()
    )
    by_window = {w: [] for w in windows}
    for row in metric.utterances:
        by_window[row["condition"].split("|")[0]].append(row["mse_unprocessed"])
    means = {w: float(np.mean(v)) for w, v in by_window.items()}

    elapsed = time.monotonic() - t_start
    ok = means["early"] < means["rts"] < means["direct_path"] and elapsed < 300.0
    detail = (
        f"mean unprocessed feature MSE over 100 utterances: "
        f"early {means['early']:.4f} < rts {means['rts']:.4f} < "
        f"direct_path {means['direct_path']:.4f}, {elapsed:.0f} s"
    )
    assert ok, _verdict("A8 window-target MSE ordering", ok, detail)
    _verdict("A8 window-target MSE ordering", ok, detail)
