"""Trainer sanity gates: overfit capacity, the structural guarantees of
the shared-weight local model, and gradient correctness. Each test
prints one [PASS]/[FAIL] verdict line with its measured numbers."""

import torch

from subfull import ModelConfig, RunConfig, build_model, train

from conftest import make_corpus, max_grad_rel_err


def _verdict(tag: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    print(line)
    return line


def _small_config(arch: str = "subnet", radius: int = 2) -> ModelConfig:
    return ModelConfig(
        arch=arch, neighbor_radius=radius, subband_hidden=8, fullband_hidden=8, n_bands=16
    )


def test_a9_single_batch_overfit(tmp_path):
    # one utterance, 500 steps: the loss must fall below 1% of its
    # starting value, and its 20-step moving average must never rise by
    # more than 1% (optimizer wiggle near convergence stays tiny)
    corpus = make_corpus(1, seed=3)
    _, record = train(
        corpus, _small_config(), RunConfig(epochs=500, lr=1e-3, seed=0), str(tmp_path)
    )
    ratio = record.losses[-1] / record.losses[0]

    window = 20
    averages = [
        sum(record.losses[i : i + window]) / window
        for i in range(len(record.losses) - window + 1)
    ]
    worst_rise = max(
        (b - a) / a for a, b in zip(averages, averages[1:])
    )

    ok = ratio < 0.01 and worst_rise < 0.01
    detail = (
        f"loss {record.losses[0]:.4g} -> {record.losses[-1]:.4g} "
        f"(ratio {ratio:.3e}, bound 1e-2); worst MA-20 rise {worst_rise:.3e}"
    )
    assert ok, _verdict("A9 single-batch overfit", ok, detail)
    _verdict("A9 single-batch overfit", ok, detail)


def test_a9_subnet_locality():
    # bumping one band may only move outputs within the neighbor radius;
    # rows outside it must be bit-identical
    radius = 2
    model = build_model(_small_config(radius=radius), seed=1)
    torch.manual_seed(10)
    x = torch.randn(16, 9)
    k0 = 8
    x_bumped = x.clone()
    x_bumped[k0] += 1.0
    with torch.no_grad():
        base = model(x)
        bumped = model(x_bumped)

    below_ok = torch.equal(bumped[: k0 - radius], base[: k0 - radius])
    above_ok = torch.equal(bumped[k0 + radius + 1 :], base[k0 + radius + 1 :])
    moved = not torch.equal(bumped[k0], base[k0])
    shift = float((bumped[k0] - base[k0]).abs().max())

    ok = below_ok and above_ok and moved
    detail = (
        f"rows outside +-{radius} bit-identical: {below_ok and above_ok}; "
        f"bumped band moved by {shift:.3e}"
    )
    assert ok, _verdict("A9 subnet locality", ok, detail)
    _verdict("A9 subnet locality", ok, detail)


def test_a9_subnet_weight_sharing():
    # one set of parameters serves every band: permuting the stacked
    # band inputs permutes the outputs bit-exactly
    model = build_model(_small_config(), seed=2)
    torch.manual_seed(11)
    bands = torch.randn(16, 7, 5)
    perm = torch.randperm(16, generator=torch.Generator().manual_seed(12))
    with torch.no_grad():
        out = model.forward_bands(bands)
        out_perm = model.forward_bands(bands[perm].contiguous())

    ok = torch.equal(out_perm, out[perm])
    largest = float((out_perm - out[perm]).abs().max())
    detail = f"permutation equivariance max deviation {largest:.3e} (must be exactly 0)"
    assert ok, _verdict("A9 subnet weight sharing", ok, detail)
    _verdict("A9 subnet weight sharing", ok, detail)


def test_a9_gradients_match_finite_differences():
    # central differences at h=1e-6 in float64 over every parameter and
    # the input, on a 2-band/3-frame instance of each architecture
    worst = {arch: max_grad_rel_err(arch) for arch in ("subnet", "fullsubnet")}
    ok = all(value < 1e-4 for value in worst.values())
    detail = (
        f"worst relative error subnet {worst['subnet']:.3e}, "
        f"fullsubnet {worst['fullsubnet']:.3e} (bound 1e-4)"
    )
    assert ok, _verdict("A9 gradient check", ok, detail)
    _verdict("A9 gradient check", ok, detail)


def test_a9_fused_model_uses_global_context():
    # companion check: the fused variant must NOT be band-local, or the
    # locality test above would be vacuous as a discriminator
    radius = 2
    model = build_model(_small_config("fullsubnet", radius=radius), seed=3)
    torch.manual_seed(13)
    x = torch.randn(16, 9)
    x_bumped = x.clone()
    x_bumped[12] += 1.0
    with torch.no_grad():
        base = model(x)
        bumped = model(x_bumped)
    leak = float((bumped[:4] - base[:4]).abs().max())

    ok = leak > 0.0
    detail = f"distant-band leak through full-band summary {leak:.3e} (must be > 0)"
    assert ok, _verdict("A9 fused global context", ok, detail)
    _verdict("A9 fused global context", ok, detail)
