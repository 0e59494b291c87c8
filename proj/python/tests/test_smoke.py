# SPDX-FileCopyrightText: © 2026 The zsvad Authors
#
# SPDX-License-Identifier: Apache-2.0

import json

import numpy as np
import pytest
from sklearn.metrics import average_precision_score, roc_auc_score

import zsvad


def reference_compress(z, k, ratio, eps=1e-12):
    n, d = z.shape
    dist = ((z[:, None, :] - z[None, :, :]) ** 2).sum(-1)
    others = np.sort(dist + np.diag(np.full(n, np.inf)), axis=1)[:, :k]
    density = k / np.maximum(others.sum(1), eps)
    lr = max(1, int(np.floor(ratio * n + 0.5)))
    order = sorted(range(n), key=lambda i: (-density[i], i))
    background = np.array(order[:lr])
    assignment = np.argmin(dist[:, background], axis=1)
    rows = []
    for b, p in enumerate(background):
        members = np.flatnonzero(assignment == b)
        logits = -(z[members] @ z[p]) / np.sqrt(d)
        w = np.exp(logits - logits.max())
        rows.append((w / w.sum()) @ z[members])
    return background, assignment, np.array(rows)


def test_compress_matches_reference():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(10, 80))
        z = rng.normal(size=(n, int(rng.integers(1, 12))))
        out = zsvad.compress(z, k=4, ratio=0.2)
        background, assignment, rows = reference_compress(z, 4, 0.2)
        np.testing.assert_array_equal(out["background_indices"], background)
        np.testing.assert_array_equal(out["assignment"], assignment)
        np.testing.assert_allclose(out["compressed"], rows, atol=1e-10)
        assert out["compressed"].shape[0] == zsvad.compressed_length(n, 0.2)


def test_duplicates_stay_finite():
    out = zsvad.compress(np.ones((10, 3)), k=3, ratio=0.5)
    assert np.isfinite(out["densities"]).all()
    assert np.isfinite(out["compressed"]).all()


def test_metrics_match_sklearn():
    rng = np.random.default_rng(1)
    for _ in range(20):
        s = rng.integers(0, 5, size=200).astype(float)
        y = (rng.random(200) < 0.3).astype(np.uint8)
        assert zsvad.roc_auc(s, y) == pytest.approx(roc_auc_score(y, s), abs=1e-12)
        s = rng.random(200)
        assert zsvad.average_precision(s, y) == pytest.approx(average_precision_score(y, s), abs=1e-12)


def test_losses_and_gradients():
    rng = np.random.default_rng(2)
    x = rng.normal(size=30)
    t = (rng.random(30) < 0.4).astype(np.uint8)
    loss, grad = zsvad.focal_loss(x, t, 0.5, 0.0)
    bce, bce_grad = zsvad.bce_loss(x, t)
    assert loss == pytest.approx(0.5 * bce)
    np.testing.assert_allclose(grad, 0.5 * bce_grad)
    dice, dgrad = zsvad.dice_loss(x, t)
    h = 1e-6
    e = np.zeros_like(x)
    e[3] = h
    numeric = (zsvad.dice_loss(x + e, t)[0] - zsvad.dice_loss(x - e, t)[0]) / (2 * h)
    assert dgrad[3] == pytest.approx(numeric, rel=1e-5)


def test_rle_round_trip():
    mask = np.zeros((2, 3, 4), dtype=np.uint8)
    mask[1, 1:, 2] = 1
    counts = zsvad.rle_encode(mask)
    assert sum(counts) == mask.size
    np.testing.assert_array_equal(zsvad.rle_decode(counts, 2, 3, 4), mask)


def test_synthetic_ground_truth():
    frames, labels, masks = zsvad.generate_synthetic(
        frames=4, height=16, width=16, noise=0.0,
        rect={"x": 2, "y": 2, "width": 4, "height": 3, "first_frame": 1, "frame_count": 2})
    assert frames.shape == (4, 16, 16)
    assert list(labels) == [0, 1, 1, 0]
    assert masks.sum(axis=(1, 2)).tolist() == [0, 12, 12, 0]
    with pytest.raises(zsvad.ContractViolation):
        zsvad.generate_synthetic(frames=2, height=8, width=8, rect={"x": 6, "y": 0, "width": 4, "height": 2})


def test_detect_and_evaluate(tmp_path):
    zsvad.synth(tmp_path / "suite", count=4, frames=4, height=32, width=32)
    cfg = tmp_path / "suite" / "synthetic.ini"
    report = zsvad.detect(tmp_path / "suite" / "manifest.jsonl", tmp_path / "out", config=cfg)
    assert report["videos"] == 4
    assert report["frame_auc"] > 0.95
    again = zsvad.evaluate(tmp_path / "suite" / "manifest.jsonl", tmp_path / "out", tmp_path / "eval", config=cfg)
    assert again["frame_auc"] == report["frame_auc"]
    metrics = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert "provenance" in metrics


def test_errors_map_to_exceptions(tmp_path):
    with pytest.raises(zsvad.ConfigError):
        zsvad.detect(tmp_path / "m.jsonl", tmp_path / "out", overrides=["compression.bogus=1"])
    with pytest.raises(zsvad.DataError):
        zsvad.detect(tmp_path / "missing.jsonl", tmp_path / "out")
    assert issubclass(zsvad.ProviderError, zsvad.Error)
