"""Evaluation metrics: cosine similarities and histogram distances."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from makeover.errors import ConfigurationError
from makeover.evalkit import (
    MeanPoolEmbedder,
    eval_pair,
    identity_similarity,
    landmark_cos_sim,
    region_hist_distance,
    write_eval_report,
)
from makeover.fixtures import synth_fixture


def test_landmark_cos_sim_identity_is_one():
    lm = np.random.default_rng(0).uniform(1, 50, size=(68, 2))
    assert landmark_cos_sim(lm, lm.copy()) == pytest.approx(1.0, abs=1e-12)


def test_landmark_cos_sim_scale_invariant():
    lm = np.random.default_rng(1).uniform(1, 50, size=(68, 2))
    assert landmark_cos_sim(lm, 3.0 * lm) == pytest.approx(1.0, abs=1e-12)


def test_landmark_cos_sim_clamps_to_unit_interval():
    a = np.zeros((68, 2))
    a[:, 0] = 1.0
    b = np.zeros((68, 2))
    b[:, 0] = -1.0  # exactly opposite directions
    assert landmark_cos_sim(a, b) == 0.0


def test_landmark_cos_sim_validation():
    lm = np.ones((68, 2))
    with pytest.raises(ValueError):
        landmark_cos_sim(lm[:10], lm)
    with pytest.raises(ValueError):
        landmark_cos_sim(np.zeros((68, 2)), lm)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_landmark_cos_sim_bounded(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(68, 2))
    b = rng.normal(size=(68, 2))
    value = landmark_cos_sim(a, b)
    assert 0.0 <= value <= 1.0


def test_identity_similarity_with_mean_pool():
    rng = np.random.default_rng(2)
    img = rng.uniform(-0.5, 0.5, size=(3, 8, 8))
    assert identity_similarity(img, img.copy(), MeanPoolEmbedder()) == pytest.approx(1.0)
    assert identity_similarity(img, -img, MeanPoolEmbedder()) == pytest.approx(-1.0)
    with pytest.raises(ConfigurationError):
        identity_similarity(img, img, None)


def test_region_hist_distance_zero_on_identical():
    styled, plain = synth_fixture(0, 64)
    for region in ("lip", "skin", "eye"):
        assert region_hist_distance(
            plain.image, plain.parsing, plain.image, plain.parsing, region
        ) == pytest.approx(0.0, abs=1e-12)


def test_region_hist_distance_level_shift():
    # shifting every region pixel k levels moves the W1 distance by k/255
    _, plain = synth_fixture(1, 64)
    from makeover.assets import image_from_uint8, image_to_uint8

    u8 = image_to_uint8(plain.image)
    mask = plain.parsing == 2  # skin
    shifted = u8.copy()
    assert shifted[mask].max() <= 245 - 1  # shift must not clip
    shifted[mask] += 10
    img_b = image_from_uint8(shifted)
    dist = region_hist_distance(plain.image, plain.parsing, img_b, plain.parsing, "skin")
    assert dist == pytest.approx(10.0 / 255.0, abs=1e-9)


def test_region_hist_distance_validation():
    styled, plain = synth_fixture(2, 64)
    with pytest.raises(ValueError, match="unknown region"):
        region_hist_distance(plain.image, plain.parsing, plain.image, plain.parsing, "hair")
    empty = np.zeros_like(plain.parsing)
    with pytest.raises(ValueError, match="empty"):
        region_hist_distance(plain.image, empty, plain.image, plain.parsing, "lip")


def test_eval_pair_record_shape(bundle, plain_asset, styled_asset):
    record = eval_pair(bundle, plain_asset, styled_asset, embedder=MeanPoolEmbedder())
    assert record["pair_id"] == f"{plain_asset.id}:{styled_asset.id}"
    assert record["cos_sim"] == pytest.approx(1.0)  # stored landmarks reused
    assert set(record["region_distances"]) == {"lip", "skin", "eye"}
    assert all(0.0 <= v <= 1.0 for v in record["region_distances"].values())
    assert -1.0 <= record["identity_sim"] <= 1.0


def test_eval_pair_without_embedder_skips_identity(bundle, plain_asset, styled_asset):
    record = eval_pair(bundle, plain_asset, styled_asset)
    assert "identity_sim" not in record


def test_eval_pair_custom_detector(bundle, plain_asset, styled_asset):
    jitter = plain_asset.landmarks + 0.5

    def detector(image):
        return jitter

    record = eval_pair(bundle, plain_asset, styled_asset, detector=detector)
    expected = landmark_cos_sim(plain_asset.landmarks, jitter)
    assert record["cos_sim"] == pytest.approx(expected)


def test_write_eval_report_covers_all_pairs(tmp_path, bundle, corpus):
    path = write_eval_report(bundle, corpus.plain, corpus.styled, tmp_path / "report.jsonl")
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(lines) == len(corpus.plain) * len(corpus.styled)
    ids = {entry["pair_id"] for entry in lines}
    assert len(ids) == len(lines)
