"""Inference paths: composition reductions, determinism, video handling."""

import numpy as np
import pytest
import torch

from makeover import engine
from makeover.assets import REGION_LABELS, encode_png

ALL_REGIONS = sorted(REGION_LABELS)


def test_transfer_output_contract(bundle, plain_asset, styled_asset):
    out = engine.transfer(plain_asset, styled_asset, bundle)
    assert out.shape == plain_asset.image.shape
    assert out.dtype == np.float32
    assert out.min() >= -1.0 and out.max() <= 1.0
    assert np.any(out != plain_asset.image)


def test_transfer_is_byte_deterministic(bundle, plain_asset, styled_asset):
    a = engine.transfer(plain_asset, styled_asset, bundle)
    b = engine.transfer(plain_asset, styled_asset, bundle)
    assert encode_png(a) == encode_png(b)


def test_remove_output_contract(bundle, styled_asset):
    out = engine.remove(styled_asset, bundle)
    assert out.shape == styled_asset.image.shape
    assert np.isfinite(out).all()
    again = engine.remove(styled_asset, bundle)
    np.testing.assert_array_equal(out, again)


def test_partial_with_all_regions_reduces_to_plain_transfer(
    bundle, plain_asset, styled_asset, corpus
):
    other = corpus.styled[1]
    src = engine.face_tensors(plain_asset)
    with torch.no_grad():
        v_x = bundle.encode(src.image.unsqueeze(0))
        plain_maps, _ = engine.reference_style(bundle, src, styled_asset, v_x=v_x)
        part_maps = engine.partial_style(
            bundle, src, styled_asset, other, ALL_REGIONS, v_x=v_x
        )
    torch.testing.assert_close(part_maps.gamma, plain_maps.gamma, atol=1e-6, rtol=0)
    torch.testing.assert_close(part_maps.beta, plain_maps.beta, atol=1e-6, rtol=0)

    image_plain = engine.transfer(plain_asset, styled_asset, bundle)
    image_part = engine.transfer_partial(plain_asset, styled_asset, other, ALL_REGIONS, bundle)
    np.testing.assert_allclose(image_part, image_plain, atol=1e-5)


def test_degree_alpha_one_reduces_to_plain_transfer(bundle, plain_asset, styled_asset):
    src = engine.face_tensors(plain_asset)
    with torch.no_grad():
        v_x = bundle.encode(src.image.unsqueeze(0))
        plain_maps, _ = engine.reference_style(bundle, src, styled_asset, v_x=v_x)
        deg_maps = engine.degree_style(bundle, src, styled_asset, 1.0, v_x=v_x)
    torch.testing.assert_close(deg_maps.gamma, plain_maps.gamma, atol=1e-6, rtol=0)
    torch.testing.assert_close(deg_maps.beta, plain_maps.beta, atol=1e-6, rtol=0)

    image_plain = engine.transfer(plain_asset, styled_asset, bundle)
    image_deg = engine.transfer_degree(plain_asset, styled_asset, 1.0, bundle)
    np.testing.assert_allclose(image_deg, image_plain, atol=1e-5)


def test_degree_alpha_zero_with_second_reference(bundle, plain_asset, corpus):
    y1, y2 = corpus.styled[0], corpus.styled[1]
    image_zero = engine.transfer_degree(plain_asset, y1, 0.0, bundle, y2=y2)
    image_y2 = engine.transfer(plain_asset, y2, bundle)
    np.testing.assert_allclose(image_zero, image_y2, atol=1e-5)


def test_degree_is_affine_in_alpha_at_feature_level(bundle, plain_asset, styled_asset):
    src = engine.face_tensors(plain_asset)
    with torch.no_grad():
        v_x = bundle.encode(src.image.unsqueeze(0))
        full = engine.degree_style(bundle, src, styled_asset, 1.0, v_x=v_x)
        none = engine.degree_style(bundle, src, styled_asset, 0.0, v_x=v_x)
        for alpha in (0.25, 0.5, 0.75):
            mid = engine.degree_style(bundle, src, styled_asset, alpha, v_x=v_x)
            torch.testing.assert_close(
                mid.gamma, alpha * full.gamma + (1 - alpha) * none.gamma, atol=1e-6, rtol=0
            )
            torch.testing.assert_close(
                mid.beta, alpha * full.beta + (1 - alpha) * none.beta, atol=1e-6, rtol=0
            )


def test_plan_style_single_reference_full_alpha_is_plain(bundle, plain_asset, styled_asset):
    plain_bytes = encode_png(engine.transfer(plain_asset, styled_asset, bundle))
    planned = engine.run_transfer(plain_asset, [styled_asset], bundle, alpha=1.0)
    assert encode_png(planned) == plain_bytes


def test_plan_style_two_reference_alpha_zero_is_second(bundle, plain_asset, corpus):
    y1, y2 = corpus.styled[0], corpus.styled[1]
    out = engine.run_transfer(plain_asset, [y1, y2], bundle, alpha=0.0)
    expected = engine.transfer(plain_asset, y2, bundle)
    assert encode_png(out) == encode_png(expected)


def test_plan_style_two_reference_regions(bundle, plain_asset, corpus):
    y1, y2 = corpus.styled[0], corpus.styled[1]
    out = engine.run_transfer(plain_asset, [y1, y2], bundle, regions=["lip"])
    assert out.shape == plain_asset.image.shape
    assert np.isfinite(out).all()


def test_plan_style_rejects_ambiguous_two_reference_request(bundle, plain_asset, corpus):
    y1, y2 = corpus.styled[0], corpus.styled[1]
    src = engine.face_tensors(plain_asset)
    with pytest.raises(ValueError, match="not both"):
        engine.plan_style(bundle, src, [y1, y2], alpha=0.5, regions=["lip"])


def test_plan_style_input_validation(bundle, plain_asset, styled_asset):
    src = engine.face_tensors(plain_asset)
    with pytest.raises(ValueError):
        engine.plan_style(bundle, src, [])
    with pytest.raises(ValueError):
        engine.plan_style(bundle, src, [styled_asset] * 3)
    with pytest.raises(ValueError):
        engine.plan_style(bundle, src, [styled_asset], alpha=1.5)
    with pytest.raises(ValueError, match="unknown region"):
        engine.plan_style(bundle, src, [styled_asset], regions=["nose"])


def test_plan_style_region_restriction_changes_output(bundle, plain_asset, styled_asset):
    full = engine.run_transfer(plain_asset, [styled_asset], bundle)
    lips_only = engine.run_transfer(plain_asset, [styled_asset], bundle, regions=["lip"])
    assert np.any(full != lips_only)


def test_plan_style_alpha_blend_with_single_reference(bundle, plain_asset, styled_asset):
    # alpha between the reference style and the face's own style
    half = engine.run_transfer(plain_asset, [styled_asset], bundle, alpha=0.5)
    full = engine.run_transfer(plain_asset, [styled_asset], bundle, alpha=1.0)
    assert half.shape == full.shape
    assert np.any(half != full)


def test_duplicate_region_names_are_harmless(bundle, plain_asset, styled_asset, corpus):
    other = corpus.styled[1]
    once = engine.transfer_partial(plain_asset, styled_asset, other, ["lip"], bundle)
    twice = engine.transfer_partial(plain_asset, styled_asset, other, ["lip", "lip"], bundle)
    np.testing.assert_array_equal(once, twice)


def test_dump_attention_writes_heatmaps(bundle, plain_asset, styled_asset, tmp_path):
    out_dir = tmp_path / "attn"
    engine.run_transfer(plain_asset, [styled_asset], bundle, dump_attention=out_dir)
    files = list(out_dir.glob("*.png"))
    assert files


def test_video_transfer_skips_missing_frames(bundle, plain_asset, styled_asset):
    frames = [plain_asset, None, plain_asset]
    with pytest.warns(RuntimeWarning, match="frame 1"):
        outs = engine.video_transfer(frames, styled_asset, bundle)
    assert outs[1] is None
    assert outs[0] is not None and outs[2] is not None
    np.testing.assert_array_equal(outs[0], outs[2])


def test_video_transfer_background_blend_is_bit_exact(bundle, plain_asset, styled_asset):
    outs = engine.video_transfer([plain_asset], styled_asset, bundle, blend_background=True)
    out = outs[0]
    background = plain_asset.parsing == 0
    np.testing.assert_array_equal(out[:, background], plain_asset.image[:, background])
    # face pixels still change
    assert np.any(out[:, ~background] != plain_asset.image[:, ~background])


def test_face_tensors_accepts_asset_and_passthrough(plain_asset):
    ft = engine.face_tensors(plain_asset)
    assert isinstance(ft.image, torch.Tensor)
    assert ft.image.dtype == torch.float32
    again = engine.face_tensors(ft)
    assert again is ft
