"""Attentive makeup morphing: re-maps a reference face's spatial makeup
parameters onto the source face geometry.

Every source feature pixel attends over reference pixels of the same
facial region. The attention score concatenates down-weighted visual
features with unit-normalized landmark-relative position vectors, so
pixels at similar positions relative to the face anchors exchange makeup
even when poses differ. All operations are pure and differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .assets import FACE_LABELS, LABEL_BACKGROUND


def _as_tensor(x, dtype=None) -> torch.Tensor:
    t = torch.as_tensor(x)
    if dtype is not None:
        t = t.to(dtype)
    return t


def rel_pos_features(height: int, width: int, landmarks) -> torch.Tensor:
    """Per-pixel coordinate differences to the 68 anchors, shape (H*W)x136.

    Row i holds the 68 horizontal differences followed by the 68 vertical
    ones, for pixel i in row-major order. Landmarks must already be
    expressed in feature-grid coordinates. No normalization here.
    """
    lm = _as_tensor(landmarks, torch.float64)
    ys, xs = torch.meshgrid(
        torch.arange(height, dtype=lm.dtype),
        torch.arange(width, dtype=lm.dtype),
        indexing="ij",
    )
    fx = xs.reshape(-1, 1) - lm[:, 0].reshape(1, -1)
    gy = ys.reshape(-1, 1) - lm[:, 1].reshape(1, -1)
    return torch.cat([fx, gy], dim=1)


def _unit_rows(p: torch.Tensor) -> torch.Tensor:
    # zero-norm rows stay zero instead of dividing by zero
    norm = torch.linalg.norm(p, dim=1, keepdim=True)
    return torch.where(norm > 0, p / norm.clamp_min(torch.finfo(p.dtype).tiny), torch.zeros_like(p))


@dataclass
class AttentionMatrix:
    """Row-stochastic morphing weights plus a per-row validity flag.

    Rows flagged invalid (background pixels, or source pixels whose region
    is absent from the reference) are all-zero and morph to the identity
    parameters downstream.
    """

    data: torch.Tensor   # (H'W') x (H'W'), rows sum to 1 where valid
    valid: torch.Tensor  # (H'W') bool
    scores: torch.Tensor  # masked pre-softmax scores, for visualization


def attentive_matrix(v_x, v_y, p_x, p_y, m_x, m_y, w: float) -> AttentionMatrix:
    """Masked softmax attention between source and reference feature pixels.

    v_x, v_y: CxH'xW' visual features; p_x, p_y: (H'W')x136 relative
    position features; m_x, m_y: H'xW' parsing labels at feature scale;
    w: weight applied to visual features before concatenation.
    """
    if w < 0:
        raise ValueError(f"visual feature weight must be >= 0, got {w}")
    v_x = _as_tensor(v_x)
    v_y = _as_tensor(v_y, v_x.dtype)
    p_x = _as_tensor(p_x, v_x.dtype)
    p_y = _as_tensor(p_y, v_x.dtype)
    for name, t in (("v_x", v_x), ("v_y", v_y), ("p_x", p_x), ("p_y", p_y)):
        if not torch.isfinite(t).all():
            raise ValueError(f"non-finite values in {name}")
    hw = v_x.shape[1] * v_x.shape[2]
    if v_y.shape != v_x.shape or p_x.shape[0] != hw or p_y.shape[0] != hw:
        raise ValueError("source/reference shapes disagree")

    feats_x = torch.cat([w * v_x.reshape(v_x.shape[0], hw).T, _unit_rows(p_x)], dim=1)
    feats_y = torch.cat([w * v_y.reshape(v_y.shape[0], hw).T, _unit_rows(p_y)], dim=1)
    scores = feats_x @ feats_y.T

    labels_x = _as_tensor(np.asarray(m_x)).reshape(-1)
    labels_y = _as_tensor(np.asarray(m_y)).reshape(-1)
    allowed = labels_x.unsqueeze(1) == labels_y.unsqueeze(0)
    allowed &= (labels_x != LABEL_BACKGROUND).unsqueeze(1)
    allowed &= (labels_y != LABEL_BACKGROUND).unsqueeze(0)
    valid = allowed.any(dim=1)

    # subtract the per-row max over allowed entries before exponentiation;
    # exp overflows otherwise at large w * <V, V>
    lowest = torch.finfo(scores.dtype).min
    rowmax = torch.where(allowed, scores, torch.full_like(scores, lowest)).max(dim=1, keepdim=True).values
    rowmax = torch.where(valid.unsqueeze(1), rowmax, torch.zeros_like(rowmax))
    shifted = torch.where(allowed, scores - rowmax, torch.zeros_like(scores))
    expo = torch.where(allowed, torch.exp(shifted), torch.zeros_like(scores))
    denom = expo.sum(dim=1, keepdim=True)
    attn = expo / denom.clamp_min(torch.finfo(scores.dtype).tiny)
    return AttentionMatrix(data=attn, valid=valid, scores=torch.where(allowed, scores, torch.zeros_like(scores)))


def morph_params(attn: AttentionMatrix, gamma, beta) -> tuple[torch.Tensor, torch.Tensor]:
    """Morph 1xH'xW' makeup parameter maps through the attention weights.

    Invalid rows fall back to the identity modulation (gamma 1, beta 0) so
    background pixels never import makeup.
    """
    gamma = _as_tensor(gamma, attn.data.dtype)
    beta = _as_tensor(beta, attn.data.dtype)
    shape = gamma.shape
    morphed_g = attn.data @ gamma.reshape(-1)
    morphed_b = attn.data @ beta.reshape(-1)
    morphed_g = torch.where(attn.valid, morphed_g, torch.ones_like(morphed_g))
    morphed_b = torch.where(attn.valid, morphed_b, torch.zeros_like(morphed_b))
    return morphed_g.reshape(shape), morphed_b.reshape(shape)


def expand_to_tensors(gamma, beta, channels: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Duplicate 1xH'xW' maps along the channel axis to CxH'xW' tensors."""
    if channels < 1:
        raise ValueError(f"channels must be >= 1, got {channels}")
    gamma = _as_tensor(gamma)
    beta = _as_tensor(beta, gamma.dtype)
    return gamma.expand(channels, -1, -1), beta.expand(channels, -1, -1)


def apply_style(features, gamma_t, beta_t) -> torch.Tensor:
    """Elementwise feature modulation: gamma * V + beta."""
    features = _as_tensor(features)
    gamma_t = _as_tensor(gamma_t, features.dtype)
    beta_t = _as_tensor(beta_t, features.dtype)
    if gamma_t.shape != features.shape or beta_t.shape != features.shape:
        raise ValueError(
            f"style tensors {tuple(gamma_t.shape)} do not match features {tuple(features.shape)}"
        )
    return gamma_t * features + beta_t


def compose_partial(masks, params) -> tuple[torch.Tensor, torch.Tensor]:
    """Stitch per-region style tensors with binary H'xW' masks.

    Masks must be pairwise disjoint; pixels no mask covers get the
    identity modulation.
    """
    if not masks or len(masks) != len(params):
        raise ValueError("one mask per parameter set required, at least one of each")
    masks_t = [_as_tensor(np.asarray(m)).to(params[0][0].dtype) for m in masks]
    total = sum(masks_t)
    if (total > 1).any():
        raise ValueError("overlapping region masks")
    gamma = 1.0 - total  # uncovered pixels keep gamma 1
    beta = torch.zeros_like(total)
    for mask, (g, b) in zip(masks_t, params):
        gamma = gamma + mask * g
        beta = beta + mask * b
    return gamma, beta


def compose_interpolated(alpha: float, params1, params2) -> tuple[torch.Tensor, torch.Tensor]:
    """Convex combination of two style tensor sets, alpha weighting the first."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    g1, b1 = params1
    g2, b2 = params2
    return alpha * g1 + (1.0 - alpha) * g2, alpha * b1 + (1.0 - alpha) * b2


def face_region_masks(parsing, regions, dtype=torch.float32) -> torch.Tensor:
    """Binary H'xW' mask of the pixels whose label is in the region set."""
    labels = _as_tensor(np.asarray(parsing))
    mask = torch.zeros_like(labels, dtype=dtype)
    for label in regions:
        mask = mask + (labels == label).to(dtype)
    return mask.clamp(max=1.0)


def export_attention_heatmaps(attn: AttentionMatrix, height: int, width: int,
                              out_dir: str | Path, pixels=None) -> list[Path]:
    """Dump attention rows as grayscale PNG heatmaps for debugging.

    For each requested source pixel index, writes the post-softmax row and
    the masked pre-softmax score row reshaped to H'xW'. Returns the paths.
    """
    from PIL import Image

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if pixels is None:
        pixels = torch.nonzero(attn.valid).reshape(-1).tolist()[:: max(1, attn.data.shape[0] // 16)]
    paths = []
    for i in pixels:
        for tag, row in (("softmax", attn.data[i]), ("score", attn.scores[i])):
            grid = row.detach().to(torch.float64).reshape(height, width).cpu().numpy()
            peak = grid.max()
            scaled = np.zeros_like(grid) if peak <= 0 else np.clip(grid / peak, 0.0, 1.0)
            img = Image.fromarray((scaled * 255).astype(np.uint8), mode="L")
            path = out / f"attn_{tag}_px{i:05d}.png"
            img.save(path, format="PNG")
            paths.append(path)
    return paths
