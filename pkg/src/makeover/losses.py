"""Training objectives: adversarial, cycle, perceptual, region, detail.

The adversarial terms use the vanilla non-saturating log loss on patch
discriminator output, with probabilities clamped to [eps, 1-eps] so logs
never diverge at saturation. The region term compares the transferred
image against a pseudo ground truth built by per-region, per-channel
histogram matching of the source face to the reference face. The detail
term penalizes L1 differences at densely corresponded landmark points,
sampled bilinearly because aligners emit fractional coordinates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol

import numpy as np
import torch

from .assets import REGION_LABELS, FaceAsset, image_to_uint8
from .errors import ConfigurationError, NumericalError

PROB_EPS = 1e-7

GENERATOR_TERMS = ("adv_g", "cycle", "perceptual", "region", "detail")


@dataclass(frozen=True)
class LossWeights:
    adversarial: float = 1.0
    cycle: float = 10.0
    perceptual: float = 0.005
    region: float = 1.0
    detail: float = 3.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"loss weight {name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class LossReport:
    adv_g: float
    cycle: float
    perceptual: float
    region: float
    detail: float
    adv_d: float
    total_g: float
    total_d: float

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def _log_prob(logits: torch.Tensor, of_real: bool) -> torch.Tensor:
    prob = torch.sigmoid(logits)
    if not of_real:
        prob = 1.0 - prob
    return torch.log(prob.clamp(PROB_EPS, 1.0 - PROB_EPS))


def adv_loss_d(
    disc_plain: Callable[[torch.Tensor], torch.Tensor],
    disc_makeup: Callable[[torch.Tensor], torch.Tensor],
    real_plain: torch.Tensor,
    real_makeup: torch.Tensor,
    fake_plain: torch.Tensor,
    fake_makeup: torch.Tensor,
) -> torch.Tensor:
    """Patch-averaged log loss pushing D to 1 on real and 0 on generated."""
    return (
        -_log_prob(disc_plain(real_plain), of_real=True).mean()
        - _log_prob(disc_makeup(real_makeup), of_real=True).mean()
        - _log_prob(disc_plain(fake_plain.detach()), of_real=False).mean()
        - _log_prob(disc_makeup(fake_makeup.detach()), of_real=False).mean()
    )


def adv_loss_g(
    disc_plain: Callable[[torch.Tensor], torch.Tensor],
    disc_makeup: Callable[[torch.Tensor], torch.Tensor],
    fake_plain: torch.Tensor,
    fake_makeup: torch.Tensor,
) -> torch.Tensor:
    """Non-saturating generator loss: -log D on generated images."""
    return (
        -_log_prob(disc_plain(fake_plain), of_real=True).mean()
        - _log_prob(disc_makeup(fake_makeup), of_real=True).mean()
    )


def cycle_loss(
    plain: torch.Tensor,
    plain_rec: torch.Tensor,
    makeup: torch.Tensor,
    makeup_rec: torch.Tensor,
) -> torch.Tensor:
    """Mean absolute reconstruction error, one term per direction."""
    if plain.shape != plain_rec.shape or makeup.shape != makeup_rec.shape:
        raise ValueError("reconstruction shape mismatch")
    return (plain_rec - plain).abs().mean() + (makeup_rec - makeup).abs().mean()


class FeatureExtractor(Protocol):
    def __call__(self, image: torch.Tensor) -> torch.Tensor: ...


class IdentityFeatures:
    """Deterministic test double: the image is its own feature map."""

    name = "identity"

    def __call__(self, image: torch.Tensor) -> torch.Tensor:
        return image


class Vgg16Features:
    """Pretrained VGG-16 activations at the fourth block's first ReLU."""

    name = "vgg16"

    def __init__(self):
        try:
            from torchvision import models

            weights = models.VGG16_Weights.IMAGENET1K_V1
            vgg = models.vgg16(weights=weights)
        except Exception as exc:
            raise ConfigurationError(
                f"pretrained perceptual extractor unavailable: {exc}"
            ) from exc
        self.layers = vgg.features[:19].eval()
        for p in self.layers.parameters():
            p.requires_grad_(False)

    def __call__(self, image: torch.Tensor) -> torch.Tensor:
        # networks produce [-1, 1]; the pretrained stack expects [0, 1] then
        # channel standardization
        mean = image.new_tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)
        std = image.new_tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)
        batched = image if image.ndim == 4 else image.unsqueeze(0)
        return self.layers(((batched + 1.0) / 2.0 - mean) / std)


def make_feature_extractor(name: str) -> FeatureExtractor:
    if name == "identity":
        return IdentityFeatures()
    if name == "vgg16":
        return Vgg16Features()
    raise ConfigurationError(f"unknown perceptual feature extractor {name!r}")


def perceptual_loss(a: torch.Tensor, b: torch.Tensor, extractor: FeatureExtractor) -> torch.Tensor:
    if extractor is None:
        raise ConfigurationError("perceptual loss requires a feature extractor")
    fa, fb = extractor(a), extractor(b)
    if fa.shape != fb.shape:
        raise ValueError("feature shape mismatch between compared images")
    return (fa - fb).pow(2).mean()


def histogram_match_channel(src: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Remap 8-bit values of src so their distribution matches ref's.

    Each level maps to the smallest reference level whose cumulative
    frequency reaches the source level's cumulative frequency.
    """
    src = np.asarray(src, dtype=np.uint8).ravel()
    ref = np.asarray(ref, dtype=np.uint8).ravel()
    if src.size == 0 or ref.size == 0:
        raise ValueError("histogram matching requires non-empty pixel populations")
    src_cdf = np.cumsum(np.bincount(src, minlength=256)) / src.size
    ref_cdf = np.cumsum(np.bincount(ref, minlength=256)) / ref.size
    mapping = np.searchsorted(ref_cdf, src_cdf, side="left")
    return mapping.clip(0, 255).astype(np.uint8)[src]


def build_pseudo_gt(x: FaceAsset, y1: FaceAsset) -> np.ndarray:
    """Recolor each face region of x to match y1's region statistics.

    Returns a float32 3xHxW image in [-1, 1]. Background pixels keep the
    exact bytes of x. A region empty in either face stays as in x.
    """
    out = np.array(x.image, copy=True)
    src_u8 = image_to_uint8(x.image)
    ref_u8 = image_to_uint8(y1.image)
    for name, label in REGION_LABELS.items():
        src_mask = x.parsing == label
        ref_mask = y1.parsing == label
        if not src_mask.any() or not ref_mask.any():
            warnings.warn(f"region {name} empty, left unmatched", RuntimeWarning, stacklevel=2)
            continue
        for c in range(3):
            matched = histogram_match_channel(src_u8[src_mask, c], ref_u8[ref_mask, c])
            out[c][src_mask] = matched.astype(np.float32) / 127.5 - 1.0
    return out


def region_loss(transferred: torch.Tensor, pseudo_gt: torch.Tensor) -> torch.Tensor:
    if transferred.shape != pseudo_gt.shape:
        raise ValueError("transferred and pseudo ground truth shapes differ")
    return (transferred - pseudo_gt).pow(2).mean()


def _bilinear_sample(image: torch.Tensor, points: torch.Tensor) -> torch.Tensor:
    """Sample a 3xHxW image at K fractional (x, y) points; returns 3xK."""
    height, width = image.shape[-2:]
    x, y = points[:, 0], points[:, 1]
    if ((x < 0) | (x > width - 1) | (y < 0) | (y > height - 1)).any():
        raise ValueError("sample point outside image bounds")
    x0 = x.floor().clamp(max=width - 2).long() if width > 1 else x.long() * 0
    y0 = y.floor().clamp(max=height - 2).long() if height > 1 else y.long() * 0
    x1 = (x0 + 1).clamp(max=width - 1)
    y1 = (y0 + 1).clamp(max=height - 1)
    wx = (x - x0).to(image.dtype)
    wy = (y - y0).to(image.dtype)
    top = image[:, y0, x0] * (1 - wx) + image[:, y0, x1] * wx
    bottom = image[:, y1, x0] * (1 - wx) + image[:, y1, x1] * wx
    return top * (1 - wy) + bottom * wy


def detail_loss(
    transferred: torch.Tensor,
    reference: torch.Tensor,
    points_transferred: torch.Tensor,
    points_reference: torch.Tensor,
) -> torch.Tensor:
    """Mean absolute channel difference at corresponding landmark points."""
    if points_transferred.shape != points_reference.shape:
        raise ValueError("correspondence point sets differ in shape")
    if points_transferred.shape[0] == 0:
        raise ValueError("correspondence is empty")
    sampled_t = _bilinear_sample(transferred, points_transferred)
    sampled_r = _bilinear_sample(reference, points_reference)
    return (sampled_t - sampled_r).abs().mean()


def weighted_totals(terms: Mapping[str, object], weights: LossWeights):
    """Weighted generator and discriminator totals; works on floats or tensors."""
    total_g = (
        weights.adversarial * terms.get("adv_g", 0.0)
        + weights.cycle * terms.get("cycle", 0.0)
        + weights.perceptual * terms.get("perceptual", 0.0)
        + weights.region * terms.get("region", 0.0)
        + weights.detail * terms.get("detail", 0.0)
    )
    total_d = weights.adversarial * terms.get("adv_d", 0.0)
    return total_g, total_d


def total_losses(terms: Mapping[str, object], weights: LossWeights) -> LossReport:
    values: dict[str, float] = {}
    for name in (*GENERATOR_TERMS, "adv_d"):
        value = terms.get(name, 0.0)
        value = float(value.detach().cpu()) if isinstance(value, torch.Tensor) else float(value)
        if not math.isfinite(value):
            raise NumericalError(f"loss term {name} is not finite: {value}")
        values[name] = value
    total_g, total_d = weighted_totals(values, weights)
    return LossReport(total_g=total_g, total_d=total_d, **values)
