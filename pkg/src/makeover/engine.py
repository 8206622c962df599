"""Inference paths: full transfer, removal, partial and graded styling, video.

Every path shares one recipe: encode the source face, obtain spatial
scale/shift style maps (morphed from a reference through attention, or
distilled from the image itself for removal), modulate the bottleneck
features and decode. Partial styling stitches two references' style maps
under region masks; degree control blends them by a coefficient. All
functions here are pure given a loaded network bundle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch

from .assets import LABEL_BACKGROUND, REGION_LABELS, FaceAsset, downscale_parsing, scale_landmarks
from .morphing import (
    AttentionMatrix,
    apply_style,
    attentive_matrix,
    compose_interpolated,
    compose_partial,
    expand_to_tensors,
    export_attention_heatmaps,
    face_region_masks,
    morph_params,
    rel_pos_features,
)
from .networks import NetworkBundle

DEFAULT_VISUAL_WEIGHT = 0.01


@dataclass
class FaceTensors:
    """A face image as a torch tensor plus the metadata attention needs.

    The image may carry gradients (the trainer routes generated images
    back through the styling path); parsing and landmarks are plain
    arrays in full-resolution pixel coordinates.
    """

    image: torch.Tensor
    parsing: np.ndarray
    landmarks: np.ndarray


def face_tensors(obj: FaceAsset | FaceTensors, dtype=torch.float32) -> FaceTensors:
    if isinstance(obj, FaceTensors):
        return obj
    return FaceTensors(
        image=torch.from_numpy(obj.image).to(dtype),
        parsing=obj.parsing,
        landmarks=obj.landmarks,
    )


@dataclass
class StyleMaps:
    """Spatial modulation maps at feature resolution, shape H'xW' each."""

    gamma: torch.Tensor
    beta: torch.Tensor


def _feature_factor(bundle: NetworkBundle) -> int:
    return bundle.meta.input_size // bundle.meta.bottleneck_size


def reference_style(
    bundle: NetworkBundle,
    source: FaceAsset | FaceTensors,
    reference: FaceAsset | FaceTensors,
    w: float = DEFAULT_VISUAL_WEIGHT,
    v_x: torch.Tensor | None = None,
    keep_attention: bool = False,
) -> tuple[StyleMaps, AttentionMatrix | None]:
    """Distill the reference's makeup and morph it onto the source geometry.

    Pass v_x (the already-encoded source features, 1xCxH'xW') to avoid a
    second encoder pass; attention uses those same features visually.
    """
    src = face_tensors(source)
    ref = face_tensors(reference)
    meta = bundle.meta
    if v_x is None:
        v_x = bundle.encode(src.image.unsqueeze(0))
    gamma_ref, beta_ref, v_ref = bundle.distill_makeup(ref.image.unsqueeze(0))
    factor = _feature_factor(bundle)
    side = meta.bottleneck_size
    attn = attentive_matrix(
        v_x[0],
        v_ref[0],
        rel_pos_features(side, side, scale_landmarks(src.landmarks, factor)),
        rel_pos_features(side, side, scale_landmarks(ref.landmarks, factor)),
        downscale_parsing(src.parsing, factor),
        downscale_parsing(ref.parsing, factor),
        w,
    )
    gamma, beta = morph_params(attn, gamma_ref[0, 0], beta_ref[0, 0])
    return StyleMaps(gamma, beta), (attn if keep_attention else None)


def identity_style(bundle: NetworkBundle, styled_image: torch.Tensor) -> StyleMaps:
    """Distill bare-face modulation maps from a styled image (no attention)."""
    gamma, beta = bundle.distill_identity(styled_image.unsqueeze(0))
    return StyleMaps(gamma[0, 0], beta[0, 0])


def styled_image(bundle: NetworkBundle, v_x: torch.Tensor, maps: StyleMaps) -> torch.Tensor:
    """Modulate encoded features with style maps and decode to a 3xHxW image."""
    gamma_t, beta_t = expand_to_tensors(
        maps.gamma.unsqueeze(0), maps.beta.unsqueeze(0), v_x.shape[1]
    )
    return bundle.decode(apply_style(v_x[0], gamma_t, beta_t).unsqueeze(0))[0]


def _as_image_array(tensor: torch.Tensor) -> np.ndarray:
    return tensor.detach().cpu().numpy().astype(np.float32, copy=False)


def _dump(attn: AttentionMatrix | None, bundle: NetworkBundle, dump_attention) -> None:
    if attn is not None and dump_attention is not None:
        side = bundle.meta.bottleneck_size
        export_attention_heatmaps(attn, side, side, dump_attention)


def transfer(
    x: FaceAsset,
    y1: FaceAsset,
    bundle: NetworkBundle,
    w: float = DEFAULT_VISUAL_WEIGHT,
    dump_attention: str | Path | None = None,
) -> np.ndarray:
    """Apply y1's makeup to x; returns a float32 3xHxW image in [-1, 1]."""
    with torch.no_grad():
        src = face_tensors(x)
        v_x = bundle.encode(src.image.unsqueeze(0))
        maps, attn = reference_style(
            bundle, src, y1, w, v_x=v_x, keep_attention=dump_attention is not None
        )
        out = styled_image(bundle, v_x, maps)
    _dump(attn, bundle, dump_attention)
    return _as_image_array(out)


def remove(y_r: FaceAsset, bundle: NetworkBundle) -> np.ndarray:
    """Strip makeup from y_r using its own distilled identity maps."""
    with torch.no_grad():
        src = face_tensors(y_r)
        v = bundle.encode(src.image.unsqueeze(0))
        out = styled_image(bundle, v, identity_style(bundle, src.image))
    return _as_image_array(out)


def _region_labels(regions: Iterable[str]) -> list[int]:
    labels = set()
    for name in regions:
        if name not in REGION_LABELS:
            raise ValueError(f"unknown region {name!r}; expected subset of {sorted(REGION_LABELS)}")
        labels.add(REGION_LABELS[name])
    return sorted(labels)


def partial_style(
    bundle: NetworkBundle,
    source: FaceAsset | FaceTensors,
    y1: FaceAsset | FaceTensors,
    y2: FaceAsset | FaceTensors,
    regions_from_y1: Iterable[str],
    w: float = DEFAULT_VISUAL_WEIGHT,
    v_x: torch.Tensor | None = None,
) -> StyleMaps:
    """Stitch style maps: selected regions from y1, remaining face from y2.

    Masks come from the source parsing map at feature resolution;
    background keeps the identity modulation.
    """
    src = face_tensors(source)
    if v_x is None:
        v_x = bundle.encode(src.image.unsqueeze(0))
    wanted = _region_labels(regions_from_y1)
    complement = [label for label in REGION_LABELS.values() if label not in wanted]
    maps1, _ = reference_style(bundle, src, y1, w, v_x=v_x)
    maps2, _ = reference_style(bundle, src, y2, w, v_x=v_x)
    parsing_small = downscale_parsing(src.parsing, _feature_factor(bundle))
    dtype = maps1.gamma.dtype
    masks = [
        face_region_masks(parsing_small, wanted, dtype=dtype),
        face_region_masks(parsing_small, complement, dtype=dtype),
    ]
    gamma, beta = compose_partial(masks, [(maps1.gamma, maps1.beta), (maps2.gamma, maps2.beta)])
    return StyleMaps(gamma, beta)


def transfer_partial(
    x: FaceAsset,
    y1: FaceAsset,
    y2: FaceAsset,
    regions_from_y1: Iterable[str],
    bundle: NetworkBundle,
    w: float = DEFAULT_VISUAL_WEIGHT,
) -> np.ndarray:
    """Makeup from y1 on the chosen regions, from y2 elsewhere on the face."""
    with torch.no_grad():
        src = face_tensors(x)
        v_x = bundle.encode(src.image.unsqueeze(0))
        maps = partial_style(bundle, src, y1, y2, regions_from_y1, w, v_x=v_x)
        out = styled_image(bundle, v_x, maps)
    return _as_image_array(out)


def degree_style(
    bundle: NetworkBundle,
    source: FaceAsset | FaceTensors,
    y1: FaceAsset | FaceTensors,
    alpha: float,
    y2: FaceAsset | FaceTensors | None = None,
    w: float = DEFAULT_VISUAL_WEIGHT,
    v_x: torch.Tensor | None = None,
) -> StyleMaps:
    """Blend two references' style maps; y2 defaults to the source itself."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    src = face_tensors(source)
    if v_x is None:
        v_x = bundle.encode(src.image.unsqueeze(0))
    maps1, _ = reference_style(bundle, src, y1, w, v_x=v_x)
    maps2, _ = reference_style(bundle, src, y2 if y2 is not None else src, w, v_x=v_x)
    gamma, beta = compose_interpolated(
        alpha, (maps1.gamma, maps1.beta), (maps2.gamma, maps2.beta)
    )
    return StyleMaps(gamma, beta)


def transfer_degree(
    x: FaceAsset,
    y1: FaceAsset,
    alpha: float,
    bundle: NetworkBundle,
    y2: FaceAsset | None = None,
    w: float = DEFAULT_VISUAL_WEIGHT,
) -> np.ndarray:
    """Apply y1's makeup at strength alpha (1 = full, 0 = the y2/self style)."""
    with torch.no_grad():
        src = face_tensors(x)
        v_x = bundle.encode(src.image.unsqueeze(0))
        maps = degree_style(bundle, src, y1, alpha, y2=y2, w=w, v_x=v_x)
        out = styled_image(bundle, v_x, maps)
    return _as_image_array(out)


def plan_style(
    bundle: NetworkBundle,
    source: FaceAsset | FaceTensors,
    references: Sequence[FaceAsset | FaceTensors],
    alpha: float = 1.0,
    regions: Iterable[str] | None = None,
    w: float = DEFAULT_VISUAL_WEIGHT,
    v_x: torch.Tensor | None = None,
) -> StyleMaps:
    """One composition rule for every styled request shape.

    With two references, regions splits the face between them and alpha
    blends between them; asking for both at once is ambiguous and
    rejected. With one reference, regions limits which parts take the
    reference's makeup (the rest keeps the source's own style) and alpha
    scales the whole result toward the source's self-style, so alpha=1
    with no region limit is exactly the plain transfer.
    """
    if not 1 <= len(references) <= 2:
        raise ValueError(f"one or two references required, got {len(references)}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    src = face_tensors(source)
    if v_x is None:
        v_x = bundle.encode(src.image.unsqueeze(0))
    if len(references) == 2:
        y1, y2 = references
        if regions is not None and alpha != 1.0:
            raise ValueError(
                "with two references, choose a region split or a degree blend, not both"
            )
        if regions is not None:
            return partial_style(bundle, src, y1, y2, regions, w, v_x=v_x)
        return degree_style(bundle, src, y1, alpha, y2=y2, w=w, v_x=v_x)
    y1 = references[0]
    if regions is None:
        target, _ = reference_style(bundle, src, y1, w, v_x=v_x)
    else:
        target = partial_style(bundle, src, y1, src, regions, w, v_x=v_x)
    if alpha == 1.0:
        return target
    self_maps, _ = reference_style(bundle, src, src, w, v_x=v_x)
    gamma, beta = compose_interpolated(
        alpha, (target.gamma, target.beta), (self_maps.gamma, self_maps.beta)
    )
    return StyleMaps(gamma, beta)


def run_transfer(
    x: FaceAsset,
    references: Sequence[FaceAsset],
    bundle: NetworkBundle,
    alpha: float = 1.0,
    regions: Iterable[str] | None = None,
    w: float = DEFAULT_VISUAL_WEIGHT,
    dump_attention: str | Path | None = None,
) -> np.ndarray:
    """Styled-request entry point shared by the CLI and the HTTP service."""
    with torch.no_grad():
        src = face_tensors(x)
        v_x = bundle.encode(src.image.unsqueeze(0))
        maps = plan_style(bundle, src, references, alpha, regions, w, v_x=v_x)
        out = styled_image(bundle, v_x, maps)
        attn = None
        if dump_attention is not None:
            _, attn = reference_style(bundle, src, references[0], w, v_x=v_x, keep_attention=True)
    _dump(attn, bundle, dump_attention)
    return _as_image_array(out)


def video_transfer(
    frames: Sequence[FaceAsset | None],
    y1: FaceAsset,
    bundle: NetworkBundle,
    blend_background: bool = False,
    w: float = DEFAULT_VISUAL_WEIGHT,
) -> list[np.ndarray | None]:
    """Frame-wise transfer; None entries (missing metadata) are skipped.

    With blend_background, output pixels the frame's parsing labels as
    background are copied bit-exactly from the source frame.
    """
    outputs: list[np.ndarray | None] = []
    for index, frame in enumerate(frames):
        if frame is None:
            warnings.warn(f"frame {index} missing metadata, skipped", RuntimeWarning, stacklevel=2)
            outputs.append(None)
            continue
        out = transfer(frame, y1, bundle, w)
        if blend_background:
            background = frame.parsing == LABEL_BACKGROUND
            out[:, background] = frame.image[:, background]
        outputs.append(out)
    return outputs
