"""Desk-scale evaluation metrics and the eval report writer.

Landmark cosine similarity measures geometric stability of a transfer,
identity similarity compares embeddings from a pluggable embedder (the
built-in mean-pool double needs no downloaded weights), and the region
histogram distance quantifies how closely a transferred region's color
distribution tracks the reference's.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .assets import NUM_LANDMARKS, REGION_LABELS, FaceAsset, image_to_uint8
from .engine import transfer
from .errors import ConfigurationError
from .networks import NetworkBundle


def landmark_cos_sim(lm_s, lm_t) -> float:
    """Cosine similarity of two 68-landmark sets flattened to 136-vectors."""
    a = np.asarray(lm_s, dtype=np.float64)
    b = np.asarray(lm_t, dtype=np.float64)
    if a.shape != (NUM_LANDMARKS, 2) or b.shape != (NUM_LANDMARKS, 2):
        raise ValueError(f"expected two {NUM_LANDMARKS}x2 landmark sets, got {a.shape} and {b.shape}")
    a, b = a.reshape(-1), b.reshape(-1)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-norm landmark vector")
    # rounding can push the value a hair outside [0, 1]; tiny negatives
    # (near-orthogonal sets) clamp to 0
    return float(min(max(float(a @ b) / (na * nb), 0.0), 1.0))


class Embedder(Protocol):
    def __call__(self, image: np.ndarray) -> np.ndarray: ...


class MeanPoolEmbedder:
    """Deterministic embedder double: the per-channel mean as a 3-vector."""

    name = "mean-pool"

    def __call__(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 3 or image.shape[0] != 3:
            raise ValueError(f"expected a 3xHxW image, got {image.shape}")
        return image.mean(axis=(1, 2))


def identity_similarity(a: np.ndarray, b: np.ndarray, embedder: Embedder) -> float:
    """Cosine similarity of the two images' embeddings."""
    if embedder is None:
        raise ConfigurationError("identity similarity requires an embedder adapter")
    ea = np.asarray(embedder(a), dtype=np.float64).reshape(-1)
    eb = np.asarray(embedder(b), dtype=np.float64).reshape(-1)
    na, nb = np.linalg.norm(ea), np.linalg.norm(eb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-norm embedding")
    return float(ea @ eb / (na * nb))


def _channel_cdf(values: np.ndarray) -> np.ndarray:
    return np.cumsum(np.bincount(values, minlength=256)) / values.size


def region_hist_distance(img_a, parsing_a, img_b, parsing_b, region: str) -> float:
    """Mean over RGB of the Wasserstein-1 distance between the region's
    8-bit channel histograms, in [0, 1] gray-level units (255 levels = 1)."""
    if region not in REGION_LABELS:
        raise ValueError(f"unknown region {region!r}")
    label = REGION_LABELS[region]
    mask_a = np.asarray(parsing_a) == label
    mask_b = np.asarray(parsing_b) == label
    if not mask_a.any() or not mask_b.any():
        raise ValueError(f"region {region!r} empty in one of the images")
    ua = image_to_uint8(np.asarray(img_a))
    ub = image_to_uint8(np.asarray(img_b))
    per_channel = [
        np.abs(_channel_cdf(ua[mask_a, c]) - _channel_cdf(ub[mask_b, c])).sum() / 255.0
        for c in range(3)
    ]
    return float(np.mean(per_channel))


def eval_pair(
    bundle: NetworkBundle,
    x: FaceAsset,
    y1: FaceAsset,
    embedder: Embedder | None = None,
    detector: Callable[[np.ndarray], np.ndarray] | None = None,
    w: float = 0.01,
) -> dict:
    """Metrics for one transfer: geometric stability, identity, color fit.

    Without a landmark detector adapter the transferred image reuses the
    source's stored landmarks (the transfer is spatially aligned by
    construction). The transferred image also shares the source parsing.
    """
    out = transfer(x, y1, bundle, w)
    out_landmarks = detector(out) if detector is not None else x.landmarks
    record = {
        "pair_id": f"{x.id}:{y1.id}",
        "cos_sim": landmark_cos_sim(x.landmarks, out_landmarks),
        "region_distances": {
            region: region_hist_distance(out, x.parsing, y1.image, y1.parsing, region)
            for region in REGION_LABELS
        },
    }
    if embedder is not None:
        record["identity_sim"] = identity_similarity(x.image, out, embedder)
    return record


def write_eval_report(
    bundle: NetworkBundle,
    plain: list[FaceAsset],
    styled: list[FaceAsset],
    out_path,
    embedder: Embedder | None = None,
    w: float = 0.01,
) -> Path:
    """All (plain x styled) pairs, one JSON line each; returns the path."""
    out_path = Path(out_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for x in plain:
            for y1 in styled:
                fh.write(json.dumps(eval_pair(bundle, x, y1, embedder=embedder, w=w)) + "\n")
    return out_path
