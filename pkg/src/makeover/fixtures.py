"""Deterministic procedural face fixtures for desk-scale training and tests.

Each fixture pair shares one analytic face geometry (skin ellipse, two eye
ellipses, one lip ellipse) rendered twice: a plain variant with a neutral
palette and a makeup variant with seed-derived lip/eye hues, cheek blush
and a nose highlight. Parsing maps and the 68 landmarks are derived from
the same ellipse equations, so they are exact by construction.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import assets
from .assets import FaceAsset, Manifest, ManifestRecord


@dataclass
class _Geometry:
    size: int
    cx: float
    cy: float
    ax: float   # face ellipse semi-axes
    ay: float
    eye_dx: float
    eye_dy: float
    eax: float  # eye ellipse semi-axes
    eay: float
    lcy: float  # lip center y
    lax: float  # lip ellipse semi-axes
    lay: float


def _draw_geometry(rng: np.random.Generator, size: int) -> _Geometry:
    s = float(size)
    return _Geometry(
        size=size,
        cx=s * rng.uniform(0.48, 0.52),
        cy=s * rng.uniform(0.50, 0.54),
        ax=s * rng.uniform(0.28, 0.32),
        ay=s * rng.uniform(0.38, 0.42),
        eye_dx=s * 0.13,
        eye_dy=s * 0.12,
        eax=s * 0.055,
        eay=s * 0.035,
        lcy=s * 0.22,
        lax=s * 0.10,
        lay=s * 0.045,
    )


def _inside(xx, yy, cx, cy, ax, ay):
    return ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2 <= 1.0


def _parsing_map(g: _Geometry) -> np.ndarray:
    yy, xx = np.mgrid[0 : g.size, 0 : g.size].astype(np.float64)
    labels = np.zeros((g.size, g.size), dtype=np.int64)
    labels[_inside(xx, yy, g.cx, g.cy, g.ax, g.ay)] = assets.LABEL_SKIN
    for sign in (-1.0, 1.0):
        ecx, ecy = g.cx + sign * g.eye_dx, g.cy - g.eye_dy
        labels[_inside(xx, yy, ecx, ecy, g.eax, g.eay)] = assets.LABEL_EYE
    labels[_inside(xx, yy, g.cx, g.cy + g.lcy, g.lax, g.lay)] = assets.LABEL_LIP
    return labels


def _ellipse_arc(cx, cy, ax, ay, angles) -> list[tuple[float, float]]:
    return [(cx + ax * np.cos(t), cy + ay * np.sin(t)) for t in angles]


def _landmarks(g: _Geometry) -> np.ndarray:
    s = float(g.size)
    pts: list[tuple[float, float]] = []
    # 0..16 jaw: lower half of the skin ellipse, landmark 0 exactly on it
    pts += _ellipse_arc(g.cx, g.cy, g.ax, g.ay, [i * np.pi / 16 for i in range(17)])
    # 17..26 brows: shallow arcs above each eye
    for sign in (1.0, -1.0):
        ecx, ecy = g.cx + sign * g.eye_dx, g.cy - g.eye_dy - s * 0.07
        pts += [(ecx + f * 1.2 * g.eax, ecy - (1 - abs(f)) * s * 0.01) for f in (-1, -0.5, 0, 0.5, 1)]
    # 27..30 nose bridge, 31..35 nose base
    pts += [(g.cx, g.cy - s * 0.10 + i * s * 0.05) for i in range(4)]
    pts += [(g.cx + f * s * 0.03, g.cy + s * 0.07) for f in (-2, -1, 0, 1, 2)]
    # 36..47 eye contours, six points per eye ellipse
    for sign in (1.0, -1.0):
        ecx, ecy = g.cx + sign * g.eye_dx, g.cy - g.eye_dy
        pts += _ellipse_arc(ecx, ecy, g.eax, g.eay, [i * np.pi / 3 for i in range(6)])
    # 48..59 outer lip, 60..67 inner lip
    lcx, lcy = g.cx, g.cy + g.lcy
    pts += _ellipse_arc(lcx, lcy, g.lax, g.lay, [i * np.pi / 6 for i in range(12)])
    pts += _ellipse_arc(lcx, lcy, 0.6 * g.lax, 0.6 * g.lay, [i * np.pi / 4 for i in range(8)])
    return np.asarray(pts, dtype=np.float64)


DENSE_GRID_COLUMNS = 13
DENSE_GRID_ROWS = 10


def _dense_grid(g: _Geometry) -> np.ndarray:
    """Canonical nose/cheek point grid in face-relative coordinates.

    Every fixture emits the same point count in the same order, so row k
    of one asset corresponds to row k of any other asset without a
    per-pair alignment step. The grid box stays on skin for the whole
    geometry jitter range (below the eyes, above the lip, inside the
    face ellipse) and the jittered face center keeps coordinates
    fractional, exercising bilinear sampling.
    """
    s = float(g.size)
    us = np.linspace(-0.20, 0.20, DENSE_GRID_COLUMNS)
    vs = np.linspace(-0.04, 0.14, DENSE_GRID_ROWS)
    pts = [(g.cx + u * s, g.cy + v * s) for v in vs for u in us]
    return np.asarray(pts, dtype=np.float64)


def _paint(g: _Geometry, parsing: np.ndarray, palette: dict[int, tuple], extras) -> np.ndarray:
    size = g.size
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    rgb = np.zeros((3, size, size), dtype=np.float64)
    for label, color in palette.items():
        mask = parsing == label
        for c in range(3):
            rgb[c][mask] = color[c]
    for color, alpha in extras:
        skin = parsing == assets.LABEL_SKIN
        blend = np.clip(alpha, 0.0, 1.0) * skin
        for c in range(3):
            rgb[c] = rgb[c] * (1 - blend) + color[c] * blend
    # vertical shading so no region is a constant field
    shade = 0.93 + 0.10 * (1.0 - yy / size)
    rgb *= shade
    rgb = np.clip(rgb, 0.01, 0.99)
    return (rgb * 2.0 - 1.0).astype(np.float32)


def _blush(g: _Geometry, xx, yy, sign: float) -> np.ndarray:
    ccx, ccy = g.cx + sign * 0.16 * g.size, g.cy + 0.06 * g.size
    sigma = 0.06 * g.size
    return 0.55 * np.exp(-(((xx - ccx) ** 2 + (yy - ccy) ** 2) / (2 * sigma**2)))


def _highlight(g: _Geometry, xx, yy) -> np.ndarray:
    s = float(g.size)
    band = np.exp(-(((xx - g.cx) / (0.018 * s)) ** 2) / 2)
    taper = np.exp(-(((yy - g.cy) / (0.09 * s)) ** 2) / 2)
    return 0.6 * band * taper


def synth_fixture(seed: int, size: int) -> tuple[FaceAsset, FaceAsset]:
    """Build a deterministic (makeup, plain) asset pair for one seed."""
    if size not in (64, 256):
        raise ValueError(f"fixture size must be 64 or 256, got {size}")
    rng = np.random.default_rng(seed)
    g = _draw_geometry(rng, size)
    parsing = _parsing_map(g)
    landmarks = _landmarks(g)
    dense = _dense_grid(g)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    plain_palette = {
        assets.LABEL_BACKGROUND: (0.42, 0.46, 0.52),
        assets.LABEL_SKIN: (0.72, 0.60, 0.50),
        assets.LABEL_LIP: (0.66, 0.48, 0.44),
        assets.LABEL_EYE: (0.18, 0.14, 0.12),
    }
    lip_hue = float(rng.uniform(0.93, 1.03)) % 1.0
    shadow_hue = float(rng.uniform(0.55, 0.85))
    blush_hue = float(rng.uniform(0.95, 1.02)) % 1.0
    makeup_palette = dict(plain_palette)
    makeup_palette[assets.LABEL_LIP] = colorsys.hsv_to_rgb(lip_hue, 0.85, 0.75)
    makeup_palette[assets.LABEL_EYE] = colorsys.hsv_to_rgb(shadow_hue, 0.70, 0.45)
    blush_color = colorsys.hsv_to_rgb(blush_hue, 0.60, 0.80)
    extras = [
        (blush_color, _blush(g, xx, yy, -1.0) + _blush(g, xx, yy, 1.0)),
        ((0.98, 0.97, 0.92), _highlight(g, xx, yy)),
    ]

    makeup = FaceAsset(
        id=f"face{seed:03d}m",
        image=_paint(g, parsing, makeup_palette, extras),
        parsing=parsing.copy(),
        landmarks=landmarks.copy(),
        dense=dense.copy(),
        domain="makeup",
    ).validate()
    plain = FaceAsset(
        id=f"face{seed:03d}p",
        image=_paint(g, parsing, plain_palette, []),
        parsing=parsing.copy(),
        landmarks=landmarks.copy(),
        dense=dense.copy(),
        domain="non-makeup",
    ).validate()
    return makeup, plain


def write_fixture_corpus(out_dir: str | Path, seeds: list[int], size: int) -> Path:
    """Write fixture assets plus a manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for seed in seeds:
        for asset in synth_fixture(seed, size):
            assets.save_image(out / f"{asset.id}.png", asset.image)
            assets.save_parsing(out / f"{asset.id}.parsing.png", asset.parsing)
            assets.save_landmarks(out / f"{asset.id}.landmarks.json", asset.landmarks)
            assets.save_dense(out / f"{asset.id}.dense.json", asset.dense)
            records.append(
                ManifestRecord(
                    id=asset.id,
                    image_path=f"{asset.id}.png",
                    parsing_path=f"{asset.id}.parsing.png",
                    landmarks_path=f"{asset.id}.landmarks.json",
                    dense_path=f"{asset.id}.dense.json",
                    domain=asset.domain,
                )
            )
    return assets.write_manifest(out / "manifest.jsonl", records)


def fixture_manifest(out_dir: str | Path, seeds=(0, 1), size: int = 64) -> Manifest:
    path = write_fixture_corpus(out_dir, list(seeds), size)
    return assets.load_manifest(path)
