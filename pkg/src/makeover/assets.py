"""Core data model: images, parsing maps, landmarks, and manifests.

Images are float32 arrays of shape 3xHxW (RGB) with values in [-1, 1].
Parsing maps label every pixel as background (0), lip (1), skin (2) or
eye (3). Landmarks are 68 (x, y) points in pixel coordinates, x along
the horizontal axis. All components of one asset share the same HxW.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import AssetError

LABEL_BACKGROUND = 0
LABEL_LIP = 1
LABEL_SKIN = 2
LABEL_EYE = 3
VALID_LABELS = frozenset({LABEL_BACKGROUND, LABEL_LIP, LABEL_SKIN, LABEL_EYE})

#: region name -> parsing label, the order used for partial transfer masks
REGION_LABELS = {"lip": LABEL_LIP, "skin": LABEL_SKIN, "eye": LABEL_EYE}
FACE_LABELS = (LABEL_LIP, LABEL_SKIN, LABEL_EYE)

NUM_LANDMARKS = 68
DOMAINS = ("makeup", "non-makeup")

# fixed palette for indexed parsing PNGs; colors are for inspection only
_PARSING_PALETTE = [0, 0, 0, 200, 60, 80, 230, 190, 160, 70, 120, 220]


def validate_image(image: np.ndarray) -> None:
    if image.ndim != 3 or image.shape[0] != 3:
        raise AssetError(f"image must be 3xHxW, got shape {image.shape}")
    if not np.issubdtype(image.dtype, np.floating):
        raise AssetError(f"image must be float, got dtype {image.dtype}")
    if not np.isfinite(image).all():
        raise AssetError("image contains non-finite values")
    if image.min() < -1.0 or image.max() > 1.0:
        raise AssetError("image values outside [-1, 1]")


def validate_parsing(parsing: np.ndarray, shape: tuple[int, int] | None = None) -> None:
    if parsing.ndim != 2:
        raise AssetError(f"parsing map must be HxW, got shape {parsing.shape}")
    if not np.issubdtype(parsing.dtype, np.integer):
        raise AssetError(f"parsing map must be integer, got dtype {parsing.dtype}")
    found = set(np.unique(parsing).tolist())
    if not found <= VALID_LABELS:
        raise AssetError(f"parsing labels outside {{0,1,2,3}}: {sorted(found - VALID_LABELS)}")
    if shape is not None and tuple(parsing.shape) != tuple(shape):
        raise AssetError(f"parsing shape {parsing.shape} does not match image {shape}")


def validate_landmarks(points: np.ndarray, shape: tuple[int, int] | None = None) -> None:
    if points.ndim != 2 or points.shape[1] != 2:
        raise AssetError(f"landmarks must be Nx2, got shape {points.shape}")
    if points.shape[0] != NUM_LANDMARKS:
        raise AssetError(f"landmark count {points.shape[0]} != {NUM_LANDMARKS}")
    if not np.isfinite(points).all():
        raise AssetError("landmarks contain non-finite values")
    if shape is not None:
        h, w = shape
        if points[:, 0].min() < 0 or points[:, 0].max() >= w:
            raise AssetError("landmark x coordinate outside [0, W)")
        if points[:, 1].min() < 0 or points[:, 1].max() >= h:
            raise AssetError("landmark y coordinate outside [0, H)")


def validate_dense(points: np.ndarray, shape: tuple[int, int] | None = None) -> None:
    if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] == 0:
        raise AssetError(f"dense correspondence must be Kx2 with K > 0, got shape {points.shape}")
    if not np.isfinite(points).all():
        raise AssetError("dense points contain non-finite values")
    if shape is not None:
        h, w = shape
        if (points[:, 0] < 0).any() or (points[:, 0] > w - 1).any():
            raise AssetError("dense point x coordinate outside image bounds")
        if (points[:, 1] < 0).any() or (points[:, 1] > h - 1).any():
            raise AssetError("dense point y coordinate outside image bounds")


@dataclass
class FaceAsset:
    """One ingested face: image plus the metadata inference needs."""

    id: str
    image: np.ndarray           # 3xHxW float32 in [-1, 1]
    parsing: np.ndarray         # HxW int
    landmarks: np.ndarray       # 68x2 float (x, y)
    dense: np.ndarray | None = None  # Kx2 float, semantically indexed
    domain: str = "non-makeup"

    @property
    def size(self) -> tuple[int, int]:
        return self.image.shape[1], self.image.shape[2]

    def validate(self) -> "FaceAsset":
        validate_image(self.image)
        validate_parsing(self.parsing, self.size)
        validate_landmarks(self.landmarks, self.size)
        if self.dense is not None:
            validate_dense(self.dense, self.size)
        if self.domain not in DOMAINS:
            raise AssetError(f"unknown domain {self.domain!r}")
        return self


@dataclass
class ManifestRecord:
    id: str
    image_path: str
    parsing_path: str
    landmarks_path: str
    domain: str
    dense_path: str | None = None


@dataclass
class Manifest:
    """Immutable list of asset records; paths are relative to base_dir."""

    base_dir: Path
    records: list[ManifestRecord] = field(default_factory=list)

    def by_domain(self, domain: str) -> list[ManifestRecord]:
        return [r for r in self.records if r.domain == domain]

    def record(self, asset_id: str) -> ManifestRecord:
        for r in self.records:
            if r.id == asset_id:
                return r
        raise AssetError(f"no record with id {asset_id!r}")

    def validate_for_training(self) -> "Manifest":
        if not self.by_domain("makeup") or not self.by_domain("non-makeup"):
            raise AssetError("training manifest needs records in both domains")
        return self


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise AssetError(f"manifest not found: {path}")
    records = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AssetError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                rec = ManifestRecord(
                    id=raw["id"],
                    image_path=raw["image_path"],
                    parsing_path=raw["parsing_path"],
                    landmarks_path=raw["landmarks_path"],
                    domain=raw["domain"],
                    dense_path=raw.get("dense_path"),
                )
            except KeyError as exc:
                raise AssetError(f"{path}:{lineno}: missing field {exc}") from exc
            if rec.id in seen:
                raise AssetError(f"{path}:{lineno}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    return Manifest(base_dir=path.parent, records=records)


def write_manifest(path: str | Path, records: list[ManifestRecord]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            raw = {
                "id": r.id,
                "image_path": r.image_path,
                "parsing_path": r.parsing_path,
                "landmarks_path": r.landmarks_path,
                "domain": r.domain,
            }
            if r.dense_path is not None:
                raw["dense_path"] = r.dense_path
            fh.write(json.dumps(raw) + "\n")
    return path


# ---------------------------------------------------------------------------
# pixel <-> float conversions and file IO


def image_from_uint8(pixels: np.ndarray) -> np.ndarray:
    """HxWx3 uint8 -> 3xHxW float32 in [-1, 1] (255 -> 1, 0 -> -1)."""
    return (pixels.astype(np.float32) / 127.5 - 1.0).transpose(2, 0, 1)


def image_to_uint8(image: np.ndarray) -> np.ndarray:
    """3xHxW float in [-1, 1] -> HxWx3 uint8, rounding to nearest level."""
    arr = np.clip(np.rint((np.asarray(image) + 1.0) * 127.5), 0, 255)
    return arr.astype(np.uint8).transpose(1, 2, 0)


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        return image_from_uint8(np.asarray(rgb))


def encode_png(image: np.ndarray) -> bytes:
    """Canonical PNG bytes for a float image; one encoder for file and HTTP
    output keeps the two byte-identical for identical pixels."""
    buf = io.BytesIO()
    Image.fromarray(image_to_uint8(image), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_image(path: str | Path, image: np.ndarray) -> None:
    Path(path).write_bytes(encode_png(image))


def load_parsing(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode not in ("P", "L"):
            raise AssetError(f"parsing map {path} must be a single-channel PNG, got mode {img.mode}")
        return np.asarray(img).astype(np.int64)


def save_parsing(path: str | Path, parsing: np.ndarray) -> None:
    img = Image.fromarray(parsing.astype(np.uint8), mode="P")
    img.putpalette(_PARSING_PALETTE)
    img.save(path, format="PNG")


def load_landmarks(path: str | Path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return np.asarray(json.load(fh), dtype=np.float64)


def save_landmarks(path: str | Path, points: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([[float(x), float(y)] for x, y in points], fh)


load_dense = load_landmarks
save_dense = save_landmarks


def load_asset(record: ManifestRecord, base_dir: str | Path) -> FaceAsset:
    """Load and validate one manifest record; errors carry the record id."""
    base = Path(base_dir)
    for attr in ("image_path", "parsing_path", "landmarks_path", "dense_path"):
        rel = getattr(record, attr)
        if rel is not None and not (base / rel).is_file():
            raise AssetError(f"record {record.id!r}: missing file {base / rel}")
    try:
        asset = FaceAsset(
            id=record.id,
            image=load_image(base / record.image_path),
            parsing=load_parsing(base / record.parsing_path),
            landmarks=load_landmarks(base / record.landmarks_path),
            dense=load_dense(base / record.dense_path) if record.dense_path else None,
            domain=record.domain,
        )
        return asset.validate()
    except AssetError as exc:
        raise AssetError(f"record {record.id!r}: {exc}") from exc


def load_assets(manifest: Manifest) -> list[FaceAsset]:
    return [load_asset(r, manifest.base_dir) for r in manifest.records]


def sidecar_paths(image_path: str | Path) -> dict[str, Path]:
    """Companion metadata files for foo.png: foo.parsing.png,
    foo.landmarks.json and (optionally present) foo.dense.json."""
    p = Path(image_path)
    stem = p.parent / p.stem
    return {
        "parsing": Path(f"{stem}.parsing.png"),
        "landmarks": Path(f"{stem}.landmarks.json"),
        "dense": Path(f"{stem}.dense.json"),
    }


def load_asset_with_sidecars(image_path: str | Path, domain: str = "non-makeup") -> FaceAsset:
    """Load an image plus the sidecar files the naming convention implies."""
    p = Path(image_path)
    if not p.is_file():
        raise AssetError(f"image not found: {p}")
    sides = sidecar_paths(p)
    for key in ("parsing", "landmarks"):
        if not sides[key].is_file():
            raise AssetError(f"{p}: missing {key} sidecar {sides[key]}")
    return FaceAsset(
        id=p.stem,
        image=load_image(p),
        parsing=load_parsing(sides["parsing"]),
        landmarks=load_landmarks(sides["landmarks"]),
        dense=load_dense(sides["dense"]) if sides["dense"].is_file() else None,
        domain=domain,
    ).validate()


# ---------------------------------------------------------------------------
# resolution changes between image and feature grids


def downscale_parsing(parsing: np.ndarray, factor: int) -> np.ndarray:
    """Nearest-neighbor label subsampling onto an aligned coarse grid.

    Sampling keeps the top-left pixel of every factor x factor block, so
    downscaling by a then b equals downscaling by a*b.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    h, w = parsing.shape
    if h % factor or w % factor:
        raise ValueError(f"factor {factor} does not divide {h}x{w}")
    return parsing[::factor, ::factor].copy()


def scale_landmarks(points: np.ndarray, factor: int) -> np.ndarray:
    """Express landmark coordinates on a grid shrunk by an integer factor."""
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    return np.asarray(points, dtype=np.float64) / float(factor)
