"""HTTP inference service: asset uploads, styled transfers, health.

Assets are stored on disk under generated ids using the same sidecar
file layout the CLI reads, so a request served over HTTP and the
equivalent CLI invocation run the exact same code path and produce
byte-identical PNGs. Every 4xx response body is {"error_code", "field"}.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from PIL import Image
from pydantic import BaseModel

from . import assets, engine
from .config import merge_options, read_config_file
from .errors import AssetError, ConfigurationError
from .networks import checkpoint_digest, load_checkpoint

REGION_NAMES = tuple(sorted(assets.REGION_LABELS))


@dataclass
class ServiceConfig:
    checkpoint: str | None = None
    assets_dir: str | None = None
    w_visual: float = engine.DEFAULT_VISUAL_WEIGHT
    host: str = "127.0.0.1"
    port: int = 8000


class TransferRequest(BaseModel):
    source_id: str
    reference_ids: list[str] = []
    alpha: float | None = None
    regions: list[str] | None = None
    mode: str = "transfer"


class AssetStore:
    """Disk-backed asset directory with an in-process cache."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, assets.FaceAsset] = {}

    def new_id(self) -> str:
        return uuid.uuid4().hex

    def persist(self, asset_id: str, image, parsing, landmarks, dense) -> None:
        assets.save_image(self.root / f"{asset_id}.png", image)
        assets.save_parsing(self.root / f"{asset_id}.parsing.png", parsing)
        assets.save_landmarks(self.root / f"{asset_id}.landmarks.json", landmarks)
        if dense is not None:
            assets.save_dense(self.root / f"{asset_id}.dense.json", dense)
        self._cache.pop(asset_id, None)

    def ids(self) -> list[str]:
        return sorted(
            p.stem for p in self.root.glob("*.png") if not p.name.endswith(".parsing.png")
        )

    def image_path(self, asset_id: str) -> Path:
        return self.root / f"{asset_id}.png"

    def load(self, asset_id: str) -> assets.FaceAsset:
        if asset_id not in self._cache:
            path = self.image_path(asset_id)
            if not path.is_file():
                raise KeyError(asset_id)
            self._cache[asset_id] = assets.load_asset_with_sidecars(path)
        return self._cache[asset_id]


def _err(status: int, code: str, field: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error_code": code, "field": field})


def _decode_parsing(data: bytes, shape) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    if img.mode not in ("P", "L"):
        raise AssetError(f"parsing map must be a single-channel PNG, got mode {img.mode}")
    parsing = np.asarray(img).astype(np.int64)
    assets.validate_parsing(parsing, shape)
    return parsing


def _decode_points(data: bytes, validator, shape) -> np.ndarray:
    try:
        points = np.asarray(json.loads(data.decode("utf-8")), dtype=np.float64)
    except (UnicodeDecodeError, json.JSONDecodeError, ValueError) as exc:
        raise AssetError(f"not a JSON point list: {exc}") from exc
    validator(points, shape)
    return points


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="makeover service")
    store = AssetStore(
        Path(config.assets_dir)
        if config.assets_dir
        else Path(tempfile.mkdtemp(prefix="makeover-assets-"))
    )
    app.state.store = store
    app.state.bundle = None
    app.state.checksum = None
    app.state.w_visual = config.w_visual
    app.state.inference_lock = threading.Lock()
    if config.checkpoint:
        app.state.bundle = load_checkpoint(config.checkpoint)
        app.state.checksum = checkpoint_digest(config.checkpoint)

    @app.exception_handler(RequestValidationError)
    def _on_validation_error(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        field = ".".join(str(part) for part in errors[0]["loc"][1:]) if errors else "body"
        return _err(422, "invalid-request", field or "body")

    @app.get("/api/health")
    def health():
        ok = app.state.bundle is not None
        return {"status": "ok" if ok else "no-model", "model_checksum": app.state.checksum}

    @app.get("/api/assets")
    def list_assets():
        return {"assets": [{"asset_id": asset_id} for asset_id in store.ids()]}

    @app.get("/api/assets/{asset_id}/image")
    def asset_image(asset_id: str):
        path = store.image_path(asset_id)
        if not path.is_file():
            return _err(404, "unknown-asset", "asset_id")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.post("/api/assets", status_code=201)
    def upload_asset(
        image: UploadFile = File(...),
        parsing: UploadFile | None = File(None),
        landmarks: UploadFile | None = File(None),
        dense: UploadFile | None = File(None),
    ):
        raw = image.file.read()
        try:
            decoded = Image.open(io.BytesIO(raw))
            decoded.load()
            pixels = np.asarray(decoded.convert("RGB"))
        except Exception:
            return _err(415, "undecodable-image", "image")
        face = assets.image_from_uint8(pixels)
        shape = face.shape[1:]
        for name, upload in (("parsing", parsing), ("landmarks", landmarks)):
            if upload is None:
                return _err(503, "no-adapter", name)
        try:
            parsing_arr = _decode_parsing(parsing.file.read(), shape)
        except (AssetError, OSError):
            return _err(422, "invalid-metadata", "parsing")
        try:
            landmarks_arr = _decode_points(landmarks.file.read(), assets.validate_landmarks, shape)
        except AssetError:
            return _err(422, "invalid-metadata", "landmarks")
        dense_arr = None
        if dense is not None:
            try:
                dense_arr = _decode_points(dense.file.read(), assets.validate_dense, shape)
            except AssetError:
                return _err(422, "invalid-metadata", "dense")
        asset_id = store.new_id()
        store.persist(asset_id, face, parsing_arr, landmarks_arr, dense_arr)
        return {"asset_id": asset_id}

    def _load_or_none(asset_id: str):
        try:
            return store.load(asset_id)
        except KeyError:
            return None
        except AssetError:
            return None

    @app.post("/api/transfer")
    def transfer(request: TransferRequest):
        bundle = app.state.bundle
        if bundle is None:
            return _err(409, "no-model", "checkpoint")
        if request.mode not in ("transfer", "remove"):
            return _err(400, "invalid-mode", "mode")
        if request.mode == "remove":
            for field_name in ("reference_ids", "alpha", "regions"):
                if getattr(request, field_name) not in (None, []):
                    return _err(400, "remove-conflicts", field_name)
        else:
            if not 1 <= len(request.reference_ids) <= 2:
                return _err(400, "reference-count", "reference_ids")
            if len(request.reference_ids) == 2:
                has_regions = request.regions is not None
                has_alpha = request.alpha is not None
                if has_regions == has_alpha:
                    return _err(400, "two-reference-ambiguity", "regions")
            if request.alpha is not None and not 0.0 <= request.alpha <= 1.0:
                return _err(400, "alpha-range", "alpha")
            if request.regions is not None:
                bad = [r for r in request.regions if r not in REGION_NAMES]
                if bad:
                    return _err(400, "unknown-region", "regions")
        source = _load_or_none(request.source_id)
        if source is None:
            return _err(404, "unknown-asset", "source_id")
        references = []
        for ref_id in request.reference_ids:
            ref = _load_or_none(ref_id)
            if ref is None:
                return _err(404, "unknown-asset", "reference_ids")
            references.append(ref)
        expected = (bundle.meta.input_size, bundle.meta.input_size)
        for asset in (source, *references):
            if asset.size != expected:
                return _err(400, "size-mismatch", "source_id" if asset is source else "reference_ids")
        started = time.perf_counter()
        with app.state.inference_lock:
            if request.mode == "remove":
                out = engine.remove(source, bundle)
            else:
                out = engine.run_transfer(
                    source,
                    references,
                    bundle,
                    alpha=1.0 if request.alpha is None else request.alpha,
                    regions=request.regions,
                    w=app.state.w_visual,
                )
        millis = int((time.perf_counter() - started) * 1000)
        return Response(
            content=assets.encode_png(out),
            media_type="image/png",
            headers={"X-Inference-Millis": str(millis)},
        )

    return app


_SERVICE_KEYS = ("host", "port", "checkpoint", "assets_dir", "w_visual")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="makeover-serve", description=__doc__)
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    parser.add_argument("--checkpoint")
    parser.add_argument("--assets-dir", dest="assets_dir")
    parser.add_argument("--w-visual", dest="w_visual", type=float)
    args = parser.parse_args(argv)
    file_opts = read_config_file(args.config) if args.config else {}
    unknown = set(file_opts) - set(_SERVICE_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown service config keys: {sorted(unknown)}")
    opts = merge_options(file_opts, {k: getattr(args, k) for k in _SERVICE_KEYS})
    config = ServiceConfig(
        checkpoint=opts.get("checkpoint"),
        assets_dir=opts.get("assets_dir"),
        w_visual=float(opts.get("w_visual") or engine.DEFAULT_VISUAL_WEIGHT),
        host=str(opts.get("host") or "127.0.0.1"),
        port=int(opts.get("port") or 8000),
    )
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
