"""HTTP service: uploads, inference, error codes, CLI parity."""

import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from makeover.cli import main as cli_main
from makeover.networks import checkpoint_digest
from makeover.service import ServiceConfig, create_app


@pytest.fixture(scope="module")
def app(checkpoint_path, tmp_path_factory):
    store = tmp_path_factory.mktemp("store")
    return create_app(ServiceConfig(checkpoint=str(checkpoint_path), assets_dir=str(store)))


@pytest.fixture(scope="module")
def client(app):
    return TestClient(app)


@pytest.fixture(scope="module")
def bare_client():
    # service without a model: uploads work, inference reports 409
    return TestClient(create_app(ServiceConfig()))


def upload_files(corpus_dir, stem, include_dense=True):
    files = {
        "image": (f"{stem}.png", (corpus_dir / f"{stem}.png").read_bytes(), "image/png"),
        "parsing": ("p.png", (corpus_dir / f"{stem}.parsing.png").read_bytes(), "image/png"),
        "landmarks": (
            "l.json",
            (corpus_dir / f"{stem}.landmarks.json").read_bytes(),
            "application/json",
        ),
    }
    if include_dense:
        files["dense"] = (
            "d.json",
            (corpus_dir / f"{stem}.dense.json").read_bytes(),
            "application/json",
        )
    return files


def upload(client, corpus_dir, stem):
    response = client.post("/api/assets", files=upload_files(corpus_dir, stem))
    assert response.status_code == 201, response.text
    return response.json()["asset_id"]


@pytest.fixture(scope="module")
def asset_ids(client, corpus_dir):
    return {
        stem: upload(client, corpus_dir, stem)
        for stem in ("face000p", "face000m", "face001m")
    }


def test_health_reports_model_checksum(client, checkpoint_path):
    body = client.get("/api/health").json()
    assert body["status"] == "ok"
    assert body["model_checksum"] == checkpoint_digest(checkpoint_path)


def test_health_without_model(bare_client):
    body = bare_client.get("/api/health").json()
    assert body == {"status": "no-model", "model_checksum": None}


def test_upload_and_list_assets(client, asset_ids):
    listed = client.get("/api/assets").json()["assets"]
    ids = {entry["asset_id"] for entry in listed}
    assert set(asset_ids.values()) <= ids


def test_asset_image_round_trip(client, corpus_dir, asset_ids):
    response = client.get(f"/api/assets/{asset_ids['face000p']}/image")
    assert response.status_code == 200
    assert response.headers["content-type"] == "image/png"
    served = np.asarray(Image.open(io.BytesIO(response.content)))
    original = np.asarray(Image.open(corpus_dir / "face000p.png"))
    np.testing.assert_array_equal(served, original)


def test_asset_image_unknown_id(client):
    response = client.get("/api/assets/deadbeef/image")
    assert response.status_code == 404
    assert response.json() == {"error_code": "unknown-asset", "field": "asset_id"}


def test_upload_undecodable_image(client):
    files = {"image": ("x.png", b"definitely not a png", "image/png")}
    response = client.post("/api/assets", files=files)
    assert response.status_code == 415
    assert response.json() == {"error_code": "undecodable-image", "field": "image"}


def test_upload_missing_metadata_is_no_adapter(client, corpus_dir):
    files = upload_files(corpus_dir, "face000p")
    del files["parsing"]
    response = client.post("/api/assets", files=files)
    assert response.status_code == 503
    assert response.json() == {"error_code": "no-adapter", "field": "parsing"}

    files = upload_files(corpus_dir, "face000p")
    del files["landmarks"]
    response = client.post("/api/assets", files=files)
    assert response.status_code == 503
    assert response.json() == {"error_code": "no-adapter", "field": "landmarks"}


def test_upload_invalid_metadata(client, corpus_dir):
    files = upload_files(corpus_dir, "face000p")
    files["parsing"] = ("p.png", b"junk bytes", "image/png")
    response = client.post("/api/assets", files=files)
    assert response.status_code == 422
    assert response.json() == {"error_code": "invalid-metadata", "field": "parsing"}

    files = upload_files(corpus_dir, "face000p")
    files["landmarks"] = ("l.json", json.dumps([[1, 2]] * 3).encode(), "application/json")
    response = client.post("/api/assets", files=files)
    assert response.status_code == 422
    assert response.json() == {"error_code": "invalid-metadata", "field": "landmarks"}

    files = upload_files(corpus_dir, "face000p")
    files["dense"] = ("d.json", b"not json at all {", "application/json")
    response = client.post("/api/assets", files=files)
    assert response.status_code == 422
    assert response.json() == {"error_code": "invalid-metadata", "field": "dense"}


def test_upload_without_dense_is_fine(client, corpus_dir):
    files = upload_files(corpus_dir, "face001p", include_dense=False)
    response = client.post("/api/assets", files=files)
    assert response.status_code == 201


def test_transfer_returns_png_with_timing_header(client, asset_ids):
    response = client.post(
        "/api/transfer",
        json={"source_id": asset_ids["face000p"], "reference_ids": [asset_ids["face000m"]]},
    )
    assert response.status_code == 200
    assert response.headers["content-type"] == "image/png"
    assert int(response.headers["X-Inference-Millis"]) >= 0
    Image.open(io.BytesIO(response.content)).verify()


def test_transfer_is_deterministic(client, asset_ids):
    body = {"source_id": asset_ids["face000p"], "reference_ids": [asset_ids["face000m"]]}
    first = client.post("/api/transfer", json=body).content
    second = client.post("/api/transfer", json=body).content
    assert first == second


def test_transfer_without_model_is_409(bare_client):
    response = bare_client.post(
        "/api/transfer", json={"source_id": "a", "reference_ids": ["b"]}
    )
    assert response.status_code == 409
    assert response.json()["error_code"] == "no-model"


def test_transfer_unknown_assets_are_404(client, asset_ids):
    response = client.post(
        "/api/transfer", json={"source_id": "missing", "reference_ids": [asset_ids["face000m"]]}
    )
    assert response.status_code == 404
    assert response.json() == {"error_code": "unknown-asset", "field": "source_id"}

    response = client.post(
        "/api/transfer", json={"source_id": asset_ids["face000p"], "reference_ids": ["missing"]}
    )
    assert response.status_code == 404
    assert response.json() == {"error_code": "unknown-asset", "field": "reference_ids"}


def test_transfer_reference_count_validation(client, asset_ids):
    src = asset_ids["face000p"]
    ref = asset_ids["face000m"]
    response = client.post("/api/transfer", json={"source_id": src, "reference_ids": []})
    assert response.status_code == 400
    assert response.json()["error_code"] == "reference-count"

    response = client.post(
        "/api/transfer", json={"source_id": src, "reference_ids": [ref, ref, ref]}
    )
    assert response.status_code == 400


def test_transfer_two_reference_needs_exactly_one_selector(client, asset_ids):
    src = asset_ids["face000p"]
    refs = [asset_ids["face000m"], asset_ids["face001m"]]
    both = {"source_id": src, "reference_ids": refs, "alpha": 0.5, "regions": ["lip"]}
    response = client.post("/api/transfer", json=both)
    assert response.status_code == 400
    assert response.json()["error_code"] == "two-reference-ambiguity"

    neither = {"source_id": src, "reference_ids": refs}
    response = client.post("/api/transfer", json=neither)
    assert response.status_code == 400
    assert response.json()["error_code"] == "two-reference-ambiguity"

    with_alpha = {"source_id": src, "reference_ids": refs, "alpha": 0.25}
    response = client.post("/api/transfer", json=with_alpha)
    assert response.status_code == 200

    with_regions = {"source_id": src, "reference_ids": refs, "regions": ["lip", "eye"]}
    response = client.post("/api/transfer", json=with_regions)
    assert response.status_code == 200


def test_transfer_alpha_range_and_region_names(client, asset_ids):
    src = asset_ids["face000p"]
    ref = asset_ids["face000m"]
    response = client.post(
        "/api/transfer", json={"source_id": src, "reference_ids": [ref], "alpha": 1.5}
    )
    assert response.status_code == 400
    assert response.json()["error_code"] == "alpha-range"

    response = client.post(
        "/api/transfer", json={"source_id": src, "reference_ids": [ref], "regions": ["hair"]}
    )
    assert response.status_code == 400
    assert response.json()["error_code"] == "unknown-region"


def test_remove_mode(client, asset_ids):
    response = client.post(
        "/api/transfer", json={"source_id": asset_ids["face000m"], "mode": "remove"}
    )
    assert response.status_code == 200
    assert response.headers["content-type"] == "image/png"


def test_remove_mode_rejects_transfer_options(client, asset_ids):
    for extra in ({"reference_ids": [asset_ids["face000m"]]}, {"alpha": 0.5}, {"regions": ["lip"]}):
        body = {"source_id": asset_ids["face000m"], "mode": "remove", **extra}
        response = client.post("/api/transfer", json=body)
        assert response.status_code == 400
        assert response.json()["error_code"] == "remove-conflicts"


def test_invalid_mode_and_malformed_body(client, asset_ids):
    response = client.post(
        "/api/transfer", json={"source_id": asset_ids["face000p"], "mode": "sparkle"}
    )
    assert response.status_code == 400
    assert response.json()["error_code"] == "invalid-mode"

    response = client.post("/api/transfer", json={"reference_ids": []})
    assert response.status_code == 422
    assert response.json()["error_code"] == "invalid-request"


def test_service_matches_cli_bytes(client, corpus_dir, checkpoint_path, asset_ids, tmp_path):
    # same request through both front ends must produce identical PNGs
    response = client.post(
        "/api/transfer",
        json={
            "source_id": asset_ids["face000p"],
            "reference_ids": [asset_ids["face000m"]],
            "alpha": 0.5,
        },
    )
    assert response.status_code == 200

    out_png = tmp_path / "cli.png"
    code = cli_main(
        [
            "transfer",
            "--checkpoint",
            str(checkpoint_path),
            "--source",
            str(corpus_dir / "face000p.png"),
            "--reference",
            str(corpus_dir / "face000m.png"),
            "--alpha",
            "0.5",
            "--out",
            str(out_png),
        ]
    )
    assert code == 0
    assert out_png.read_bytes() == response.content
