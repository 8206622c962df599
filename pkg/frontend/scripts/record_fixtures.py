"""Record service round-trips as test fixtures for the UI contract tests.

Trains a tiny throwaway model, runs the real HTTP app in-process, uploads
the synthetic fixture pair, and captures the exact request body plus the
PNG bytes for the 12 control-panel combinations (alpha 0 / 0.5 / 1 x
regions all / lip / none / remove). Each request is issued twice and must
return identical bytes before it is recorded.

Usage: python3 scripts/record_fixtures.py  (from the frontend/ directory)
"""

import base64
import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from makeover.fixtures import write_fixture_corpus
from makeover.service import ServiceConfig, create_app
from makeover.training import Corpus, TrainConfig, train_loop
from makeover.assets import load_manifest

OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures" / "roundtrips.json"

ALL_REGIONS = ["eye", "lip", "skin"]


def control_state(source_id, reference_id, alpha, regions, remove):
    return {
        "sourceId": source_id,
        "referenceId": reference_id,
        "secondReferenceId": None,
        "alpha": alpha,
        "regions": {name: name in regions for name in ("lip", "skin", "eye")},
        "remove": remove,
    }


def expected_body(source_id, reference_id, alpha, regions, remove):
    if remove:
        return {"source_id": source_id, "reference_ids": [], "mode": "remove"}
    body = {
        "source_id": source_id,
        "reference_ids": [reference_id],
        "alpha": alpha,
        "mode": "transfer",
    }
    if regions:
        body["regions"] = [name for name in ALL_REGIONS if name in regions]
    return body


def main():
    work = Path(tempfile.mkdtemp(prefix="record-fixtures-"))
    manifest_path = write_fixture_corpus(work / "corpus", [0, 1], 64)
    corpus = Corpus.from_manifest(load_manifest(manifest_path))
    config = TrainConfig(image_size=64, base_width=16, epochs=1, max_steps=2, seed=0)
    train_loop(corpus, config, work / "run")

    app = create_app(
        ServiceConfig(checkpoint=str(work / "run" / "model.pt"), assets_dir=str(work / "store"))
    )
    client = TestClient(app)

    ids = {}
    for stem in ("face000p", "face000m"):
        base = work / "corpus" / stem
        files = {
            "image": ("i.png", (work / "corpus" / f"{stem}.png").read_bytes(), "image/png"),
            "parsing": ("p.png", base.with_suffix(".parsing.png").read_bytes(), "image/png"),
            "landmarks": (
                "l.json",
                base.with_suffix(".landmarks.json").read_bytes(),
                "application/json",
            ),
        }
        response = client.post("/api/assets", files=files)
        assert response.status_code == 201, response.text
        ids[stem] = response.json()["asset_id"]
    source_id, reference_id = ids["face000p"], ids["face000m"]

    cases = []
    region_choices = [("all", set(ALL_REGIONS)), ("lip", {"lip"}), ("none", set())]
    for alpha in (0.0, 0.5, 1.0):
        for label, regions in region_choices + [("remove", None)]:
            remove = regions is None
            body = expected_body(source_id, reference_id, alpha, regions or set(), remove)
            first = client.post("/api/transfer", json=body)
            assert first.status_code == 200, (body, first.text)
            again = client.post("/api/transfer", json=body)
            assert again.content == first.content, "service response not deterministic"
            cases.append(
                {
                    "name": f"alpha{alpha:g}-{label}",
                    "state": control_state(source_id, reference_id, alpha, regions or set(), remove),
                    "body": body,
                    "png_b64": base64.b64encode(first.content).decode("ascii"),
                }
            )

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(
        json.dumps(
            {"source_id": source_id, "reference_id": reference_id, "cases": cases}, indent=1
        )
    )
    print(f"wrote {OUT} ({len(cases)} cases, {OUT.stat().st_size} bytes)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
