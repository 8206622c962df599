"""Shared fixtures: a tiny synthetic corpus and a briefly trained model."""

import pytest
import torch

from makeover.fixtures import fixture_manifest
from makeover.networks import ArchitectureMeta, build_bundle
from makeover.training import Corpus, TrainConfig, train_loop

# single thread keeps tiny-tensor runs deterministic and fast
torch.set_num_threads(1)

SMALL_META = ArchitectureMeta(input_size=64, base_width=16)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures")
    fixture_manifest(out, seeds=(0, 1), size=64)
    return out


@pytest.fixture(scope="session")
def manifest(corpus_dir):
    from makeover.assets import load_manifest

    return load_manifest(corpus_dir / "manifest.jsonl")


@pytest.fixture(scope="session")
def corpus(manifest):
    return Corpus.from_manifest(manifest)


@pytest.fixture(scope="session")
def plain_asset(corpus):
    return corpus.plain[0]


@pytest.fixture(scope="session")
def styled_asset(corpus):
    return corpus.styled[0]


@pytest.fixture(scope="session")
def bundle():
    return build_bundle(SMALL_META, seed=0).eval()


@pytest.fixture(scope="session")
def trained_dir(tmp_path_factory, corpus):
    """Model trained for two steps, enough for CLI and service plumbing."""
    out = tmp_path_factory.mktemp("trained")
    cfg = TrainConfig(image_size=64, base_width=16, epochs=1, max_steps=2, seed=0)
    train_loop(corpus, cfg, out)
    return out


@pytest.fixture(scope="session")
def checkpoint_path(trained_dir):
    return trained_dir / "model.pt"
