"""Makeup transfer and removal: training, inference, CLI, and service."""

from .assets import (
    FaceAsset,
    Manifest,
    ManifestRecord,
    load_asset,
    load_asset_with_sidecars,
    load_manifest,
    write_manifest,
)
from .engine import (
    remove,
    run_transfer,
    transfer,
    transfer_degree,
    transfer_partial,
    video_transfer,
)
from .errors import AssetError, CheckpointError, ConfigurationError, NumericalError
from .estimator import MakeupTransferModel
from .losses import LossReport, LossWeights
from .networks import ArchitectureMeta, NetworkBundle, build_bundle, load_checkpoint, save_checkpoint
from .training import Corpus, TrainConfig, Trainer, train_loop

__all__ = [
    "ArchitectureMeta",
    "AssetError",
    "CheckpointError",
    "ConfigurationError",
    "Corpus",
    "FaceAsset",
    "LossReport",
    "LossWeights",
    "MakeupTransferModel",
    "Manifest",
    "ManifestRecord",
    "NetworkBundle",
    "NumericalError",
    "TrainConfig",
    "Trainer",
    "build_bundle",
    "load_asset",
    "load_asset_with_sidecars",
    "load_checkpoint",
    "load_manifest",
    "remove",
    "run_transfer",
    "save_checkpoint",
    "train_loop",
    "transfer",
    "transfer_degree",
    "transfer_partial",
    "video_transfer",
    "write_manifest",
]

__version__ = "0.1.0"
