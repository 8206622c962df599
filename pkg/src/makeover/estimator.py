"""Estimator-style facade over training and inference.

MakeupTransferModel follows the fit/transform convention: flat
constructor params, fit() trains the networks, transform() maps
(source, reference) pairs to styled images. The heavy lifting lives in
training.py and engine.py; this class only adapts their interfaces.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import engine
from .assets import DOMAINS, FaceAsset, Manifest, load_manifest
from .errors import ConfigurationError
from .losses import LossWeights
from .networks import load_checkpoint, save_checkpoint
from .training import Corpus, TrainConfig, train_loop


class MakeupTransferModel(BaseEstimator, TransformerMixin):
    """Trainable makeup transfer model with a fit/transform interface."""

    def __init__(
        self,
        image_size: int = 256,
        base_width: int = 64,
        learning_rate: float = 2e-4,
        beta1: float = 0.5,
        beta2: float = 0.999,
        epochs: int = 50,
        batch_size: int = 1,
        seed: int = 0,
        w_visual: float = engine.DEFAULT_VISUAL_WEIGHT,
        adversarial_weight: float = 1.0,
        cycle_weight: float = 10.0,
        perceptual_weight: float = 0.005,
        region_weight: float = 1.0,
        detail_weight: float = 3.0,
        perceptual_features: str = "identity",
        checkpoint_interval: int = 0,
        max_steps: int = 0,
        work_dir: str | None = None,
    ):
        self.image_size = image_size
        self.base_width = base_width
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.w_visual = w_visual
        self.adversarial_weight = adversarial_weight
        self.cycle_weight = cycle_weight
        self.perceptual_weight = perceptual_weight
        self.region_weight = region_weight
        self.detail_weight = detail_weight
        self.perceptual_features = perceptual_features
        self.checkpoint_interval = checkpoint_interval
        self.max_steps = max_steps
        self.work_dir = work_dir

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            weights=LossWeights(
                adversarial=self.adversarial_weight,
                cycle=self.cycle_weight,
                perceptual=self.perceptual_weight,
                region=self.region_weight,
                detail=self.detail_weight,
            ),
            w_visual=self.w_visual,
            learning_rate=self.learning_rate,
            betas=(self.beta1, self.beta2),
            epochs=self.epochs,
            batch_size=self.batch_size,
            image_size=self.image_size,
            seed=self.seed,
            checkpoint_interval=self.checkpoint_interval,
            base_width=self.base_width,
            perceptual_features=self.perceptual_features,
            max_steps=self.max_steps,
        )

    @staticmethod
    def _as_corpus(X) -> Corpus:
        if isinstance(X, Corpus):
            return X
        if isinstance(X, Manifest):
            return Corpus.from_manifest(X)
        if isinstance(X, (str, Path)):
            return Corpus.from_manifest(load_manifest(X))
        if isinstance(X, (list, tuple)) and all(isinstance(a, FaceAsset) for a in X):
            plain = [a for a in X if a.domain == DOMAINS[1]]
            styled = [a for a in X if a.domain == DOMAINS[0]]
            return Corpus(plain=plain, styled=styled)
        raise ConfigurationError(
            "fit() expects a manifest path, Manifest, Corpus, or list of FaceAsset"
        )

    def fit(self, X, y=None):
        corpus = self._as_corpus(X)
        out_dir = Path(self.work_dir) if self.work_dir else Path(tempfile.mkdtemp(prefix="makeover-fit-"))
        self.bundle_, self.metrics_path_ = train_loop(corpus, self._train_config(), out_dir)
        return self

    def _require_fitted(self):
        if not hasattr(self, "bundle_"):
            raise NotFittedError("call fit() or load() before inference")
        return self.bundle_

    def transform(self, X):
        """Map (source, reference) FaceAsset pairs to styled images."""
        bundle = self._require_fitted()
        outputs = [
            engine.transfer(source, reference, bundle, w=self.w_visual)
            for source, reference in X
        ]
        return np.stack(outputs) if outputs else np.zeros((0,), dtype=np.float32)

    def transfer(self, source: FaceAsset, reference: FaceAsset) -> np.ndarray:
        return engine.transfer(source, reference, self._require_fitted(), w=self.w_visual)

    def transfer_partial(
        self, source: FaceAsset, y1: FaceAsset, y2: FaceAsset, regions_from_y1
    ) -> np.ndarray:
        return engine.transfer_partial(
            source, y1, y2, regions_from_y1, self._require_fitted(), w=self.w_visual
        )

    def transfer_degree(
        self, source: FaceAsset, y1: FaceAsset, alpha: float, y2: FaceAsset | None = None
    ) -> np.ndarray:
        return engine.transfer_degree(
            source, y1, alpha, self._require_fitted(), y2=y2, w=self.w_visual
        )

    def remove(self, source: FaceAsset) -> np.ndarray:
        return engine.remove(source, self._require_fitted())

    def save(self, path) -> None:
        save_checkpoint(self._require_fitted(), path)

    def load(self, path):
        self.bundle_ = load_checkpoint(path)
        return self
