"""Unpaired adversarial training: sampling, per-step updates, the loop.

Each step draws a bare face x and two styled faces y1 (style source) and
y_r (removal input), builds the four generated images (styled x, bared
y_r, and the two cycle reconstructions), then applies one discriminator
update followed by one generator update. The per-term loss values are
appended to a JSON-lines metrics file, one line per executed step.
Checkpoints embed optimizer and RNG state so a resumed run continues the
exact step sequence of an uninterrupted one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import torch

from .assets import FaceAsset, Manifest, load_assets
from .engine import FaceTensors, identity_style, reference_style, styled_image
from .errors import CheckpointError, ConfigurationError, NumericalError
from .losses import (
    LossReport,
    LossWeights,
    adv_loss_d,
    adv_loss_g,
    build_pseudo_gt,
    cycle_loss,
    detail_loss,
    make_feature_extractor,
    perceptual_loss,
    region_loss,
    total_losses,
    weighted_totals,
)
from .networks import ArchitectureMeta, NetworkBundle, build_bundle, read_checkpoint, save_checkpoint


@dataclass(frozen=True)
class TrainConfig:
    weights: LossWeights = field(default_factory=LossWeights)
    w_visual: float = 0.01
    learning_rate: float = 2e-4
    betas: tuple[float, float] = (0.5, 0.999)
    epochs: int = 50
    batch_size: int = 1
    image_size: int = 256
    seed: int = 0
    checkpoint_interval: int = 0
    base_width: int = 64
    perceptual_features: str = "identity"
    max_steps: int = 0

    def __post_init__(self):
        # zero is allowed: a no-op optimizer run is a useful diagnostic
        if not (math.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.image_size not in (64, 256, 512):
            raise ConfigurationError(f"image_size must be 64, 256 or 512, got {self.image_size}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.w_visual < 0:
            raise ConfigurationError(f"w_visual must be >= 0, got {self.w_visual}")
        if self.checkpoint_interval < 0 or self.max_steps < 0:
            raise ConfigurationError("checkpoint_interval and max_steps must be >= 0")
        if len(self.betas) != 2 or not all(0.0 <= b < 1.0 for b in self.betas):
            raise ConfigurationError(f"betas must be two values in [0, 1), got {self.betas}")

    def meta(self) -> ArchitectureMeta:
        return ArchitectureMeta(input_size=self.image_size, base_width=self.base_width)


@dataclass
class Corpus:
    """All assets preloaded and split by domain; desk-scale by design."""

    plain: list[FaceAsset]
    styled: list[FaceAsset]

    @classmethod
    def from_manifest(cls, manifest: Manifest) -> "Corpus":
        loaded = load_assets(manifest)
        return cls(
            plain=[a for a in loaded if a.domain == "non-makeup"],
            styled=[a for a in loaded if a.domain == "makeup"],
        )

    def all_assets(self) -> list[FaceAsset]:
        return [*self.plain, *self.styled]


def sample_pair(corpus: Corpus, rng: np.random.Generator) -> tuple[FaceAsset, FaceAsset, FaceAsset]:
    """Uniform independent draws: bare x, style reference y1, removal y_r."""
    if not corpus.plain or not corpus.styled:
        raise ConfigurationError("training needs at least one asset in each domain")
    x = corpus.plain[int(rng.integers(len(corpus.plain)))]
    y1 = corpus.styled[int(rng.integers(len(corpus.styled)))]
    y_r = corpus.styled[int(rng.integers(len(corpus.styled)))]
    return x, y1, y_r


def _validate_corpus(corpus: Corpus, config: TrainConfig) -> None:
    expected = (config.image_size, config.image_size)
    for asset in corpus.all_assets():
        if asset.size != expected:
            raise ConfigurationError(
                f"asset {asset.id!r} is {asset.size}, config expects {expected}"
            )
    if config.weights.detail > 0:
        counts = set()
        for asset in corpus.all_assets():
            if asset.dense is None:
                raise ConfigurationError(
                    f"detail weight {config.weights.detail} > 0 requires dense landmarks "
                    f"for every asset; {asset.id!r} has none (set the detail weight to 0 "
                    "to train without them)"
                )
            counts.add(len(asset.dense))
        if len(counts) > 1:
            raise ConfigurationError(
                f"dense landmark counts differ across assets ({sorted(counts)}); "
                "correspondence is index-aligned and needs equal counts"
            )


class Trainer:
    """Owns the bundle, both optimizers, and the sampling RNG."""

    def __init__(self, corpus: Corpus, config: TrainConfig, bundle: NetworkBundle | None = None):
        _validate_corpus(corpus, config)
        self.corpus = corpus
        self.config = config
        self.extractor = make_feature_extractor(config.perceptual_features)
        if bundle is None:
            bundle = build_bundle(config.meta(), seed=config.seed)
        elif bundle.meta != config.meta():
            raise ConfigurationError("bundle architecture does not match the config")
        self.bundle = bundle.train()
        self.opt_g = torch.optim.Adam(
            list(bundle.generator_parameters()), lr=config.learning_rate, betas=config.betas
        )
        self.opt_d = torch.optim.Adam(
            list(bundle.discriminator_parameters()), lr=config.learning_rate, betas=config.betas
        )
        self.rng = np.random.default_rng(config.seed)
        self.step_index = 0

    # -- one optimization step --------------------------------------------

    def _generate(self, x: FaceAsset, y1: FaceAsset, y_r: FaceAsset):
        """Forward passes for one sampled triple; everything differentiable."""
        bundle, w = self.bundle, self.config.w_visual
        x_t = FaceTensors(torch.from_numpy(x.image), x.parsing, x.landmarks)
        yr_t = FaceTensors(torch.from_numpy(y_r.image), y_r.parsing, y_r.landmarks)

        v_x = bundle.encode(x_t.image.unsqueeze(0))
        maps_fwd, _ = reference_style(bundle, x_t, y1, w, v_x=v_x)
        fake_makeup = styled_image(bundle, v_x, maps_fwd)

        v_yr = bundle.encode(yr_t.image.unsqueeze(0))
        fake_plain = styled_image(bundle, v_yr, identity_style(bundle, yr_t.image))

        # cycle back: bare the styled x, restyle the bared y_r with y_r's look
        v_fm = bundle.encode(fake_makeup.unsqueeze(0))
        x_rec = styled_image(bundle, v_fm, identity_style(bundle, fake_makeup))
        fp_t = FaceTensors(fake_plain, y_r.parsing, y_r.landmarks)
        v_fp = bundle.encode(fake_plain.unsqueeze(0))
        maps_back, _ = reference_style(bundle, fp_t, yr_t, w, v_x=v_fp)
        y_rec = styled_image(bundle, v_fp, maps_back)
        return fake_makeup, fake_plain, x_rec, y_rec

    def train_step(self, batch: list[tuple[FaceAsset, FaceAsset, FaceAsset]]) -> LossReport:
        config, bundle = self.config, self.bundle
        fake_makeups, fake_plains, x_recs, y_recs = [], [], [], []
        pseudo_gts, details = [], []
        for x, y1, y_r in batch:
            fake_makeup, fake_plain, x_rec, y_rec = self._generate(x, y1, y_r)
            fake_makeups.append(fake_makeup)
            fake_plains.append(fake_plain)
            x_recs.append(x_rec)
            y_recs.append(y_rec)
            pseudo_gts.append(torch.from_numpy(build_pseudo_gt(x, y1)))
            if config.weights.detail > 0:
                details.append(
                    detail_loss(
                        fake_makeup,
                        torch.from_numpy(y1.image),
                        torch.from_numpy(x.dense),
                        torch.from_numpy(y1.dense),
                    )
                )

        real_plain = torch.stack([torch.from_numpy(x.image) for x, _, _ in batch])
        real_makeup = torch.stack([torch.from_numpy(y1.image) for _, y1, _ in batch])
        real_removal = torch.stack([torch.from_numpy(y_r.image) for _, _, y_r in batch])
        fake_makeup_b = torch.stack(fake_makeups)
        fake_plain_b = torch.stack(fake_plains)

        loss_d = adv_loss_d(
            bundle.disc_plain, bundle.disc_makeup,
            real_plain, real_makeup, fake_plain_b, fake_makeup_b,
        )
        if not torch.isfinite(loss_d):
            raise NumericalError(f"loss term adv_d is not finite: {float(loss_d)}")
        self.opt_d.zero_grad(set_to_none=True)
        (config.weights.adversarial * loss_d).backward()
        self.opt_d.step()

        terms = {
            "adv_g": adv_loss_g(bundle.disc_plain, bundle.disc_makeup, fake_plain_b, fake_makeup_b),
            "cycle": cycle_loss(real_plain, torch.stack(x_recs), real_removal, torch.stack(y_recs)),
            "perceptual": perceptual_loss(real_plain, fake_makeup_b, self.extractor)
            + perceptual_loss(real_removal, fake_plain_b, self.extractor),
            "region": region_loss(fake_makeup_b, torch.stack(pseudo_gts)),
            "detail": torch.stack(details).mean() if details else torch.zeros(()),
        }
        # validates finiteness of every term before any generator update
        report = total_losses({**terms, "adv_d": loss_d}, config.weights)
        total_g, _ = weighted_totals(terms, config.weights)
        self.opt_g.zero_grad(set_to_none=True)
        total_g.backward()
        self.opt_g.step()
        return report

    def step(self) -> LossReport:
        batch = [sample_pair(self.corpus, self.rng) for _ in range(self.config.batch_size)]
        report = self.train_step(batch)
        self.step_index += 1
        return report

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        save_checkpoint(
            self.bundle,
            path,
            training_state={
                "step": self.step_index,
                "opt_g": self.opt_g.state_dict(),
                "opt_d": self.opt_d.state_dict(),
                "torch_rng": torch.get_rng_state(),
                "sampler": self.rng.bit_generator.state,
            },
        )

    @classmethod
    def from_checkpoint(cls, corpus: Corpus, config: TrainConfig, path) -> "Trainer":
        bundle, state = read_checkpoint(path)
        if state is None:
            raise CheckpointError(f"checkpoint {path} carries no training state, cannot resume")
        trainer = cls(corpus, config, bundle=bundle)
        trainer.opt_g.load_state_dict(state["opt_g"])
        trainer.opt_d.load_state_dict(state["opt_d"])
        torch.set_rng_state(state["torch_rng"])
        trainer.rng.bit_generator.state = state["sampler"]
        trainer.step_index = int(state["step"])
        return trainer


def planned_steps(corpus: Corpus, config: TrainConfig) -> int:
    per_epoch = max(len(corpus.plain), len(corpus.styled))
    total = config.epochs * per_epoch
    if config.max_steps:
        total = min(total, config.max_steps)
    return total


def train_loop(
    source: Manifest | Corpus,
    config: TrainConfig,
    out_dir,
    resume_from=None,
) -> tuple[NetworkBundle, Path]:
    """Run the full schedule; returns the trained bundle and metrics path.

    Writes checkpoint-NNNNNN.pt every checkpoint_interval steps (when > 0)
    and model.pt at the end. With resume_from, continues that checkpoint's
    step count and appends to the existing metrics file.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = Corpus.from_manifest(source) if isinstance(source, Manifest) else source
    if resume_from is not None:
        trainer = Trainer.from_checkpoint(corpus, config, resume_from)
    else:
        trainer = Trainer(corpus, config)
    total = planned_steps(corpus, config)
    metrics_path = out / "metrics.jsonl"
    with open(metrics_path, "a" if resume_from is not None else "w") as fh:
        while trainer.step_index < total:
            report = trainer.step()
            fh.write(json.dumps({"step": trainer.step_index, **report.as_dict()}) + "\n")
            fh.flush()
            if (
                config.checkpoint_interval
                and trainer.step_index % config.checkpoint_interval == 0
                and trainer.step_index < total
            ):
                trainer.save(out / f"checkpoint-{trainer.step_index:06d}.pt")
    trainer.save(out / "model.pt")
    return trainer.bundle.eval(), metrics_path


def smoke_config(**overrides) -> TrainConfig:
    """Small fast preset for the 64px fixture corpus; default loss weights."""
    base = TrainConfig(
        image_size=64,
        base_width=16,
        epochs=150,
        checkpoint_interval=0,
        seed=0,
    )
    return replace(base, **overrides) if overrides else base
