"""Generator and discriminator networks plus checkpoint serialization.

Three generator-side networks share one encoder recipe (7x7 stem, two or
three stride-2 downsamples, residual bottleneck with instance norm and no
affine parameters): a makeup distiller that turns a styled reference into
spatial scale/shift maps, an identity distiller doing the same for the
bare-face appearance of a styled input, and a style transfer pair whose
encoder stops at the bottleneck split where modulation is applied and
whose decoder finishes the remaining blocks and upsamples back to an RGB
image in [-1, 1]. Two patch discriminators with 70x70 receptive fields
judge the two image domains separately.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import torch
from torch import nn

from .errors import CheckpointError

CHECKPOINT_FORMAT = 1

#: (kernel, stride) per discriminator conv; receptive field works out to 70
DISC_LAYERS = ((4, 2), (4, 2), (4, 2), (4, 1), (4, 1))


@dataclass(frozen=True)
class ArchitectureMeta:
    input_size: int = 256
    base_width: int = 64
    bottleneck_blocks: int = 6
    amm_split_index: int = 3

    def __post_init__(self):
        if self.input_size not in (64, 256, 512):
            raise ValueError(f"unsupported input size {self.input_size}")
        if self.base_width < 1:
            raise ValueError(f"base width must be >= 1, got {self.base_width}")
        if not 1 <= self.amm_split_index <= self.bottleneck_blocks:
            raise ValueError("bottleneck split outside block range")

    @property
    def downsamples(self) -> int:
        return 3 if self.input_size == 512 else 2

    @property
    def bottleneck_size(self) -> int:
        return self.input_size // (2**self.downsamples)

    @property
    def channels_at_split(self) -> int:
        return self.base_width * 4


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x):
        return x + self.body(x)


def _encoder_stem(meta: ArchitectureMeta) -> nn.Sequential:
    width = meta.base_width
    layers: list[nn.Module] = [
        nn.Conv2d(3, width, 7, padding=3, padding_mode="reflect"),
        nn.InstanceNorm2d(width),
        nn.ReLU(inplace=True),
    ]
    for _ in range(meta.downsamples):
        out = min(width * 2, meta.channels_at_split)
        layers += [
            nn.Conv2d(width, out, 3, stride=2, padding=1),
            nn.InstanceNorm2d(out),
            nn.ReLU(inplace=True),
        ]
        width = out
    return nn.Sequential(*layers)


def _check_image(meta: ArchitectureMeta, x: torch.Tensor) -> None:
    if x.ndim != 4 or x.shape[1] != 3 or x.shape[2] != meta.input_size or x.shape[3] != meta.input_size:
        raise ValueError(
            f"expected Nx3x{meta.input_size}x{meta.input_size} input, got {tuple(x.shape)}"
        )


def _check_features(meta: ArchitectureMeta, v: torch.Tensor) -> None:
    s = meta.bottleneck_size
    if v.ndim != 4 or v.shape[1] != meta.channels_at_split or v.shape[2] != s or v.shape[3] != s:
        raise ValueError(
            f"expected Nx{meta.channels_at_split}x{s}x{s} features, got {tuple(v.shape)}"
        )


class MakeupDistiller(nn.Module):
    """Distills a reference image into 1xH'xW' scale/shift makeup maps.

    Also exposes the bottleneck features at the attention split point,
    which the morphing attention compares against source features.
    """

    def __init__(self, meta: ArchitectureMeta):
        super().__init__()
        self.meta = meta
        self.stem = _encoder_stem(meta)
        ch = meta.channels_at_split
        self.blocks = nn.ModuleList(ResidualBlock(ch) for _ in range(meta.bottleneck_blocks))
        self.scale_head = nn.Conv2d(ch, 1, 1)
        self.shift_head = nn.Conv2d(ch, 1, 1)

    def forward(self, image: torch.Tensor):
        _check_image(self.meta, image)
        h = self.stem(image)
        split = None
        for i, block in enumerate(self.blocks, 1):
            h = block(h)
            if i == self.meta.amm_split_index:
                split = h
        return self.scale_head(h), self.shift_head(h), split


class IdentityDistiller(nn.Module):
    """Distills a styled image into maps encoding its bare-face appearance."""

    def __init__(self, meta: ArchitectureMeta):
        super().__init__()
        self.meta = meta
        self.stem = _encoder_stem(meta)
        ch = meta.channels_at_split
        self.blocks = nn.Sequential(*[ResidualBlock(ch) for _ in range(meta.bottleneck_blocks)])
        self.scale_head = nn.Conv2d(ch, 1, 1)
        self.shift_head = nn.Conv2d(ch, 1, 1)

    def forward(self, image: torch.Tensor):
        _check_image(self.meta, image)
        h = self.blocks(self.stem(image))
        return self.scale_head(h), self.shift_head(h)


class StyleEncoder(nn.Module):
    """Encoder half of the transfer network, up to the modulation split."""

    def __init__(self, meta: ArchitectureMeta):
        super().__init__()
        self.meta = meta
        self.stem = _encoder_stem(meta)
        ch = meta.channels_at_split
        self.blocks = nn.Sequential(*[ResidualBlock(ch) for _ in range(meta.amm_split_index)])

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        _check_image(self.meta, image)
        return self.blocks(self.stem(image))


class StyleDecoder(nn.Module):
    """Decoder half: remaining bottleneck blocks, then upsample to RGB."""

    def __init__(self, meta: ArchitectureMeta):
        super().__init__()
        self.meta = meta
        ch = meta.channels_at_split
        rest = meta.bottleneck_blocks - meta.amm_split_index
        self.blocks = nn.Sequential(*[ResidualBlock(ch) for _ in range(rest)])
        layers: list[nn.Module] = []
        width = ch
        for _ in range(meta.downsamples):
            out = max(width // 2, meta.base_width)
            # nearest-neighbor upsample + conv avoids checkerboard artifacts
            layers += [
                nn.Upsample(scale_factor=2, mode="nearest"),
                nn.Conv2d(width, out, 3, padding=1),
                nn.InstanceNorm2d(out),
                nn.ReLU(inplace=True),
            ]
            width = out
        layers += [nn.Conv2d(width, 3, 7, padding=3, padding_mode="reflect"), nn.Tanh()]
        self.up = nn.Sequential(*layers)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        _check_features(self.meta, features)
        return self.up(self.blocks(features))


class PatchDiscriminator(nn.Module):
    """Emits a grid of real/fake logits, one per 70x70 image patch."""

    def __init__(self, meta: ArchitectureMeta):
        super().__init__()
        self.meta = meta
        layers: list[nn.Module] = []
        in_ch, width = 3, meta.base_width
        for i, (kernel, stride) in enumerate(DISC_LAYERS[:-1]):
            layers.append(nn.Conv2d(in_ch, width, kernel, stride=stride, padding=1))
            if i > 0:
                layers.append(nn.InstanceNorm2d(width))
            layers.append(nn.LeakyReLU(0.2, inplace=True))
            in_ch, width = width, min(width * 2, meta.base_width * 8)
        kernel, stride = DISC_LAYERS[-1]
        layers.append(nn.Conv2d(in_ch, 1, kernel, stride=stride, padding=1))
        self.body = nn.Sequential(*layers)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        _check_image(self.meta, image)
        return self.body(image)


NETWORK_NAMES = ("makeup_net", "identity_net", "encoder", "decoder", "disc_plain", "disc_makeup")


@dataclass
class NetworkBundle:
    """All trainable parameters plus architecture metadata.

    disc_plain judges the non-makeup domain, disc_makeup the styled one.
    Forward passes over a bundle in eval mode are deterministic and safe
    to share across threads; training mutates it and must be exclusive.
    """

    meta: ArchitectureMeta
    makeup_net: MakeupDistiller
    identity_net: IdentityDistiller
    encoder: StyleEncoder
    decoder: StyleDecoder
    disc_plain: PatchDiscriminator
    disc_makeup: PatchDiscriminator

    def networks(self) -> dict[str, nn.Module]:
        return {name: getattr(self, name) for name in NETWORK_NAMES}

    def generator_parameters(self):
        for name in ("makeup_net", "identity_net", "encoder", "decoder"):
            yield from getattr(self, name).parameters()

    def discriminator_parameters(self):
        yield from self.disc_plain.parameters()
        yield from self.disc_makeup.parameters()

    def train(self) -> "NetworkBundle":
        for net in self.networks().values():
            net.train()
        return self

    def eval(self) -> "NetworkBundle":
        for net in self.networks().values():
            net.eval()
        return self

    def distill_makeup(self, reference: torch.Tensor):
        return self.makeup_net(reference)

    def distill_identity(self, styled: torch.Tensor):
        return self.identity_net(styled)

    def encode(self, image: torch.Tensor) -> torch.Tensor:
        return self.encoder(image)

    def decode(self, features: torch.Tensor) -> torch.Tensor:
        return self.decoder(features)

    def discriminate(self, image: torch.Tensor, domain: str) -> torch.Tensor:
        if domain == "non-makeup":
            return self.disc_plain(image)
        if domain == "makeup":
            return self.disc_makeup(image)
        raise ValueError(f"unknown domain {domain!r}")


def _init_weights(module: nn.Module) -> None:
    if isinstance(module, nn.Conv2d):
        nn.init.normal_(module.weight, 0.0, 0.02)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def build_bundle(meta: ArchitectureMeta, seed: int | None = None) -> NetworkBundle:
    if seed is not None:
        torch.manual_seed(seed)
    bundle = NetworkBundle(
        meta=meta,
        makeup_net=MakeupDistiller(meta),
        identity_net=IdentityDistiller(meta),
        encoder=StyleEncoder(meta),
        decoder=StyleDecoder(meta),
        disc_plain=PatchDiscriminator(meta),
        disc_makeup=PatchDiscriminator(meta),
    )
    for net in bundle.networks().values():
        net.apply(_init_weights)
    return bundle


def meta_as_dict(meta: ArchitectureMeta) -> dict:
    d = asdict(meta)
    d["channels_at_split"] = meta.channels_at_split
    return d


def save_checkpoint(bundle: NetworkBundle, path, training_state: dict | None = None) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "meta_json": json.dumps(meta_as_dict(bundle.meta), sort_keys=True),
        "networks": {name: net.state_dict() for name, net in bundle.networks().items()},
    }
    if training_state is not None:
        payload["training"] = training_state
    torch.save(payload, path)


def read_checkpoint(path) -> tuple[NetworkBundle, dict | None]:
    """Load a checkpoint archive; returns the bundle and any training state."""
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "meta_json" not in payload or "networks" not in payload:
        raise CheckpointError(f"checkpoint {path} has no metadata header")
    raw = json.loads(payload["meta_json"])
    declared_split = raw.pop("channels_at_split", None)
    try:
        meta = ArchitectureMeta(**raw)
    except (TypeError, ValueError) as exc:
        raise CheckpointError(f"checkpoint {path}: bad architecture metadata: {exc}") from exc
    if declared_split is not None and declared_split != meta.channels_at_split:
        raise CheckpointError(f"checkpoint {path}: channels_at_split header disagrees with shape")
    bundle = build_bundle(meta)
    for name, net in bundle.networks().items():
        if name not in payload["networks"]:
            raise CheckpointError(f"checkpoint {path}: missing parameters for {name}")
        try:
            net.load_state_dict(payload["networks"][name])
        except RuntimeError as exc:
            raise CheckpointError(f"checkpoint {path}: {name}: {exc}") from exc
    return bundle, payload.get("training")


def load_checkpoint(path, expect: ArchitectureMeta | None = None) -> NetworkBundle:
    bundle, _ = read_checkpoint(path)
    if expect is not None and bundle.meta != expect:
        raise CheckpointError(
            f"checkpoint architecture {meta_as_dict(bundle.meta)} does not match requested {meta_as_dict(expect)}"
        )
    return bundle.eval()


def checkpoint_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def bundle_digest(bundle: NetworkBundle) -> str:
    """Deterministic digest of all parameter bytes, for change detection."""
    digest = hashlib.sha256()
    for name, net in bundle.networks().items():
        digest.update(name.encode())
        for key, tensor in net.state_dict().items():
            digest.update(key.encode())
            digest.update(tensor.detach().cpu().numpy().tobytes())
    return digest.hexdigest()
