"""Declarative pipeline configuration.

A config file is plain ``key = value`` lines ('#' starts a comment). Unknown
keys are rejected, every value is type-checked up front, and referenced paths
are validated before any work starts. The same structure feeds preprocessing,
augmentation, training, and the architecture builder.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .augment import AugmentConfig
from .dataset import BatchPipeline
from .errors import DataError
from .nn import DEFAULT_ARCH, TrainConfig
from .rng import mix64

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


def _parse_bool(value: str) -> bool:
    try:
        return _BOOL_WORDS[value.strip().lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {value!r}") from None


@dataclass
class PipelineConfig:
    """Every tunable of the pipeline, with its default value."""

    seed: int = 0
    data_root: str = ""
    image_size: int = 256
    channels: str = "rgb"  # rgb | gray
    normalize: str = "zero_mean_unit_var"  # unit_range | zero_mean_unit_var
    blur_sigma: float = 1.0  # blur follows the resize; 0 disables
    stage: str = "none"  # none | otsu | canny
    canny_sigma: float = 1.0
    canny_low: float = 0.1
    canny_high: float = 0.2
    split_ratio: float = 0.8
    stratified: bool = True
    strict_files: bool = False
    arch: str = DEFAULT_ARCH
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_init: str = "he"
    precision: str = "float32"
    augment: bool = True
    augment_mode: str = "joint"  # joint | one_per_copy
    augment_probability: float = 0.5
    scale: bool = True
    scale_min: float = 0.8
    scale_max: float = 1.25
    rotate: bool = True
    rotation_min: float = -30.0
    rotation_max: float = 30.0
    noise: bool = True
    noise_factor: float = 1.0
    flip: bool = True
    gamma: bool = True
    gamma_min: float = 0.5
    gamma_max: float = 1.5
    pca: bool = True
    pca_alpha_std: float = 0.1
    pca_sample_images: int = 32

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.image_size < 1:
            raise ValueError("image_size must be >= 1")
        if self.channels not in ("rgb", "gray"):
            raise ValueError(f"channels must be rgb|gray, got {self.channels!r}")
        if self.normalize not in ("unit_range", "zero_mean_unit_var"):
            raise ValueError(f"unknown normalize mode {self.normalize!r}")
        if self.stage not in ("none", "otsu", "canny"):
            raise ValueError(f"stage must be none|otsu|canny, got {self.stage!r}")
        if self.stage != "none" and self.channels != "gray":
            raise ValueError(f"stage = {self.stage} conflicts with channels = rgb; "
                             "thresholded/edge input is gray")
        if self.blur_sigma < 0:
            raise ValueError("blur_sigma must be >= 0")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError("split_ratio must be in (0, 1)")
        if not 0.0 <= self.canny_low <= self.canny_high <= 1.0:
            raise ValueError("need 0 <= canny_low <= canny_high <= 1")
        if self.pca_sample_images < 1:
            raise ValueError("pca_sample_images must be >= 1")
        # delegate the rest to the dataclasses they feed
        self.to_train_config()
        self.to_augment_config()

    def to_train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate, momentum=self.momentum,
                           seed=self.seed, weight_init=self.weight_init,
                           precision=self.precision)

    def to_augment_config(self) -> AugmentConfig:
        return AugmentConfig(
            scale_range=(self.scale_min, self.scale_max),
            rotation_range=(self.rotation_min, self.rotation_max),
            noise_factor=self.noise_factor,
            flip=self.flip,
            gamma_range=(self.gamma_min, self.gamma_max),
            pca_alpha_std=self.pca_alpha_std,
            seed=mix64(self.seed, 0xA06),
            scale=self.scale,
            rotate=self.rotate,
            gamma=self.gamma,
            pca=self.pca and self.channels == "rgb",
            noise=self.noise,
            probability=self.augment_probability,
            mode=self.augment_mode,
        )

    def to_pipeline(self, color_pca=None, training: bool = True) -> BatchPipeline:
        aug_cfg = self.to_augment_config() if (training and self.augment) else None
        return BatchPipeline(
            image_size=self.image_size,
            channels=self.channels,
            normalize_mode=self.normalize,
            blur_sigma=self.blur_sigma,
            stage=self.stage,
            canny_sigma=self.canny_sigma,
            canny_low=self.canny_low,
            canny_high=self.canny_high,
            augment_cfg=aug_cfg,
            color_pca=color_pca,
            dtype=np.float32 if self.precision == "float32" else np.float64,
            strict=self.strict_files,
        )

    def input_shape(self) -> tuple[int, int, int]:
        c = 3 if self.channels == "rgb" else 1
        return (c, self.image_size, self.image_size)

    def preprocess_meta(self) -> dict:
        """The settings eval/predict must replay, stored in checkpoints."""
        return {
            "image_size": str(self.image_size),
            "channels": self.channels,
            "normalize": self.normalize,
            "blur_sigma": repr(self.blur_sigma),
            "stage": self.stage,
            "canny_sigma": repr(self.canny_sigma),
            "canny_low": repr(self.canny_low),
            "canny_high": repr(self.canny_high),
        }

    def describe(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines)


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _convert(key: str, raw: str):
    ftype = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if ftype == "bool":
            return _parse_bool(raw)
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ValueError(f"bad value for {key!r}: {exc}") from exc


def parse_config(text: str, overrides: dict | None = None) -> PipelineConfig:
    """Parse key = value lines; unknown keys are an error."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _convert(key, raw)
    for key, val in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = val if not isinstance(val, str) else _convert(key, val)
    return PipelineConfig(**values)


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"config file not found: {path}")
    try:
        return parse_config(p.read_text(), overrides)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def pipeline_from_meta(meta: dict) -> BatchPipeline:
    """Reconstruct evaluation preprocessing from checkpoint metadata."""
    try:
        return BatchPipeline(
            image_size=int(meta["image_size"]),
            channels=meta["channels"],
            normalize_mode=meta["normalize"],
            blur_sigma=float(meta["blur_sigma"]),
            stage=meta.get("stage", "none"),
            canny_sigma=float(meta.get("canny_sigma", 1.0)),
            canny_low=float(meta.get("canny_low", 0.1)),
            canny_high=float(meta.get("canny_high", 0.2)),
        )
    except KeyError as exc:
        raise DataError(f"checkpoint metadata missing {exc}") from exc
