"""Class-per-folder dataset ingestion, deterministic train/test splitting,
and mini-batch iteration with the preprocessing pipeline.

Dataset layout: ``<root>/<class_name>/<image files>``. Class names come from
subdirectory names in lexicographic order; the class count is always inferred
from the tree, never hard-coded. Splits are seeded and stratified by default
(largest-remainder allocation keeps every class within one item of the exact
ratio while the global train size stays floor(ratio * N + 0.5)).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from . import augment as aug
from . import edge, filters, imgcore, segment
from .errors import DataError
from .rng import Rng, mix64

IMAGE_SUFFIXES = {".pgm", ".ppm", ".pnm", ".png", ".jpg", ".jpeg", ".bmp"}

Item = tuple[str, int]  # (path, class index)


@dataclass(frozen=True)
class LabeledDataset:
    classes: list[str]
    items: list[Item]

    @property
    def num_classes(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class SplitDataset:
    train: list[Item]
    test: list[Item]
    seed: int
    ratio: float
    classes: list[str]


@dataclass(frozen=True, eq=False)
class Batch:
    inputs: np.ndarray  # (B, C, H, W)
    labels: np.ndarray  # (B,) int64
    paths: list[str]


def scan_dataset(root) -> LabeledDataset:
    """Build the class list and item index from a class-per-folder tree."""
    rootp = Path(root)
    if not rootp.is_dir():
        raise DataError(f"dataset root not found: {root}")
    class_dirs = sorted(d for d in rootp.iterdir() if d.is_dir())
    if len(class_dirs) < 2:
        raise DataError(f"need at least 2 class folders under {root}, found {len(class_dirs)}")
    classes = [d.name for d in class_dirs]
    items: list[Item] = []
    for idx, d in enumerate(class_dirs):
        files = sorted(f for f in d.iterdir()
                       if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES)
        if not files:
            raise DataError(f"class folder {d} contains no images")
        items.extend((str(f), idx) for f in files)
    return LabeledDataset(classes=classes, items=items)


def _train_count(ratio: float, n: int) -> int:
    # "round" fixed as half-up, not banker's
    return int(np.floor(ratio * n + 0.5))


def split(ds: LabeledDataset, ratio: float = 0.8, seed: int = 0,
          stratified: bool = True) -> SplitDataset:
    """Deterministic shuffled partition; |train| == round(ratio * N) exactly."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n = len(ds.items)
    target = _train_count(ratio, n)

    if not stratified:
        perm = Rng(mix64(seed, 0x5F17)).permutation(n)
        shuffled = [ds.items[i] for i in perm]
        return SplitDataset(train=shuffled[:target], test=shuffled[target:],
                            seed=seed, ratio=ratio, classes=list(ds.classes))

    per_class: list[list[Item]] = [[] for _ in ds.classes]
    for item in ds.items:
        per_class[item[1]].append(item)
    for k, members in enumerate(per_class):
        if len(members) < 2:
            raise DataError(f"class {ds.classes[k]!r} has {len(members)} item(s); "
                            "stratified split needs at least 2 per class")

    base = [int(np.floor(ratio * len(m))) for m in per_class]
    frac = [ratio * len(m) - b for m, b in zip(per_class, base)]
    need = target - sum(base)
    # hand out the remainder by largest fraction; prefer classes whose test
    # side stays non-empty, so small classes are never drained
    order = sorted(range(len(per_class)), key=lambda k: (-frac[k], k))
    takes = list(base)
    for capped in (True, False):
        for k in order:
            if need <= 0:
                break
            limit = len(per_class[k]) - 1 if capped else len(per_class[k])
            if takes[k] < limit:
                takes[k] += 1
                need -= 1

    train: list[Item] = []
    test: list[Item] = []
    for k, members in enumerate(per_class):
        perm = Rng(mix64(seed, 0x5F17, k)).permutation(len(members))
        shuffled = [members[i] for i in perm]
        train.extend(shuffled[: takes[k]])
        test.extend(shuffled[takes[k]:])
    return SplitDataset(train=train, test=test, seed=seed, ratio=ratio,
                        classes=list(ds.classes))


def export_split_manifest(sp: SplitDataset, path, root=None) -> None:
    """CSV audit trail: path, class, partition (paths relative to root if given)."""
    import csv

    rootp = Path(root) if root is not None else None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "class", "partition"])
        for part, items in (("train", sp.train), ("test", sp.test)):
            for p, k in items:
                rel = str(Path(p).relative_to(rootp)) if rootp else p
                writer.writerow([rel, sp.classes[k], part])


def load_split_manifest(path, classes: list[str], root=None) -> SplitDataset:
    """Rebuild a SplitDataset from a manifest, mapping class names via ``classes``."""
    import csv

    manifest = Path(path)
    if not manifest.is_file():
        raise DataError(f"split manifest not found: {path}")
    index = {name: k for k, name in enumerate(classes)}
    train: list[Item] = []
    test: list[Item] = []
    with open(manifest, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["path", "class", "partition"]:
            raise DataError(f"malformed split manifest {path}: bad header {header}")
        for row in reader:
            if len(row) != 3:
                raise DataError(f"malformed split manifest row: {row}")
            p, cls, part = row
            if cls not in index:
                raise DataError(f"manifest class {cls!r} unknown to this model")
            full = str(Path(root) / p) if root is not None else p
            item = (full, index[cls])
            if part == "train":
                train.append(item)
            elif part == "test":
                test.append(item)
            else:
                raise DataError(f"malformed partition {part!r} in manifest")
    return SplitDataset(train=train, test=test, seed=-1, ratio=float("nan"),
                        classes=list(classes))


@dataclass
class BatchPipeline:
    """Per-image preparation plus epoch batching.

    Preparation order: resize -> grayscale (per channel policy) -> optional
    blur -> optional Otsu/Canny stage -> augmentation (training only) ->
    normalization -> (C, H, W) tensor. Augmentation runs on storage-form
    pixels before statistics removal since its operators contract to [0, 1].
    """

    image_size: int = 256
    channels: str = "rgb"  # "rgb" | "gray"
    normalize_mode: str = "zero_mean_unit_var"
    blur_sigma: float = 0.0  # 0 disables
    stage: str = "none"  # "none" | "otsu" | "canny"
    canny_sigma: float = 1.0
    canny_low: float = 0.1
    canny_high: float = 0.2
    augment_cfg: aug.AugmentConfig | None = None
    color_pca: aug.ColorPCA | None = None
    dtype: type = np.float32
    strict: bool = False

    def __post_init__(self):
        if self.channels not in ("rgb", "gray"):
            raise ValueError(f"channels must be rgb|gray, got {self.channels!r}")
        if self.stage not in ("none", "otsu", "canny"):
            raise ValueError(f"stage must be none|otsu|canny, got {self.stage!r}")
        if self.stage != "none" and self.channels != "gray":
            raise ValueError(f"stage {self.stage!r} produces gray input; set channels=gray")

    @property
    def input_channels(self) -> int:
        return 3 if self.channels == "rgb" else 1

    def prepare(self, img: imgcore.ImageBuffer, rng: Rng | None = None,
                train: bool = False) -> np.ndarray:
        """One image to a (C, H, W) network input."""
        img = imgcore.resize(img, self.image_size, self.image_size)
        if self.channels == "gray":
            img = imgcore.to_grayscale(img)
        if self.blur_sigma > 0:
            img = filters.gaussian_blur(img, sigma=self.blur_sigma)
        if self.stage == "otsu":
            res = segment.otsu_threshold(segment.histogram(img))
            img = segment.binarize(img, res.t)
        elif self.stage == "canny":
            img = edge.canny(img, self.canny_sigma, self.canny_low, self.canny_high).to_image()
        if train and self.augment_cfg is not None:
            if rng is None:
                raise ValueError("augmentation requires an rng")
            img = aug.augment(img, self.augment_cfg, rng, pca=self.color_pca)
        norm = imgcore.normalize(img, self.normalize_mode)
        return norm.pixels.transpose(2, 0, 1).astype(self.dtype)

    def _load(self, path: str) -> imgcore.ImageBuffer | None:
        try:
            return imgcore.load_image(path)
        except DataError:
            if self.strict:
                raise
            print(f"leafpipe: skipping unreadable image {path}", file=sys.stderr)
            return None

    def batches(self, items: list[Item], batch_size: int, seed: int = 0,
                epoch: int = 0, train: bool = False) -> Iterator[Batch]:
        """One epoch over ``items``: every item exactly once, last batch short.

        Training epochs reshuffle from the (seed, epoch) stream; evaluation
        keeps the given order. Per-image augmentation substreams hang off
        (augment seed, epoch, item index) so scheduling cannot change results.
        """
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        n = len(items)
        if train:
            order = Rng(mix64(seed, 0xE70C4, epoch)).permutation(n)
        else:
            order = np.arange(n)
        aug_seed = self.augment_cfg.seed if self.augment_cfg is not None else 0
        for start in range(0, n, batch_size):
            tensors, labels, paths = [], [], []
            for i in order[start : start + batch_size]:
                path, label = items[int(i)]
                img = self._load(path)
                if img is None:
                    continue
                rng = Rng(mix64(aug_seed, epoch, int(i)))
                try:
                    tensors.append(self.prepare(img, rng=rng, train=train))
                except DataError:
                    if self.strict:
                        raise
                    print(f"leafpipe: skipping degenerate image {path}", file=sys.stderr)
                    continue
                labels.append(label)
                paths.append(path)
            if tensors:
                yield Batch(inputs=np.stack(tensors),
                            labels=np.asarray(labels, dtype=np.int64),
                            paths=paths)
