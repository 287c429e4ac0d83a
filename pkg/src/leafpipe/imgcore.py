"""Image representation, lossless file I/O, resizing, grayscale, normalization.

Pixels are stored as float64 in [0, 1], shape (H, W, C) with C in {1, 3};
quantization to 8-bit happens only at file boundaries so repeated processing
does not accumulate rounding. PGM (P5) and PPM (P6) are decoded/encoded
natively; other formats go through Pillow behind the same calls.

Images are treated as immutable values: no operation mutates its input, so
they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

GRAY_WEIGHTS = (0.299, 0.587, 0.114)  # ITU-R BT.601 luma

_PNM_SUFFIXES = {".pgm", ".ppm", ".pnm"}


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """A W x H x C raster of reals in [0, 1], the unit flowing through the pipeline."""

    pixels: np.ndarray  # (H, W, C) float64

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] not in (1, 3):
            raise ValueError(f"pixels must be (H, W, 1|3), got shape {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")
        if not np.isfinite(p).all():
            raise ValueError("pixel values must be finite")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def plane(self) -> np.ndarray:
        """The single gray plane as a 2-D array."""
        if self.channels != 1:
            raise ValueError("plane() requires a 1-channel image")
        return self.pixels[:, :, 0]

    @staticmethod
    def from_array(arr: np.ndarray) -> "ImageBuffer":
        """Wrap a (H, W), (H, W, 1) or (H, W, 3) array, validating the contract."""
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, np.newaxis]
        return ImageBuffer(a)


@dataclass(frozen=True, eq=False)
class NormalizedImage:
    """Image after statistics removal: values unbounded, with the removed stats."""

    pixels: np.ndarray  # (H, W, C) float64, unbounded
    mean: float
    std: float

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def restore(self) -> np.ndarray:
        """Undo the normalization: x * std + mean."""
        return self.pixels * self.std + self.mean


def _read_pnm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise DataError("malformed header: unexpected end of file")
    return buf[start:pos], pos


def _load_pnm(buf: bytes, path: str) -> ImageBuffer:
    magic = buf[:2]
    channels = {b"P5": 1, b"P6": 3}.get(magic)
    if channels is None:
        raise DataError(f"unsupported channel count or magic {magic!r} in {path}")
    pos = 2
    try:
        w_tok, pos = _read_pnm_token(buf, pos)
        h_tok, pos = _read_pnm_token(buf, pos)
        maxval_tok, pos = _read_pnm_token(buf, pos)
        width, height, maxval = int(w_tok), int(h_tok), int(maxval_tok)
    except ValueError as exc:
        raise DataError(f"malformed header in {path}: {exc}") from exc
    if width < 1 or height < 1:
        raise DataError(f"malformed header in {path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise DataError(f"unsupported maxval {maxval} in {path} (only 255)")
    pos += 1  # single whitespace byte after maxval
    need = width * height * channels
    raster = buf[pos : pos + need]
    if len(raster) != need:
        raise DataError(f"truncated pixel data in {path}: expected {need} bytes")
    arr = np.frombuffer(raster, dtype=np.uint8).astype(np.float64) / 255.0
    return ImageBuffer(arr.reshape(height, width, channels))


def load_image(path) -> ImageBuffer:
    """Load an image file; PGM/PPM natively, other formats via Pillow."""
    p = Path(path)
    if not p.is_file():
        raise DataError(f"file not found: {path}")
    if p.suffix.lower() in _PNM_SUFFIXES:
        return _load_pnm(p.read_bytes(), str(path))
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - Pillow is a declared dep
        raise DataError(f"Pillow required to decode {path}") from exc
    try:
        with Image.open(p) as im:
            mode = "L" if im.mode in ("L", "1", "I;16", "I") else "RGB"
            arr = np.asarray(im.convert(mode), dtype=np.float64) / 255.0
    except OSError as exc:
        raise DataError(f"cannot decode {path}: {exc}") from exc
    return ImageBuffer.from_array(arr)


def _quantize(pixels: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(pixels * 255.0 + 0.5), 0, 255).astype(np.uint8)


def save_image(img: ImageBuffer, path) -> None:
    """Write an image; P5/P6 for .pgm/.ppm/.pnm, other suffixes via Pillow.

    Round trip load(save(img)) reproduces pixels within 1/255 quantization.
    """
    p = Path(path)
    suffix = p.suffix.lower()
    raw = _quantize(img.pixels)
    try:
        if suffix in _PNM_SUFFIXES:
            if suffix == ".pgm" and img.channels != 1:
                raise DataError(f"cannot save {img.channels}-channel image as PGM")
            if suffix == ".ppm" and img.channels != 3:
                raise DataError(f"cannot save {img.channels}-channel image as PPM")
            magic = b"P5" if img.channels == 1 else b"P6"
            header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
            p.write_bytes(header + raw.tobytes())
        else:
            from PIL import Image

            arr = raw[:, :, 0] if img.channels == 1 else raw
            Image.fromarray(arr).save(p)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def bilinear_sample(pixels: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample (H, W, C) pixels at real coordinates, clamped to the image rect.

    Clamping replicates edge pixels for any coordinate outside the grid.
    Sampling at exact integer coordinates reproduces pixel values bit-exactly.
    """
    h, w = pixels.shape[:2]
    ys = np.clip(ys, 0.0, h - 1.0)
    xs = np.clip(xs, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[..., np.newaxis]
    fx = (xs - x0)[..., np.newaxis]
    top = pixels[y0, x0] * (1.0 - fx) + pixels[y0, x1] * fx
    bot = pixels[y1, x0] * (1.0 - fx) + pixels[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def resize(img: ImageBuffer, out_w: int, out_h: int) -> ImageBuffer:
    """Bilinear resize to exactly (out_w, out_h); same-size resize is identity."""
    if out_w < 1 or out_h < 1:
        raise ValueError("target dimensions must be >= 1")
    # half-pixel centers: output pixel i samples source (i + 0.5) * scale - 0.5
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (img.width / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (img.height / out_h) - 0.5
    grid_y, grid_x = np.meshgrid(ys, xs, indexing="ij")
    out = bilinear_sample(img.pixels, grid_y, grid_x)
    return ImageBuffer(np.clip(out, 0.0, 1.0))


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """Collapse RGB to one channel with BT.601 weights; gray passes through."""
    if img.channels == 1:
        return img
    wr, wg, wb = GRAY_WEIGHTS
    gray = wr * img.pixels[:, :, 0] + wg * img.pixels[:, :, 1] + wb * img.pixels[:, :, 2]
    return ImageBuffer(np.clip(gray, 0.0, 1.0)[:, :, np.newaxis])


def normalize(img: ImageBuffer, mode: str = "zero_mean_unit_var") -> NormalizedImage:
    """Remove sample statistics.

    ``unit_range`` is the identity on storage form (pixels already in [0, 1]);
    ``zero_mean_unit_var`` subtracts the sample mean and divides by the
    population std (denominator N), clamped below at 1e-8 for constant images.
    """
    if mode == "unit_range":
        return NormalizedImage(img.pixels.copy(), mean=0.0, std=1.0)
    if mode != "zero_mean_unit_var":
        raise ValueError(f"unknown normalization mode {mode!r}")
    mean = float(img.pixels.mean())
    std = max(float(img.pixels.std()), 1e-8)
    return NormalizedImage((img.pixels - mean) / std, mean=mean, std=std)
