"""Gaussian kernel construction and 2-D convolution, with a separable blur path.

Convolution here uses the correlation convention (no kernel flip); the
Gaussian's symmetry makes the blur path identical either way, and the edge
module's derivative kernels are sign-adjusted for it. Border handling:

* ``reflect`` - mirror including the edge pixel (half-sample symmetric)
* ``clamp``   - replicate the edge pixel
* ``zero``    - pad with zeros
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imgcore import ImageBuffer

_PAD_MODE = {"reflect": "symmetric", "clamp": "edge", "zero": "constant"}


def gaussian_2d(a: float, b: float, sigma: float) -> float:
    """Pointwise 2-D Gaussian: exp(-(a^2 + b^2) / (2 sigma^2)) / (2 pi sigma^2)."""
    return math.exp(-(a * a + b * b) / (2.0 * sigma * sigma)) / (2.0 * math.pi * sigma * sigma)


@dataclass(frozen=True, eq=False)
class GaussianKernel:
    """Normalized 2-D Gaussian weight grid over offsets [-(size-1)/2, +(size-1)/2]."""

    size: int
    sigma: float
    weights: np.ndarray  # (size, size), unit sum


@dataclass(frozen=True, eq=False)
class Kernel2D:
    """Arbitrary odd-sized weight grid for generic correlation."""

    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if w.ndim != 2 or w.shape[0] % 2 == 0 or w.shape[1] % 2 == 0:
            raise ValueError(f"kernel must be 2-D with odd dimensions, got {w.shape}")
        if not np.isfinite(w).all():
            raise ValueError("kernel weights must be finite")

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


def _check_kernel_size(size: int) -> None:
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be a positive odd integer, got {size}")


def gaussian_offsets(size: int) -> np.ndarray:
    """Location indices -(size-1)/2 .. +(size-1)/2."""
    half = (size - 1) // 2
    return np.arange(-half, half + 1, dtype=np.float64)


def gaussian_kernel_1d(size: int, sigma: float) -> np.ndarray:
    """Unit-sum 1-D Gaussian; outer product of two of these equals the 2-D grid."""
    _check_kernel_size(size)
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    t = gaussian_offsets(size)
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return g / g.sum()


def gaussian_kernel(size: int, sigma: float) -> GaussianKernel:
    """Sample the 2-D Gaussian on an odd grid and normalize to unit sum."""
    g1 = gaussian_kernel_1d(size, sigma)
    return GaussianKernel(size=size, sigma=float(sigma), weights=np.outer(g1, g1))


def default_kernel_size(sigma: float) -> int:
    """Odd truncation radius covering +/- 3 sigma of the infinite support."""
    return 2 * max(1, math.ceil(3.0 * sigma)) + 1


def _as_field(img) -> np.ndarray:
    if isinstance(img, ImageBuffer):
        return img.plane()
    field = np.asarray(img, dtype=np.float64)
    if field.ndim != 2:
        raise ValueError(f"expected a 2-D field, got shape {field.shape}")
    return field


def _as_weights(kernel) -> np.ndarray:
    if isinstance(kernel, (Kernel2D, GaussianKernel)):
        return kernel.weights
    return Kernel2D(np.asarray(kernel, dtype=np.float64)).weights


def convolve2d(img, kernel, border: str = "reflect") -> np.ndarray:
    """Correlate a gray field with a 2-D kernel; output has the input's shape."""
    field = _as_field(img)
    weights = _as_weights(kernel)
    kh, kw = weights.shape
    h, w = field.shape
    if kh >= 2 * h or kw >= 2 * w:
        raise ValueError(f"kernel {kh}x{kw} too large for {h}x{w} image")
    if border not in _PAD_MODE:
        raise ValueError(f"unknown border mode {border!r}")
    ph, pw = kh // 2, kw // 2
    padded = np.pad(field, ((ph, ph), (pw, pw)), mode=_PAD_MODE[border])
    windows = sliding_window_view(padded, (kh, kw))
    return np.einsum("ijkl,kl->ij", windows, weights)


def correlate1d(field: np.ndarray, taps: np.ndarray, axis: int, border: str = "reflect") -> np.ndarray:
    """Correlate a 2-D field with a 1-D tap vector along one axis."""
    taps = np.asarray(taps, dtype=np.float64)
    k = taps.shape[0]
    _check_kernel_size(k)
    if border not in _PAD_MODE:
        raise ValueError(f"unknown border mode {border!r}")
    half = k // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (half, half)
    padded = np.pad(field, pad, mode=_PAD_MODE[border])
    windows = sliding_window_view(padded, k, axis=axis)
    return np.tensordot(windows, taps, axes=([2], [0]))


def gaussian_blur(img: ImageBuffer, size: int | None = None, sigma: float = 1.0,
                  border: str = "reflect") -> ImageBuffer:
    """Two-pass separable Gaussian blur; result clamped back to [0, 1]."""
    if size is None:
        size = default_kernel_size(sigma)
    g1 = gaussian_kernel_1d(size, sigma)
    out = np.empty_like(img.pixels)
    for c in range(img.channels):
        tmp = correlate1d(img.pixels[:, :, c], g1, axis=1, border=border)
        out[:, :, c] = correlate1d(tmp, g1, axis=0, border=border)
    return ImageBuffer(np.clip(out, 0.0, 1.0))
