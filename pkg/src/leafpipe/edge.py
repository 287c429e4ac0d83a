"""Canny edge detection: Gaussian-derivative gradients, non-maximum
suppression, hysteresis thresholding.

Gradients come from separable derivative-of-Gaussian filtering under the
correlation convention, so the x-derivative taps are (+t / sigma^2) * g(t):
a step rising to the right yields positive gx. Direction is quantized into
four sectors (0, 45, 90, 135 degrees) for suppression with a >= survival
rule; border pixels are suppressed outright. Hysteresis links weak pixels
(>= low) to strong seeds (>= high) through 8-connectivity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .filters import correlate1d, default_kernel_size, gaussian_kernel_1d, gaussian_offsets
from .imgcore import ImageBuffer, to_grayscale

# neighbor offsets (dy, dx) per quantized sector: 0, 45, 90, 135 degrees
_SECTOR_STEPS = ((0, 1), (1, 1), (1, 0), (1, -1))


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-pixel gradient components, magnitude, and direction in (-pi, pi]."""

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    direction: np.ndarray


@dataclass(frozen=True, eq=False)
class EdgeMap:
    """Binary edge mask: True = edge ("on"), False = non-edge ("off")."""

    bits: np.ndarray  # (H, W) bool

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def to_image(self) -> ImageBuffer:
        """Edge map as a {0, 1}-valued gray image (serializes as P5 {0, 255})."""
        return ImageBuffer(self.bits.astype(np.float64)[:, :, np.newaxis])


def derivative_kernel_1d(size: int, sigma: float) -> np.ndarray:
    """Correlation taps for d/dt of the unit-sum Gaussian: (t / sigma^2) * g(t)."""
    g1 = gaussian_kernel_1d(size, sigma)
    return gaussian_offsets(size) / (sigma * sigma) * g1


def gradient(img, sigma: float = 1.0) -> GradientField:
    """Derivative-of-Gaussian gradients of a gray image or 2-D field."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if isinstance(img, ImageBuffer):
        field = to_grayscale(img).plane()
    else:
        field = np.asarray(img, dtype=np.float64)
    size = default_kernel_size(sigma)
    g1 = gaussian_kernel_1d(size, sigma)
    d1 = derivative_kernel_1d(size, sigma)
    gx = correlate1d(correlate1d(field, g1, axis=0), d1, axis=1)
    gy = correlate1d(correlate1d(field, g1, axis=1), d1, axis=0)
    magnitude = np.hypot(gx, gy)
    direction = np.arctan2(gy, gx)
    direction = np.where(direction == -np.pi, np.pi, direction)
    return GradientField(gx=gx, gy=gy, magnitude=magnitude, direction=direction)


def nonmax_suppress(g: GradientField) -> np.ndarray:
    """Zero every pixel that is not a magnitude maximum along its gradient line.

    A pixel survives iff its magnitude is >= both neighbors along the
    quantized direction (ties survive). The one-pixel border is zeroed.
    """
    mag = g.magnitude
    h, w = mag.shape
    out = np.zeros_like(mag)
    if h < 3 or w < 3:
        return out
    # sector = round(direction mod pi / 45deg) mod 4
    theta = np.mod(g.direction, np.pi)
    sector = np.floor((theta + np.pi / 8) / (np.pi / 4)).astype(np.int64) % 4

    inner = np.s_[1:-1, 1:-1]
    keep = np.zeros((h - 2, w - 2), dtype=bool)
    center = mag[inner]
    for s, (dy, dx) in enumerate(_SECTOR_STEPS):
        fwd = mag[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        bwd = mag[1 - dy : h - 1 - dy, 1 - dx : w - 1 - dx]
        keep |= (sector[inner] == s) & (center >= fwd) & (center >= bwd)
    out[inner] = np.where(keep, center, 0.0)
    return out


def hysteresis(nms: np.ndarray, low: float, high: float) -> EdgeMap:
    """Keep pixels >= high plus any >= low 8-connected to one (transitively)."""
    if not 0 <= low <= high:
        raise ValueError(f"need 0 <= low <= high, got low={low} high={high}")
    weak = nms >= low
    strong = nms >= high
    edges = strong.copy()
    h, w = nms.shape
    queue = deque(zip(*np.nonzero(strong)))
    while queue:
        y, x = queue.popleft()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny, nx] and not edges[ny, nx]:
                    edges[ny, nx] = True
                    queue.append((ny, nx))
    return EdgeMap(bits=edges)


def canny(img, sigma: float = 1.0, low: float = 0.1, high: float = 0.2) -> EdgeMap:
    """Full detector: gradient -> non-maximum suppression -> hysteresis.

    ``low`` and ``high`` are fractions of the maximum gradient magnitude.
    """
    if not 0 <= low <= high <= 1:
        raise ValueError(f"need 0 <= low <= high <= 1, got low={low} high={high}")
    g = gradient(img, sigma)
    nms = nonmax_suppress(g)
    scale = float(g.magnitude.max())
    if scale <= 0.0:
        return EdgeMap(bits=np.zeros(nms.shape, dtype=bool))
    return hysteresis(nms, low * scale, high * scale)
