"""Otsu's global thresholding and image binarization.

The threshold domain is the 256-bin histogram of 8-bit intensities even
though pixels are stored as reals; bin index doubles as the bin's intensity
value. The scan minimizes the within-class weighted variance

    var_w(t) = omega1(t) * var1(t) + omega2(t) * var2(t)

over every split t in [0, 254], with class 1 = bins <= t (background) and
class 2 = bins > t (foreground). Plateau ties resolve to the lowest t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .imgcore import ImageBuffer

_BINS = np.arange(256, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Histogram256:
    """256-bin intensity histogram."""

    counts: np.ndarray  # (256,) non-negative int64

    def __post_init__(self):
        c = self.counts
        if c.shape != (256,):
            raise ValueError(f"histogram must have 256 bins, got {c.shape}")
        if (c < 0).any():
            raise ValueError("histogram counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class OtsuResult:
    """Chosen split and the class statistics behind it."""

    t: int
    omega1: float
    omega2: float
    var1: float
    var2: float
    within_class_variance: float


def histogram(img: ImageBuffer) -> Histogram256:
    """Bin a gray image: pixel p lands in floor(p * 255 + 0.5)."""
    bins = np.clip(np.floor(img.plane() * 255.0 + 0.5), 0, 255).astype(np.int64)
    counts = np.bincount(bins.ravel(), minlength=256)
    return Histogram256(counts)


def within_class_variance_curve(h: Histogram256) -> np.ndarray:
    """var_w(t) for every split t in [0, 254].

    Empty classes contribute weight 0 and variance 0, so the scan is total.
    """
    counts = h.counts.astype(np.float64)
    total = counts.sum()
    if total < 1:
        raise DataError("degenerate histogram: no samples")
    csum = np.cumsum(counts)
    cmean = np.cumsum(counts * _BINS)
    csq = np.cumsum(counts * _BINS * _BINS)

    n1 = csum[:255]
    n2 = total - n1
    s1 = cmean[:255]
    s2 = cmean[255] - s1
    q1 = csq[:255]
    q2 = csq[255] - q1

    with np.errstate(divide="ignore", invalid="ignore"):
        m1 = np.where(n1 > 0, s1 / n1, 0.0)
        m2 = np.where(n2 > 0, s2 / n2, 0.0)
        v1 = np.where(n1 > 0, q1 / n1 - m1 * m1, 0.0)
        v2 = np.where(n2 > 0, q2 / n2 - m2 * m2, 0.0)
    v1 = np.maximum(v1, 0.0)  # guard E[x^2] - m^2 roundoff
    v2 = np.maximum(v2, 0.0)
    return (n1 / total) * v1 + (n2 / total) * v2


def otsu_threshold(h: Histogram256) -> OtsuResult:
    """Exhaustive scan for the split minimizing within-class variance."""
    if int((h.counts > 0).sum()) < 2:
        raise DataError("degenerate histogram: needs at least two non-empty bins")
    curve = within_class_variance_curve(h)
    t = int(np.argmin(curve))  # first minimum = lowest t on plateaus

    counts = h.counts.astype(np.float64)
    total = counts.sum()
    left, right = counts[: t + 1], counts[t + 1 :]
    bins_l, bins_r = _BINS[: t + 1], _BINS[t + 1 :]
    n1, n2 = left.sum(), right.sum()
    omega1, omega2 = n1 / total, n2 / total
    m1 = float((left * bins_l).sum() / n1) if n1 > 0 else 0.0
    m2 = float((right * bins_r).sum() / n2) if n2 > 0 else 0.0
    var1 = float((left * (bins_l - m1) ** 2).sum() / n1) if n1 > 0 else 0.0
    var2 = float((right * (bins_r - m2) ** 2).sum() / n2) if n2 > 0 else 0.0
    return OtsuResult(
        t=t,
        omega1=float(omega1),
        omega2=float(omega2),
        var1=var1,
        var2=var2,
        within_class_variance=float(omega1 * var1 + omega2 * var2),
    )


def binarize(img: ImageBuffer, t: int) -> ImageBuffer:
    """Pixels above t/255 become foreground 1.0, the rest background 0.0."""
    if not 0 <= t <= 255:
        raise ValueError(f"threshold bin must be in [0, 255], got {t}")
    bits = (img.plane() > t / 255.0).astype(np.float64)
    return ImageBuffer(bits[:, :, np.newaxis])
