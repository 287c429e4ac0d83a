"""The six training-time augmentation operators: scaling, rotation, noise
injection, vertical flip, gamma correction, PCA color shift.

Every operator preserves dimensions and the [0, 1] range, and every random
draw comes from an explicit Rng, so a (input, config, seed) triple fully
determines the output. The composite ``augment`` applies the operators in a
fixed order, each gated by its own Bernoulli draw.

Noise "factor" multiplies a fixed base std of 0.05 in storage units. The PCA
color shift adds sum_i alpha_i * lambda_i * v_i (one alpha draw per image) to
every pixel's RGB, where (lambda_i, v_i) is the eigensystem of the dataset's
3x3 channel covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imgcore import ImageBuffer, bilinear_sample
from .rng import Rng

NOISE_BASE_STD = 0.05

# composite application order
OPERATORS = ("scale", "rotate", "flip", "gamma", "pca", "noise")


@dataclass(frozen=True)
class AugmentConfig:
    """Operator parameters, per-operator enables, and the gate probability."""

    scale_range: tuple[float, float] = (0.8, 1.25)
    rotation_range: tuple[float, float] = (-30.0, 30.0)  # degrees
    noise_factor: float = 1.0
    flip: bool = True  # random vertical flip enabled
    gamma_range: tuple[float, float] = (0.5, 1.5)
    pca_alpha_std: float = 0.1
    seed: int = 0
    scale: bool = True
    rotate: bool = True
    gamma: bool = True
    pca: bool = True
    noise: bool = True
    probability: float = 0.5  # per-operator Bernoulli gate; 1.0 = always on
    mode: str = "joint"  # "joint" | "one_per_copy"

    def __post_init__(self):
        if self.scale_range[0] <= 0 or self.scale_range[0] > self.scale_range[1]:
            raise ValueError(f"bad scale_range {self.scale_range}")
        if self.rotation_range[0] > self.rotation_range[1]:
            raise ValueError(f"bad rotation_range {self.rotation_range}")
        if self.noise_factor < 0:
            raise ValueError("noise_factor must be >= 0")
        if self.gamma_range[0] <= 0 or self.gamma_range[0] > self.gamma_range[1]:
            raise ValueError(f"bad gamma_range {self.gamma_range}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must be in [0, 1]")
        if self.mode not in ("joint", "one_per_copy"):
            raise ValueError(f"unknown augment mode {self.mode!r}")

    def enabled_operators(self) -> tuple[str, ...]:
        flags = {"scale": self.scale, "rotate": self.rotate, "flip": self.flip,
                 "gamma": self.gamma, "pca": self.pca, "noise": self.noise}
        return tuple(op for op in OPERATORS if flags[op])


@dataclass(frozen=True, eq=False)
class ColorPCA:
    """Eigensystem of the pooled RGB channel covariance."""

    covariance: np.ndarray  # (3, 3) symmetric
    eigenvalues: np.ndarray  # (3,) descending
    eigenvectors: np.ndarray  # (3, 3), columns orthonormal


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below tol. Returns
    (eigenvalues descending, eigenvector columns), with each eigenvector's
    largest-magnitude component made positive for a deterministic sign.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("matrix must be symmetric")
    n = a.shape[0]
    v = np.eye(n)
    upper = np.triu_indices(n, k=1)
    for _ in range(max_sweeps):
        # norm of the off-diagonal part itself; a sum-minus-diagonal form
        # cancels catastrophically near convergence
        off = math.sqrt(2.0) * float(np.linalg.norm(a[upper]))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:  # asymptotic form; theta**2 would overflow
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    eigvals = np.diag(a).copy()
    order = np.argsort(-eigvals, kind="stable")
    eigvals = eigvals[order]
    v = v[:, order]
    for j in range(n):
        k = int(np.argmax(np.abs(v[:, j])))
        if v[k, j] < 0:
            v[:, j] = -v[:, j]
    return eigvals, v


def scale_image(img: ImageBuffer, factor: float) -> ImageBuffer:
    """Zoom about the center by ``factor``, keeping the original dimensions.

    Zoom-out regions fill by edge replication; factor 1 is a bit-exact identity.
    """
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    h, w = img.height, img.width
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys = (np.arange(h, dtype=np.float64) - cy) / factor + cy
    xs = (np.arange(w, dtype=np.float64) - cx) / factor + cx
    grid_y, grid_x = np.meshgrid(ys, xs, indexing="ij")
    return ImageBuffer(np.clip(bilinear_sample(img.pixels, grid_y, grid_x), 0.0, 1.0))


def rotate_image(img: ImageBuffer, degrees: float) -> ImageBuffer:
    """Rotate about the center, bilinear with edge-replicated fill, same dims."""
    if degrees == 0.0:
        return img
    h, w = img.height, img.width
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rad = math.radians(degrees)
    cos_t, sin_t = math.cos(rad), math.sin(rad)
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64) - cy,
                         np.arange(w, dtype=np.float64) - cx, indexing="ij")
    src_x = cos_t * xx + sin_t * yy + cx
    src_y = -sin_t * xx + cos_t * yy + cy
    return ImageBuffer(np.clip(bilinear_sample(img.pixels, src_y, src_x), 0.0, 1.0))


def random_scale(img: ImageBuffer, rng: Rng, scale_range: tuple[float, float]) -> ImageBuffer:
    f = float(rng.uniform(1, scale_range[0], scale_range[1])[0])
    return scale_image(img, f)


def random_rotate(img: ImageBuffer, rng: Rng, rotation_range: tuple[float, float]) -> ImageBuffer:
    theta = float(rng.uniform(1, rotation_range[0], rotation_range[1])[0])
    return rotate_image(img, theta)


def inject_noise(img: ImageBuffer, rng: Rng, factor: float) -> ImageBuffer:
    """Add i.i.d. Gaussian noise with std = factor * 0.05, clamped to [0, 1]."""
    if factor < 0:
        raise ValueError("noise factor must be >= 0")
    if factor == 0:
        return img
    noise = rng.normal(img.pixels.size, std=factor * NOISE_BASE_STD)
    return ImageBuffer(np.clip(img.pixels + noise.reshape(img.pixels.shape), 0.0, 1.0))


def flip_vertical(img: ImageBuffer) -> ImageBuffer:
    """Reverse the row order."""
    return ImageBuffer(img.pixels[::-1].copy())


def gamma_correct(img: ImageBuffer, gamma: float) -> ImageBuffer:
    """Pointwise power law out = in ** gamma on [0, 1]."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if gamma == 1.0:
        return img
    return ImageBuffer(np.power(img.pixels, gamma))


def fit_color_pca(images) -> ColorPCA:
    """Pool every RGB triple across the set and eigendecompose the covariance."""
    planes = []
    for img in images:
        if img.channels != 3:
            raise ValueError("fit_color_pca requires RGB images")
        planes.append(img.pixels.reshape(-1, 3))
    if not planes:
        raise ValueError("fit_color_pca requires at least one image")
    stacked = np.concatenate(planes, axis=0)
    if stacked.shape[0] < 2:
        raise ValueError("fit_color_pca requires at least two pixels")
    centered = stacked - stacked.mean(axis=0)
    cov = centered.T @ centered / stacked.shape[0]
    cov = (cov + cov.T) / 2.0  # exact symmetry
    eigvals, eigvecs = jacobi_eigh(cov)
    return ColorPCA(covariance=cov, eigenvalues=eigvals, eigenvectors=eigvecs)


def pca_color_augment(img: ImageBuffer, pca: ColorPCA, rng: Rng,
                      alpha_std: float) -> ImageBuffer:
    """Shift every pixel's RGB by sum_i alpha_i * lambda_i * v_i, one draw per image."""
    if img.channels != 3:
        raise ValueError("pca_color_augment requires an RGB image")
    alphas = rng.normal(3, std=alpha_std)
    shift = pca.eigenvectors @ (alphas * pca.eigenvalues)
    return ImageBuffer(np.clip(img.pixels + shift, 0.0, 1.0))


def _apply_operator(op: str, img: ImageBuffer, cfg: AugmentConfig, rng: Rng,
                    pca: ColorPCA | None, trace: list | None) -> ImageBuffer:
    if op == "scale":
        f = float(rng.uniform(1, cfg.scale_range[0], cfg.scale_range[1])[0])
        if trace is not None:
            trace.append(("scale", f))
        return scale_image(img, f)
    if op == "rotate":
        theta = float(rng.uniform(1, cfg.rotation_range[0], cfg.rotation_range[1])[0])
        if trace is not None:
            trace.append(("rotate", theta))
        return rotate_image(img, theta)
    if op == "flip":
        if trace is not None:
            trace.append(("flip", 1.0))
        return flip_vertical(img)
    if op == "gamma":
        gamma = float(rng.uniform(1, cfg.gamma_range[0], cfg.gamma_range[1])[0])
        if trace is not None:
            trace.append(("gamma", gamma))
        return gamma_correct(img, gamma)
    if op == "pca":
        if pca is None or img.channels != 3:
            return img
        if trace is not None:
            trace.append(("pca", cfg.pca_alpha_std))
        return pca_color_augment(img, pca, rng, cfg.pca_alpha_std)
    if op == "noise":
        if trace is not None:
            trace.append(("noise", cfg.noise_factor))
        return inject_noise(img, rng, cfg.noise_factor)
    raise ValueError(f"unknown operator {op!r}")


def augment(img: ImageBuffer, cfg: AugmentConfig, rng: Rng,
            pca: ColorPCA | None = None, trace: list | None = None) -> ImageBuffer:
    """Apply the enabled operators in fixed order, each gated by Bernoulli(p).

    In ``one_per_copy`` mode exactly one enabled operator is drawn and applied
    per call. ``trace``, if given, collects (operator, drawn parameter) pairs.
    """
    enabled = cfg.enabled_operators()
    if not enabled:
        return img
    if cfg.mode == "one_per_copy":
        pick = enabled[int(rng.uniform(1, 0, len(enabled))[0])]
        return _apply_operator(pick, img, cfg, rng, pca, trace)
    out = img
    for op in enabled:
        if rng.bernoulli(cfg.probability):
            out = _apply_operator(op, out, cfg, rng, pca, trace)
    return out
