"""Separable bilinear/bicubic resampling shared by the frame, grid and map paths.

Both methods use the pixel-center convention src = (dst + 0.5) * in/out - 0.5
with replicated borders, so a same-size bilinear resize is the identity.
"""

from __future__ import annotations

import numpy as np

# Keys cubic convolution parameter (classic a = -0.5 kernel).
_CUBIC_A = -0.5


def _cubic_kernel(x: np.ndarray) -> np.ndarray:
    a = _CUBIC_A
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    near = (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0
    far = a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a
    out = np.where(ax <= 1.0, near, np.where(ax < 2.0, far, 0.0))
    return out


def resample_matrix(n_in: int, n_out: int, method: str) -> np.ndarray:
    """Dense (n_out, n_in) row-stochastic matrix applying 1-D resampling.

    Border taps falling outside [0, n_in) are clamped onto the edge sample,
    which replicates the boundary value.
    """
    if n_in < 1 or n_out < 1:
        raise ValueError(f"resample sizes must be >= 1, got {n_in} -> {n_out}")
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    if method == "bilinear":
        offsets = np.array([0, 1])
        weights = np.stack([1.0 - frac, frac], axis=1)
    elif method == "bicubic":
        offsets = np.array([-1, 0, 1, 2])
        weights = _cubic_kernel(frac[:, None] - offsets[None, :])
        # Kernel rows sum to 1 up to float error; renormalize for exactness.
        weights = weights / weights.sum(axis=1, keepdims=True)
    else:
        raise ValueError(f"unknown interpolation method: {method!r}")
    mat = np.zeros((n_out, n_in))
    idx = np.clip(base[:, None] + offsets[None, :], 0, n_in - 1)
    rows = np.repeat(np.arange(n_out), len(offsets))
    np.add.at(mat, (rows, idx.ravel()), weights.ravel())
    return mat


def resample2d(img: np.ndarray, out_h: int, out_w: int, method: str) -> np.ndarray:
    """Resample the leading two axes of ``img``; trailing axes pass through."""
    ra = resample_matrix(img.shape[0], out_h, method)
    rb = resample_matrix(img.shape[1], out_w, method)
    # (H',H) @ (H,W,...) along axis 0, then (W',W) along axis 1.
    out = np.tensordot(ra, img, axes=(1, 0))
    out = np.tensordot(rb, out, axes=(1, 1))
    return np.swapaxes(out, 0, 1)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Unit-sum Gaussian taps with radius ceil(3*sigma); sigma=0 yields [1]."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return np.ones(1)
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()
