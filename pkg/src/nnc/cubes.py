"""Spatio-temporal cube extraction and 3D-gradient features.

Frames at the 120x160 working resolution are tiled into a fixed 12x16 grid
of 10x10 patches; 5 consecutive frames stack into a 10x10x5 cube. Each cube
yields a 500-dim vector of per-voxel gradient magnitudes, L2-normalized for
active cubes. Cubes whose raw gradient energy is below a threshold are
static and excluded downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_ROWS = 12
GRID_COLS = 16
PATCH = 10
DEPTH = 5
FRAME_HEIGHT = GRID_ROWS * PATCH
FRAME_WIDTH = GRID_COLS * PATCH
FEATURE_DIM = PATCH * PATCH * DEPTH

DEFAULT_TAU_STATIC = 0.1


@dataclass
class SpatioTemporalCube:
    grid_row: int
    grid_col: int
    end_frame: int
    voxels: np.ndarray  # (10, 10, 5) as [y, x, t]
    features: np.ndarray  # (500,) unit-norm when active
    active: bool


def window_voxels(block5: np.ndarray) -> np.ndarray:
    """Rearrange a (5, 120, 160) frame block into (12, 16, 10, 10, 5) voxels."""
    if block5.shape != (DEPTH, FRAME_HEIGHT, FRAME_WIDTH):
        raise ValueError(f"expected (5, 120, 160) frame block, got {block5.shape}")
    arr = block5.transpose(1, 2, 0)
    arr = arr.reshape(GRID_ROWS, PATCH, GRID_COLS, PATCH, DEPTH)
    return arr.transpose(0, 2, 1, 3, 4)


def voxel_gradient_magnitude(voxels: np.ndarray) -> np.ndarray:
    """Per-voxel 3D gradient magnitude over the trailing (y, x, t) axes.

    Central differences in the interior, one-sided at cube borders.
    """
    gy = np.gradient(voxels, axis=-3)
    gx = np.gradient(voxels, axis=-2)
    gt = np.gradient(voxels, axis=-1)
    return np.sqrt(gy * gy + gx * gx + gt * gt)


def gradient_features(voxels: np.ndarray) -> np.ndarray:
    """Raw (unnormalized) 500-dim gradient-magnitude vector in voxel raster order."""
    if voxels.shape != (PATCH, PATCH, DEPTH):
        raise ValueError(f"expected (10, 10, 5) voxels, got {voxels.shape}")
    return voxel_gradient_magnitude(voxels).reshape(FEATURE_DIM)


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Unit-norm copy of v; a zero vector is returned unchanged."""
    n = np.linalg.norm(v)
    if n == 0:
        return v
    return v / n


def is_static(raw_features: np.ndarray, tau_static: float = DEFAULT_TAU_STATIC) -> bool:
    """True when the unnormalized gradient energy falls below tau_static."""
    return bool(np.linalg.norm(raw_features) < tau_static)


def temporal_positions(n_frames: int, temporal_stride: int) -> range:
    """End-frame indices t = 4, 4+stride, ... for an n-frame sequence."""
    if n_frames < DEPTH:
        raise ValueError(f"need at least {DEPTH} frames, got {n_frames}")
    if temporal_stride < 1:
        raise ValueError("temporal_stride must be >= 1")
    return range(DEPTH - 1, n_frames, temporal_stride)


def extract_cubes(seq, temporal_stride: int = 1,
                  tau_static: float = DEFAULT_TAU_STATIC) -> list[SpatioTemporalCube]:
    """All grid cubes of a 120x160 sequence, one per cell per temporal position."""
    if (seq.height, seq.width) != (FRAME_HEIGHT, FRAME_WIDTH):
        raise ValueError(
            f"sequence is {seq.height}x{seq.width}, cubes require "
            f"{FRAME_HEIGHT}x{FRAME_WIDTH}"
        )
    stack = seq.as_array()
    cubes = []
    for t in temporal_positions(len(seq), temporal_stride):
        vox = window_voxels(stack[t - DEPTH + 1 : t + 1])
        mags = voxel_gradient_magnitude(vox)
        raw = mags.reshape(GRID_ROWS, GRID_COLS, FEATURE_DIM)
        norms = np.linalg.norm(raw, axis=-1)
        for r in range(GRID_ROWS):
            for c in range(GRID_COLS):
                cubes.append(
                    SpatioTemporalCube(
                        grid_row=r,
                        grid_col=c,
                        end_frame=t,
                        voxels=vox[r, c],
                        features=l2_normalize(raw[r, c]),
                        active=norms[r, c] >= tau_static,
                    )
                )
    return cubes
