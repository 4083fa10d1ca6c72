"""Cube augmentation: location one-hot, mean-direction histogram, appearance.

The augmented vector is a fixed 785-dim concatenation:

    [0, 500)   unit-norm gradient-magnitude features
    [500, 520) two-level spatial-pyramid one-hot (2x2 bins then 4x4 bins)
    [520, 529) 8-bin motion-direction histogram + total displacement magnitude
    [529, 785) 256 appearance channels for the cube's grid cell

Appearance channels come from an AppearanceProvider: either a file of conv
activation maps (NNCF container) or the built-in handcrafted descriptor. By
default the direction and appearance blocks are L2-normalized per cube so
no single block dominates Euclidean distances during clustering.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy.ndimage import convolve1d

from .cubes import (DEPTH, FRAME_HEIGHT, FRAME_WIDTH, GRID_COLS, GRID_ROWS,
                    PATCH, SpatioTemporalCube, l2_normalize,
                    voxel_gradient_magnitude)
from .ingest import FormatError, FrameSequence, GrayFrame, resize_sequence
from .interp import gaussian_kernel1d, resample2d

GRAD_DIM = 500
LOC_DIM = 20
DIR_DIM = 9
APP_DIM = 256
AUG_DIM = GRAD_DIM + LOC_DIM + DIR_DIM + APP_DIM

GRAD_SLICE = slice(0, 500)
LOC_SLICE = slice(500, 520)
DIR_SLICE = slice(520, 529)
APP_SLICE = slice(529, 785)

N_DIRECTION_BINS = 8

NNCF_MAGIC = b"NNCF"
NNCF_VERSION = 1

CONV_ROWS = 13
CONV_COLS = 13


@dataclass
class AugmentedCube:
    grid_row: int
    grid_col: int
    end_frame: int
    features: np.ndarray  # (785,)


class AppearanceProvider(Protocol):
    def provide(self, frame_index: int) -> np.ndarray:
        """Return the (12, 16, 256) appearance grid for one frame."""
        ...


def location_encoding(grid_row: int, grid_col: int) -> np.ndarray:
    """20-dim one-hot pair: 2x2 pyramid bin then 4x4 pyramid bin."""
    if not (0 <= grid_row < GRID_ROWS and 0 <= grid_col < GRID_COLS):
        raise ValueError(f"cell ({grid_row}, {grid_col}) outside the 12x16 grid")
    out = np.zeros(LOC_DIM)
    level1 = (grid_row >= GRID_ROWS // 2) * 2 + (grid_col >= GRID_COLS // 2)
    level2 = (grid_row * 4 // GRID_ROWS) * 4 + (grid_col * 4 // GRID_COLS)
    out[level1] = 1.0
    out[4 + level2] = 1.0
    return out


_LOCATION_TABLE = np.stack(
    [np.stack([location_encoding(r, c) for c in range(GRID_COLS)])
     for r in range(GRID_ROWS)]
)


def direction_features_from_magnitudes(mags: np.ndarray) -> np.ndarray:
    """Direction block from (..., 10, 10, 5) gradient-magnitude fields.

    For each temporal slice the magnitude-weighted center of mass is taken
    over the whole patch and over its four 5x5 quadrants. Consecutive
    centers of the same window form displacement vectors (up to 20 per
    cube); each is hard-binned by angle into 8 bins of 45 degrees,
    accumulating its length. Windows with zero mass contribute no vectors.
    The 9th entry is the total length of all contributing vectors.
    """
    lead = mags.shape[:-3]
    ys = np.arange(PATCH, dtype=np.float64)
    # Whole-patch moments per temporal slice.
    m0 = mags.sum(axis=(-3, -2))
    my = (mags * ys[:, None, None]).sum(axis=(-3, -2))
    mx = (mags * ys[None, :, None]).sum(axis=(-3, -2))
    # Quadrant moments: view the patch axes as (2, 5, 2, 5).
    sub = mags.reshape(lead + (2, PATCH // 2, 2, PATCH // 2, DEPTH))
    ysub = ys.reshape(2, PATCH // 2, 1, 1, 1)
    xsub = ys.reshape(1, 1, 2, PATCH // 2, 1)
    m0s = sub.sum(axis=(-4, -2))
    mys = (sub * ysub).sum(axis=(-4, -2))
    mxs = (sub * xsub).sum(axis=(-4, -2))
    # Stack the 5 tracked windows: whole patch + 4 quadrants.
    m0_all = np.concatenate(
        [m0[..., None, :], m0s.reshape(lead + (4, DEPTH))], axis=-2)
    my_all = np.concatenate(
        [my[..., None, :], mys.reshape(lead + (4, DEPTH))], axis=-2)
    mx_all = np.concatenate(
        [mx[..., None, :], mxs.reshape(lead + (4, DEPTH))], axis=-2)
    safe = np.where(m0_all > 0, m0_all, 1.0)
    cy = my_all / safe
    cx = mx_all / safe
    valid = (m0_all[..., :-1] > 0) & (m0_all[..., 1:] > 0)
    dy = cy[..., 1:] - cy[..., :-1]
    dx = cx[..., 1:] - cx[..., :-1]
    length = np.hypot(dy, dx) * valid
    deg = np.degrees(np.arctan2(dy, dx)) % 360.0
    bins = np.minimum((deg // 45.0).astype(np.int64), N_DIRECTION_BINS - 1)
    onehot = bins[..., None] == np.arange(N_DIRECTION_BINS)
    hist = (length[..., None] * onehot).sum(axis=(-3, -2))
    total = length.sum(axis=(-2, -1))
    return np.concatenate([hist, total[..., None]], axis=-1)


def mean_direction_features(voxels: np.ndarray) -> np.ndarray:
    """9-dim mean-direction block for one (10, 10, 5) cube."""
    if voxels.shape != (PATCH, PATCH, DEPTH):
        raise ValueError(f"expected (10, 10, 5) voxels, got {voxels.shape}")
    return direction_features_from_magnitudes(voxel_gradient_magnitude(voxels))


def resize_activation_maps(maps: np.ndarray) -> np.ndarray:
    """Channel-wise bicubic resize of (13, 13, C) activations to (12, 16, C)."""
    if maps.ndim != 3 or maps.shape[:2] != (CONV_ROWS, CONV_COLS):
        raise ValueError(f"expected (13, 13, C) activation maps, got {maps.shape}")
    return resample2d(maps, GRID_ROWS, GRID_COLS, "bicubic")


def _normalize_rows(block: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(block, axis=-1, keepdims=True)
    return block / np.where(norms > 0, norms, 1.0)


def augment_cube(cube: SpatioTemporalCube, provider: AppearanceProvider,
                 normalize_blocks: bool = True,
                 missing_policy: str = "error") -> AugmentedCube:
    """Concatenate the four feature blocks for one active cube."""
    try:
        app_grid = provider.provide(cube.end_frame)
    except (KeyError, IndexError):
        if missing_policy != "zeros":
            raise
        app_grid = None
    app = (np.zeros(APP_DIM) if app_grid is None
           else np.asarray(app_grid[cube.grid_row, cube.grid_col], dtype=np.float64))
    direction = mean_direction_features(np.asarray(cube.voxels, dtype=np.float64))
    if normalize_blocks:
        direction = l2_normalize(direction)
        app = l2_normalize(app)
    features = np.concatenate([
        np.asarray(cube.features, dtype=np.float64),
        _LOCATION_TABLE[cube.grid_row, cube.grid_col],
        direction,
        app,
    ])
    return AugmentedCube(grid_row=cube.grid_row, grid_col=cube.grid_col,
                         end_frame=cube.end_frame, features=features)


def augment_grid(grad_unit: np.ndarray, mags: np.ndarray, app_grid: np.ndarray,
                 normalize_blocks: bool = True) -> np.ndarray:
    """Batched augmentation of one temporal position.

    grad_unit: (12, 16, 500) unit-norm gradient features
    mags:      (12, 16, 10, 10, 5) gradient magnitudes
    app_grid:  (12, 16, 256) appearance channels
    Returns (12, 16, 785) float32.
    """
    direction = direction_features_from_magnitudes(mags)
    app = np.asarray(app_grid, dtype=np.float64)
    if normalize_blocks:
        direction = _normalize_rows(direction)
        app = _normalize_rows(app)
    out = np.empty((GRID_ROWS, GRID_COLS, AUG_DIM), dtype=np.float32)
    out[..., GRAD_SLICE] = grad_unit
    out[..., LOC_SLICE] = _LOCATION_TABLE
    out[..., DIR_SLICE] = direction
    out[..., APP_SLICE] = app
    return out


# ---------------------------------------------------------------------------
# Appearance providers


class ZeroAppearanceProvider:
    """All-zero appearance channels (motion-only operation)."""

    def provide(self, frame_index: int) -> np.ndarray:
        return np.zeros((GRID_ROWS, GRID_COLS, APP_DIM), dtype=np.float32)


_HC_SCALES = (0.0, 1.0, 2.0, 4.0)
_HC_ORIENT_BINS = 16


def handcrafted_appearance(frame: GrayFrame) -> np.ndarray:
    """Deterministic 256-channel appearance grid from oriented gradients.

    Per 10x10 cell: 16-bin gradient-orientation histograms over 2x2 spatial
    sub-bins at four Gaussian smoothing scales (4 * 4 * 16 = 256 channels).
    Purely gradient-based, so constant offsets leave it unchanged.
    """
    if (frame.height, frame.width) != (FRAME_HEIGHT, FRAME_WIDTH):
        raise ValueError(
            f"handcrafted appearance requires {FRAME_HEIGHT}x{FRAME_WIDTH} "
            f"frames, got {frame.height}x{frame.width}"
        )
    img = np.asarray(frame.pixels, dtype=np.float64)
    ys = np.arange(FRAME_HEIGHT)
    xs = np.arange(FRAME_WIDTH)
    cell = (ys[:, None] // PATCH) * GRID_COLS + (xs[None, :] // PATCH)
    sub = ((ys[:, None] % PATCH) // 5) * 2 + ((xs[None, :] % PATCH) // 5)
    blocks = []
    for sigma in _HC_SCALES:
        if sigma > 0:
            k = gaussian_kernel1d(sigma)
            smooth = convolve1d(convolve1d(img, k, axis=0, mode="reflect"),
                                k, axis=1, mode="reflect")
        else:
            smooth = img
        gy, gx = np.gradient(smooth)
        mag = np.hypot(gy, gx)
        deg = np.degrees(np.arctan2(gy, gx)) % 360.0
        obin = np.minimum((deg // (360.0 / _HC_ORIENT_BINS)).astype(np.int64),
                          _HC_ORIENT_BINS - 1)
        flat = (cell * 4 + sub) * _HC_ORIENT_BINS + obin
        hist = np.bincount(flat.ravel(), weights=mag.ravel(),
                           minlength=GRID_ROWS * GRID_COLS * 4 * _HC_ORIENT_BINS)
        blocks.append(hist.reshape(GRID_ROWS, GRID_COLS, 4 * _HC_ORIENT_BINS))
    return np.concatenate(blocks, axis=-1).astype(np.float32)


class HandcraftedAppearanceProvider:
    """Computes the handcrafted descriptor per frame, caching results."""

    def __init__(self, seq: FrameSequence):
        self._seq = resize_sequence(seq, FRAME_WIDTH, FRAME_HEIGHT, "bilinear")
        self._cache: dict[int, np.ndarray] = {}

    def provide(self, frame_index: int) -> np.ndarray:
        if frame_index not in self._cache:
            self._cache[frame_index] = handcrafted_appearance(
                self._seq.frames[frame_index])
        return self._cache[frame_index]


# ---------------------------------------------------------------------------
# NNCF appearance container


def write_nncf(path: str, maps: np.ndarray, version: int = NNCF_VERSION) -> None:
    """Write (n, rows, cols, channels) activation maps, float32 LE, channel-minor."""
    n, rows, cols, channels = maps.shape
    with open(path, "wb") as fh:
        fh.write(NNCF_MAGIC)
        fh.write(struct.pack("<IIIII", version, n, rows, cols, channels))
        fh.write(np.ascontiguousarray(maps, dtype="<f4").tobytes())


def read_nncf(path: str) -> np.ndarray:
    """Read an NNCF file back as an (n, rows, cols, channels) float32 array."""
    with open(path, "rb") as fh:
        header = fh.read(24)
        if len(header) < 24 or header[:4] != NNCF_MAGIC:
            raise FormatError(f"{path}: bad NNCF magic")
        version, n, rows, cols, channels = struct.unpack("<IIIII", header[4:24])
        if version != NNCF_VERSION:
            raise FormatError(f"{path}: unsupported NNCF version {version}")
        body = fh.read()
    expected = n * rows * cols * channels * 4
    if len(body) != expected:
        raise FormatError(f"{path}: expected {expected} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f4").reshape(n, rows, cols, channels)


class FileAppearanceProvider:
    """Random access over an NNCF file; 13x13 maps are resized to the grid."""

    def __init__(self, path: str):
        self.path = path
        self._maps = read_nncf(path)
        n, rows, cols, channels = self._maps.shape
        if channels != APP_DIM:
            raise FormatError(f"{path}: expected {APP_DIM} channels, found {channels}")
        if (rows, cols) not in ((GRID_ROWS, GRID_COLS), (CONV_ROWS, CONV_COLS)):
            raise FormatError(f"{path}: unsupported map size {rows}x{cols}")
        self._needs_resize = (rows, cols) == (CONV_ROWS, CONV_COLS)
        self._cache: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return self._maps.shape[0]

    def provide(self, frame_index: int) -> np.ndarray:
        if not (0 <= frame_index < len(self)):
            raise IndexError(
                f"{self.path}: frame {frame_index} outside 0..{len(self) - 1}")
        if not self._needs_resize:
            return self._maps[frame_index]
        if frame_index not in self._cache:
            resized = resize_activation_maps(
                self._maps[frame_index].astype(np.float64))
            self._cache[frame_index] = resized.astype(np.float32)
        return self._cache[frame_index]
