"""Training orchestration, max-normality-score inference and model files.

Training: cubes -> augmentation -> k-means (best of restarts) -> size
pruning -> one one-class SVM per surviving cluster, trained on that
cluster's members only. Scoring negates the best decision value over all
per-cluster SVMs, so a sample fitting no narrowed cluster scores positive
(abnormal). Per-frame maps are computed at a configurable frame stride,
held for skipped frames; the frame score is the maximum over the map,
temporally smoothed with a Gaussian and min-max normalized for display.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import cluster as _cluster
from . import ocsvm as _ocsvm
from .augment import APP_DIM, AUG_DIM, AppearanceProvider, augment_grid
from .config import RunConfig
from .cubes import (DEPTH, FRAME_HEIGHT, FRAME_WIDTH, GRID_COLS, GRID_ROWS,
                    temporal_positions, voxel_gradient_magnitude,
                    window_voxels)
from .ingest import FormatError, FrameSequence, resize_sequence
from .interp import gaussian_kernel1d, resample2d

MODEL_MAGIC = b"NNCM"
MODEL_VERSION = 1
MAP_MAGIC = b"NNCA"
MAP_VERSION = 1

# Abnormality assigned when a whole frame is static (no active cube).
ALL_STATIC_SCORE = 0.0


class PipelineError(RuntimeError):
    """Training or scoring cannot proceed on the given inputs."""


@dataclass
class NormalityModel:
    models: list[_ocsvm.OneClassSvmModel]
    tau_static: float
    normalize_blocks: bool
    k_total: int
    min_cluster_size: int
    format_version: int = MODEL_VERSION

    @property
    def r(self) -> int:
        return len(self.models)

    @property
    def dim(self) -> int:
        return self.models[0].dim

    def weight_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        w = np.stack([m.w for m in self.models]).astype(np.float32)
        rho = np.array([m.rho for m in self.models], dtype=np.float32)
        return w, rho


@dataclass
class AnomalyMap:
    frame_index: int
    grid: np.ndarray  # (12, 16), higher = more abnormal


@dataclass
class FrameScoreSeries:
    raw: np.ndarray
    smoothed: np.ndarray
    normalized: np.ndarray

    def __len__(self) -> int:
        return len(self.raw)


def position_features(stack: np.ndarray, t: int, provider: AppearanceProvider,
                      tau_static: float, normalize_blocks: bool,
                      appearance_missing: str = "error") -> tuple[np.ndarray, np.ndarray]:
    """(12, 16, 785) features and (12, 16) active mask for end frame t."""
    vox = window_voxels(stack[t - DEPTH + 1 : t + 1])
    mags = voxel_gradient_magnitude(vox)
    raw = mags.reshape(GRID_ROWS, GRID_COLS, -1)
    norms = np.linalg.norm(raw, axis=-1)
    active = norms >= tau_static
    grad_unit = raw / np.where(norms > 0, norms, 1.0)[..., None]
    try:
        app = provider.provide(t)
    except (KeyError, IndexError):
        if appearance_missing != "zeros":
            raise
        app = np.zeros((GRID_ROWS, GRID_COLS, APP_DIM), dtype=np.float32)
    feats = augment_grid(grad_unit, mags, app, normalize_blocks=normalize_blocks)
    return feats, active


def train(seq: FrameSequence, provider: AppearanceProvider,
          cfg: RunConfig | None = None) -> NormalityModel:
    """Fit the full two-stage model on a normal-only sequence."""
    cfg = cfg or RunConfig()
    if len(seq) < DEPTH:
        raise PipelineError(f"training sequence has {len(seq)} frames, need >= {DEPTH}")
    work = resize_sequence(seq, FRAME_WIDTH, FRAME_HEIGHT, "bilinear")
    stack = work.as_array()
    rows = []
    for t in temporal_positions(len(work), cfg.train_temporal_stride):
        feats, active = position_features(
            stack, t, provider, cfg.tau_static, cfg.normalize_blocks)
        if active.any():
            rows.append(feats[active])
    if not rows:
        raise PipelineError("every training cube is static; nothing to model")
    data = np.concatenate(rows)
    n = data.shape[0]
    k = _cluster.choose_k(n, cfg.cubes_per_cluster)
    rng = np.random.default_rng(cfg.seed)
    model = _cluster.best_of_restarts(
        data, k, restarts=cfg.restarts, rng=rng,
        max_iter=cfg.kmeans_max_iter, tol=cfg.kmeans_tol, workers=cfg.workers)
    model = _cluster.prune_small_clusters(model, cfg.min_cluster_size)
    svms = []
    for j in model.retained_indices():
        members = data[model.assignments == j].astype(np.float64)
        if members.shape[0] < 2:
            raise PipelineError(
                f"cluster {j} retained with only {members.shape[0]} cubes")
        svms.append(_ocsvm.train_ocsvm(
            members, nu=cfg.nu, tol=cfg.ocsvm_tol, max_iter=cfg.ocsvm_max_iter))
    return NormalityModel(
        models=svms,
        tau_static=cfg.tau_static,
        normalize_blocks=cfg.normalize_blocks,
        k_total=k,
        min_cluster_size=cfg.min_cluster_size,
    )


def score_cube(model: NormalityModel, x) -> float:
    """Abnormality of one augmented cube: minus the best per-cluster decision."""
    feats = np.asarray(getattr(x, "features", x), dtype=np.float64)
    if feats.shape != (model.dim,):
        raise ValueError(f"expected a {model.dim}-dim cube, got {feats.shape}")
    w, rho = model.weight_matrix()
    decisions = feats @ w.astype(np.float64).T - rho.astype(np.float64)
    return float(-decisions.max())


def _score_position(feats: np.ndarray, active: np.ndarray,
                    w_t: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """12x16 abnormality grid; static cells floored to the frame minimum."""
    flat = feats.reshape(-1, AUG_DIM).astype(np.float64)
    decisions = flat @ w_t - rho
    abnormality = -decisions.max(axis=1).reshape(GRID_ROWS, GRID_COLS)
    if active.all():
        return abnormality
    if active.any():
        floor = float(abnormality[active].min())
    else:
        floor = ALL_STATIC_SCORE
    return np.where(active, abnormality, floor)


def score_sequence(model: NormalityModel, seq: FrameSequence,
                   provider: AppearanceProvider, test_frame_stride: int = 2,
                   sigma_t: float = 10.0, appearance_missing: str = "error",
                   ) -> tuple[list[AnomalyMap], FrameScoreSeries]:
    """Per-frame anomaly maps and the frame-score timeline.

    Maps are computed at end frames t = 4, 4 + stride, ...; every other
    frame carries the last computed map (frames before the first position
    carry the first one). Frame scores are the map maxima, Gaussian
    smoothed over time with sigma_t.
    """
    if len(seq) < DEPTH:
        raise PipelineError(f"sequence has {len(seq)} frames, need >= {DEPTH}")
    work = resize_sequence(seq, FRAME_WIDTH, FRAME_HEIGHT, "bilinear")
    stack = work.as_array()
    w, rho = model.weight_matrix()
    w_t = w.astype(np.float64).T
    rho64 = rho.astype(np.float64)
    computed: dict[int, np.ndarray] = {}
    for t in temporal_positions(len(work), test_frame_stride):
        feats, active = position_features(
            stack, t, provider, model.tau_static, model.normalize_blocks,
            appearance_missing=appearance_missing)
        computed[t] = _score_position(feats, active, w_t, rho64)
    positions = sorted(computed)
    maps: list[AnomalyMap] = []
    raw = np.empty(len(seq))
    current = computed[positions[0]]
    next_pos = 0
    for f in range(len(seq)):
        if next_pos < len(positions) and f >= positions[next_pos]:
            current = computed[positions[next_pos]]
            next_pos += 1
        maps.append(AnomalyMap(frame_index=f, grid=current.copy()))
        raw[f] = current.max()
    return maps, build_series(raw, sigma_t)


def temporal_smooth(series: np.ndarray, sigma_t: float) -> np.ndarray:
    """1-D Gaussian smoothing with reflect padding; sigma 0 is the identity."""
    series = np.asarray(series, dtype=np.float64)
    kernel = gaussian_kernel1d(sigma_t)
    if kernel.size == 1:
        return series.copy()
    radius = kernel.size // 2
    if series.size == 1:
        return series.copy()
    padded = np.pad(series, radius, mode="reflect")
    return np.convolve(padded, kernel, mode="valid")


def normalize_scores(series: np.ndarray) -> np.ndarray:
    """Min-max map to [0, 1]; a constant series maps to zeros."""
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        raise ValueError("empty score series")
    lo, hi = series.min(), series.max()
    if hi == lo:
        return np.zeros_like(series)
    return (series - lo) / (hi - lo)


def build_series(raw: np.ndarray, sigma_t: float) -> FrameScoreSeries:
    smoothed = temporal_smooth(raw, sigma_t)
    return FrameScoreSeries(raw=np.asarray(raw, dtype=np.float64),
                            smoothed=smoothed,
                            normalized=normalize_scores(smoothed))


def upsample_map(map_or_grid, width: int, height: int) -> np.ndarray:
    """Bilinear upsampling of a 12x16 abnormality grid to (height, width)."""
    if width < 1 or height < 1:
        raise ValueError("target size must be at least 1x1")
    grid = getattr(map_or_grid, "grid", map_or_grid)
    return resample2d(np.asarray(grid, dtype=np.float64), height, width, "bilinear")


# ---------------------------------------------------------------------------
# Model file (NNCM)


def save_model(model: NormalityModel, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", MODEL_VERSION, model.dim))
        flags = 1 if model.normalize_blocks else 0
        fh.write(struct.pack("<If", flags, model.tau_static))
        fh.write(struct.pack("<III", model.k_total, model.min_cluster_size, model.r))
        for m in model.models:
            fh.write(struct.pack("<If", m.dim, float(m.rho)))
            fh.write(np.ascontiguousarray(m.w, dtype="<f4").tobytes())


def load_model(path: str) -> NormalityModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 32 or data[:4] != MODEL_MAGIC:
        raise FormatError(f"{path}: bad model magic")
    version, dim = struct.unpack("<II", data[4:12])
    if version != MODEL_VERSION:
        raise FormatError(
            f"{path}: model format version {version} not supported "
            f"(expected {MODEL_VERSION})")
    flags, tau_static = struct.unpack("<If", data[12:20])
    k_total, min_size, r = struct.unpack("<III", data[20:32])
    pos = 32
    models = []
    for _ in range(r):
        if pos + 8 > len(data):
            raise FormatError(f"{path}: truncated model record")
        m_dim, rho = struct.unpack("<If", data[pos : pos + 8])
        pos += 8
        end = pos + 4 * m_dim
        if end > len(data):
            raise FormatError(f"{path}: truncated weight vector")
        w = np.frombuffer(data[pos:end], dtype="<f4").copy()
        pos += 4 * m_dim
        models.append(_ocsvm.OneClassSvmModel(
            nu=0.0, rho=np.float32(rho), w=w, n_train=0, alphas=None))
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    if not models:
        raise FormatError(f"{path}: model carries no clusters")
    return NormalityModel(
        models=models,
        tau_static=tau_static,
        normalize_blocks=bool(flags & 1),
        k_total=k_total,
        min_cluster_size=min_size,
        format_version=version,
    )


# ---------------------------------------------------------------------------
# Score CSV and anomaly-map container


def write_scores_csv(path: str, series: FrameScoreSeries) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("frame_index,raw,smoothed,normalized\n")
        for i in range(len(series)):
            fh.write(f"{i},{float(series.raw[i])!r},{float(series.smoothed[i])!r},"
                     f"{float(series.normalized[i])!r}\n")


def read_scores_csv(path: str) -> FrameScoreSeries:
    raw, smoothed, normalized = [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "frame_index,raw,smoothed,normalized":
            raise FormatError(f"{path}: unexpected score CSV header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            _, r, s, n = line.strip().split(",")
            raw.append(float(r))
            smoothed.append(float(s))
            normalized.append(float(n))
    return FrameScoreSeries(raw=np.array(raw), smoothed=np.array(smoothed),
                            normalized=np.array(normalized))


def write_maps(path: str, maps: list[AnomalyMap]) -> None:
    """Float32 grid container, one 12x16 map per frame."""
    with open(path, "wb") as fh:
        fh.write(MAP_MAGIC)
        fh.write(struct.pack("<IIII", MAP_VERSION, len(maps), GRID_ROWS, GRID_COLS))
        for m in maps:
            fh.write(np.ascontiguousarray(m.grid, dtype="<f4").tobytes())


def read_maps(path: str) -> list[AnomalyMap]:
    with open(path, "rb") as fh:
        header = fh.read(20)
        if len(header) < 20 or header[:4] != MAP_MAGIC:
            raise FormatError(f"{path}: bad map-file magic")
        version, n, rows, cols = struct.unpack("<IIII", header[4:20])
        if version != MAP_VERSION:
            raise FormatError(f"{path}: unsupported map version {version}")
        body = fh.read()
    expected = n * rows * cols * 4
    if len(body) != expected:
        raise FormatError(f"{path}: expected {expected} data bytes, found {len(body)}")
    grids = np.frombuffer(body, dtype="<f4").reshape(n, rows, cols)
    return [AnomalyMap(frame_index=i, grid=grids[i].astype(np.float64))
            for i in range(n)]
