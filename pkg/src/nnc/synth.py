"""Deterministic synthetic surveillance-style videos with ground truth.

Scenes are a static low-amplitude noise texture plus dark Gaussian blobs.
Normal actors translate on a torus at everyday speeds; anomalies are blobs
that move much faster or in a direction no normal actor uses, bouncing
inside a fixed region so their pixel masks stay in frame. The same seed
always reproduces the same video bit for bit, and a spec with its anomaly
list removed reproduces exactly the normal content of the full spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import FrameSequence, GrayFrame

BACKGROUND_LEVEL = 0.55
TEXTURE_AMPLITUDE = 0.05
BLOB_DEPTH = 0.40
MASK_WEIGHT_THRESHOLD = 0.1


@dataclass(frozen=True)
class ActorSpec:
    size: float  # blob diameter, px (sigma = size / 2)
    speed: float  # px / frame
    direction: float  # degrees, 0 = +x, 90 = +y (down)


@dataclass(frozen=True)
class AnomalySpec:
    start_frame: int
    end_frame: int  # exclusive
    region: tuple[int, int, int, int]  # x0, y0, x1, y1
    size: float
    speed: float
    direction: float


@dataclass(frozen=True)
class SynthSpec:
    width: int
    height: int
    n_frames: int
    seed: int
    normal_actors: tuple[ActorSpec, ...] = ()
    anomalies: tuple[AnomalySpec, ...] = ()

    def __post_init__(self):
        for a in self.anomalies:
            if not (0 <= a.start_frame < a.end_frame <= self.n_frames):
                raise ValueError(f"anomaly interval [{a.start_frame}, {a.end_frame}) "
                                 f"outside [0, {self.n_frames})")
            x0, y0, x1, y1 = a.region
            if not (0 <= x0 < x1 <= self.width and 0 <= y0 < y1 <= self.height):
                raise ValueError(f"anomaly region {a.region} outside frame bounds")

    def without_anomalies(self) -> "SynthSpec":
        return SynthSpec(self.width, self.height, self.n_frames, self.seed,
                         self.normal_actors, ())


@dataclass
class GroundTruth:
    """Per-frame binary labels plus optional full-resolution pixel masks."""

    frame_labels: np.ndarray  # (n,) uint8
    pixel_masks: np.ndarray | None = None  # (n, h, w) bool

    def validate(self) -> None:
        if self.pixel_masks is not None:
            if len(self.pixel_masks) != len(self.frame_labels):
                raise ValueError("mask count does not match label count")
            counts = self.pixel_masks.reshape(len(self.pixel_masks), -1).sum(axis=1)
            bad = np.nonzero((counts > 0) != (self.frame_labels > 0))[0]
            if bad.size:
                raise ValueError(
                    f"frame {bad[0]}: mask has {counts[bad[0]]} anomalous pixels "
                    f"but label is {self.frame_labels[bad[0]]}"
                )


def _velocity(speed: float, direction_deg: float) -> tuple[float, float]:
    rad = math.radians(direction_deg)
    return speed * math.cos(rad), speed * math.sin(rad)


def _render_blob(frame: np.ndarray, cx: float, cy: float, sigma: float,
                 wrap: bool) -> np.ndarray | None:
    """Subtract a Gaussian blob in-place; returns the blob weight field used."""
    h, w = frame.shape
    radius = int(math.ceil(3.0 * sigma))
    ys = np.arange(int(math.floor(cy)) - radius, int(math.ceil(cy)) + radius + 1)
    xs = np.arange(int(math.floor(cx)) - radius, int(math.ceil(cx)) + radius + 1)
    dy = ys[:, None] - cy
    dx = xs[None, :] - cx
    weight = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    if wrap:
        iy, ix = ys % h, xs % w
        frame[np.ix_(iy, ix)] -= BLOB_DEPTH * weight
        return None
    keep_y = (ys >= 0) & (ys < h)
    keep_x = (xs >= 0) & (xs < w)
    sub = weight[np.ix_(keep_y, keep_x)]
    frame[np.ix_(ys[keep_y], xs[keep_x])] -= BLOB_DEPTH * sub
    full = np.zeros((h, w))
    full[np.ix_(ys[keep_y], xs[keep_x])] = sub
    return full


def generate(spec: SynthSpec) -> tuple[FrameSequence, GroundTruth]:
    """Render the scene described by spec; deterministic for a fixed seed."""
    rng = np.random.default_rng(spec.seed)
    h, w = spec.height, spec.width
    background = BACKGROUND_LEVEL + TEXTURE_AMPLITUDE * (rng.random((h, w)) * 2.0 - 1.0)

    actor_pos = [(rng.random() * w, rng.random() * h) for _ in spec.normal_actors]
    actor_vel = [_velocity(a.speed, a.direction) for a in spec.normal_actors]

    # Anomalies start at their region center and bounce off its walls; they
    # draw nothing from the rng so dropping them leaves the scene unchanged.
    anom_state = []
    for a in spec.anomalies:
        x0, y0, x1, y1 = a.region
        anom_state.append({
            "pos": ((x0 + x1) / 2.0, (y0 + y1) / 2.0),
            "vel": _velocity(a.speed, a.direction),
            "spec": a,
        })

    frames = []
    labels = np.zeros(spec.n_frames, dtype=np.uint8)
    masks = np.zeros((spec.n_frames, h, w), dtype=bool)
    for t in range(spec.n_frames):
        frame = background.copy()
        for k, actor in enumerate(spec.normal_actors):
            cx, cy = actor_pos[k]
            _render_blob(frame, cx, cy, actor.size / 2.0, wrap=True)
            vx, vy = actor_vel[k]
            actor_pos[k] = ((cx + vx) % w, (cy + vy) % h)
        for st in anom_state:
            a = st["spec"]
            if not (a.start_frame <= t < a.end_frame):
                continue
            labels[t] = 1
            cx, cy = st["pos"]
            weight = _render_blob(frame, cx, cy, a.size / 2.0, wrap=False)
            masks[t] |= weight >= MASK_WEIGHT_THRESHOLD
            x0, y0, x1, y1 = a.region
            vx, vy = st["vel"]
            nx, ny = cx + vx, cy + vy
            if not (x0 <= nx < x1):
                vx = -vx
                nx = cx + vx
            if not (y0 <= ny < y1):
                vy = -vy
                ny = cy + vy
            st["pos"], st["vel"] = (nx, ny), (vx, vy)
        frames.append(GrayFrame(pixels=np.clip(frame, 0.0, 1.0).astype(np.float32),
                                index=t))
    gt = GroundTruth(frame_labels=labels,
                     pixel_masks=masks if spec.anomalies else None)
    gt.validate()
    return FrameSequence(frames=frames), gt


def benchmark_test_spec() -> SynthSpec:
    """The 160x120 / 600-frame / two-burst regression scene (seed 42)."""
    return SynthSpec(
        width=160,
        height=120,
        n_frames=600,
        seed=42,
        normal_actors=(
            ActorSpec(size=9.0, speed=1.2, direction=20.0),
            ActorSpec(size=8.0, speed=1.5, direction=110.0),
            ActorSpec(size=10.0, speed=1.0, direction=250.0),
        ),
        anomalies=(
            # 4x faster than the fastest normal actor.
            AnomalySpec(start_frame=180, end_frame=240,
                        region=(20, 20, 140, 100), size=9.0,
                        speed=6.0, direction=20.0),
            # Everyday speed, direction no normal actor uses.
            AnomalySpec(start_frame=400, end_frame=460,
                        region=(30, 25, 130, 95), size=9.0,
                        speed=1.5, direction=320.0),
        ),
    )


def benchmark_train_spec() -> SynthSpec:
    """Anomaly-free twin of the benchmark scene (identical normal content)."""
    return benchmark_test_spec().without_anomalies()
