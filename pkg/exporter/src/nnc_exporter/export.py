"""One-shot export: video frames -> last-conv activation maps -> NNCF file.

Frames are resized to 224x224, scaled to pixel units, replicated to three
channels and mean-subtracted before the forward pass. Raw 13x13 maps are
stored (NNCF rows/cols = 13); the consumer resizes them onto its grid, so
both appearance sources share one resize code path.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np
import torch

from .model import (DEFAULT_CHANNEL_MEANS, OUTPUT_CHANNELS, OUTPUT_SPATIAL,
                    INPUT_SIZE, load_feature_cnn)

NNCF_MAGIC = b"NNCF"
NNCF_VERSION = 1

RAW_GRAY_MAGIC = b"NNCV"


@dataclass
class ExportJob:
    input_path: str
    weights_path: str
    output_path: str
    input_format: str = "raw-gray"  # raw-gray | pgm-dir | png-dir
    frame_stride: int = 1
    batch_size: int = 8
    subtract_mean: bool = True
    channel_means: tuple[float, float, float] = DEFAULT_CHANNEL_MEANS


def load_gray_frames(path: str, format: str) -> np.ndarray:
    """(n, h, w) float32 intensities in [0, 1]."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such input path: {path}")
    if format == "raw-gray":
        with open(path, "rb") as fh:
            header = fh.read(16)
            if len(header) < 16 or header[:4] != RAW_GRAY_MAGIC:
                raise ValueError(f"{path}: bad raw-gray magic")
            width, height, count = struct.unpack("<III", header[4:16])
            body = fh.read()
        if len(body) != width * height * count:
            raise ValueError(f"{path}: truncated raw-gray body")
        stack = np.frombuffer(body, dtype=np.uint8).reshape(count, height, width)
        return stack.astype(np.float32) / 255.0
    if format == "pgm-dir":
        names = sorted(n for n in os.listdir(path) if n.lower().endswith(".pgm"))
        return np.stack([_read_pgm(os.path.join(path, n)) for n in names])
    if format == "png-dir":
        from PIL import Image

        names = sorted(n for n in os.listdir(path) if n.lower().endswith(".png"))
        frames = []
        for name in names:
            with Image.open(os.path.join(path, name)) as im:
                frames.append(np.asarray(im.convert("L"), dtype=np.float32) / 255.0)
        return np.stack(frames)
    raise ValueError(f"unknown input format: {format!r}")


def _read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary P5 PGM")
    fields, pos = [], 2
    while len(fields) < 3:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(int(data[pos:end]))
        pos = end
    pos += 1
    width, height, _ = fields
    raster = np.frombuffer(data[pos:pos + width * height], dtype=np.uint8)
    return raster.reshape(height, width).astype(np.float32) / 255.0


def preprocess(frames: np.ndarray, subtract_mean: bool = True,
               channel_means=DEFAULT_CHANNEL_MEANS) -> torch.Tensor:
    """Gray [0,1] frames -> (n, 3, 224, 224) mean-subtracted pixel tensors."""
    t = torch.from_numpy(np.ascontiguousarray(frames)).unsqueeze(1)
    t = torch.nn.functional.interpolate(
        t, size=(INPUT_SIZE, INPUT_SIZE), mode="bilinear", align_corners=False)
    t = t.repeat(1, 3, 1, 1) * 255.0
    if subtract_mean:
        means = torch.tensor(channel_means).view(1, 3, 1, 1)
        t = t - means
    return t


def write_nncf(path: str, maps: np.ndarray) -> None:
    """(n, rows, cols, channels) float32, channel-minor, little-endian."""
    n, rows, cols, channels = maps.shape
    with open(path, "wb") as fh:
        fh.write(NNCF_MAGIC)
        fh.write(struct.pack("<IIIII", NNCF_VERSION, n, rows, cols, channels))
        fh.write(np.ascontiguousarray(maps, dtype="<f4").tobytes())


def export(job: ExportJob) -> int:
    """Run the CNN over the selected frames and write the NNCF file.

    Returns the number of exported frames.
    """
    model = load_feature_cnn(job.weights_path)
    frames = load_gray_frames(job.input_path, job.input_format)[::job.frame_stride]
    chunks = []
    with torch.no_grad():
        for lo in range(0, len(frames), job.batch_size):
            batch = preprocess(frames[lo:lo + job.batch_size],
                               subtract_mean=job.subtract_mean,
                               channel_means=job.channel_means)
            out = model(batch)  # (b, 256, 13, 13)
            chunks.append(out.permute(0, 2, 3, 1).numpy())
    maps = np.concatenate(chunks) if chunks else np.empty(
        (0, OUTPUT_SPATIAL, OUTPUT_SPATIAL, OUTPUT_CHANNELS), np.float32)
    write_nncf(job.output_path, maps.astype(np.float32))
    return len(maps)
