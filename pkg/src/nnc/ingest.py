"""Grayscale frame-sequence loading, raw-gray container I/O and frame resizing.

Intensities are kept in [0, 1]; 8-bit sources are mapped by /255. Color
inputs are collapsed with the 0.299/0.587/0.114 luma weights.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .interp import resample2d

RAW_GRAY_MAGIC = b"NNCV"

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


class FormatError(ValueError):
    """A container file does not match its declared binary layout."""


@dataclass(frozen=True)
class GrayFrame:
    """One grayscale frame; ``pixels`` is (height, width) row-major in [0, 1]."""

    pixels: np.ndarray
    index: int = 0

    def __post_init__(self):
        if self.pixels.ndim != 2:
            raise ValueError("frame pixels must be a 2-D array")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class FrameSequence:
    """Ordered frames of uniform size, indices 0..n-1."""

    frames: list[GrayFrame] = field(default_factory=list)
    source_fps: float | None = None

    def __post_init__(self):
        for i, f in enumerate(self.frames):
            if f.index != i:
                raise ValueError(f"frame {i} carries index {f.index}")
            if (f.height, f.width) != (self.height, self.width):
                raise ValueError(
                    f"frame {i} is {f.height}x{f.width}, "
                    f"expected {self.height}x{self.width}"
                )

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def width(self) -> int:
        return self.frames[0].width

    def as_array(self) -> np.ndarray:
        """Stack into an (n, height, width) float32 array."""
        return np.stack([f.pixels for f in self.frames]).astype(np.float32)

    @classmethod
    def from_array(cls, stack: np.ndarray, source_fps: float | None = None) -> "FrameSequence":
        frames = [GrayFrame(pixels=stack[i], index=i) for i in range(stack.shape[0])]
        return cls(frames=frames, source_fps=source_fps)


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Luma conversion of an (h, w, 3) array; already-gray input passes through."""
    if rgb.ndim == 2:
        return rgb
    return rgb[..., :3] @ LUMA_WEIGHTS


def _read_pgm(path: str) -> np.ndarray:
    """Binary P5 PGM, 8-bit, with optional '#' comment lines."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise FormatError(f"{path}: not a binary P5 PGM")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        fields.append(int(data[pos:end]))
        pos = end
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise FormatError(f"{path}: truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def write_pgm(path: str, img_u8: np.ndarray) -> None:
    h, w = img_u8.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(np.ascontiguousarray(img_u8, dtype=np.uint8).tobytes())


def _read_png(path: str) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim == 3:
        if arr.dtype != np.uint8:
            raise FormatError(f"{path}: only 8-bit PNG supported")
        return rgb_to_gray(arr.astype(np.float64)).round().astype(np.uint8)
    return arr.astype(np.uint8)


def load_raw_gray(path: str) -> FrameSequence:
    """Read the NNCV raw-gray container (16-byte header + 8-bit frames)."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) < 16 or header[:4] != RAW_GRAY_MAGIC:
            raise FormatError(f"{path}: bad raw-gray magic")
        width, height, count = struct.unpack("<III", header[4:16])
        body = fh.read()
    expected = width * height * count
    if len(body) != expected:
        raise FormatError(
            f"{path}: expected {expected} frame bytes, found {len(body)}"
        )
    stack = np.frombuffer(body, dtype=np.uint8).reshape(count, height, width)
    frames = [
        GrayFrame(pixels=stack[i].astype(np.float32) / 255.0, index=i)
        for i in range(count)
    ]
    return FrameSequence(frames=frames)


def save_raw_gray(path: str, seq: FrameSequence) -> None:
    """Write the NNCV container; intensities are rounded back to 8-bit."""
    with open(path, "wb") as fh:
        fh.write(RAW_GRAY_MAGIC)
        fh.write(struct.pack("<III", seq.width, seq.height, len(seq)))
        for f in seq.frames:
            u8 = np.clip(np.rint(f.pixels * 255.0), 0, 255).astype(np.uint8)
            fh.write(u8.tobytes())


def load_sequence(path: str, format: str = "raw-gray") -> FrameSequence:
    """Load frames from a raw-gray file or a directory of PGM/PNG files.

    Directory formats order frames by lexicographic filename. Every frame
    must share one resolution; a mismatch fails naming the offending file.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such video path: {path}")
    if format == "raw-gray":
        return load_raw_gray(path)
    if format not in ("pgm-dir", "png-dir"):
        raise ValueError(f"unknown sequence format: {format!r}")
    ext = ".pgm" if format == "pgm-dir" else ".png"
    reader = _read_pgm if format == "pgm-dir" else _read_png
    names = sorted(n for n in os.listdir(path) if n.lower().endswith(ext))
    if not names:
        raise FileNotFoundError(f"{path}: no {ext} files")
    frames = []
    shape = None
    for i, name in enumerate(names):
        img = reader(os.path.join(path, name))
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            raise FormatError(
                f"{name}: frame is {img.shape[0]}x{img.shape[1]}, "
                f"expected {shape[0]}x{shape[1]}"
            )
        frames.append(GrayFrame(pixels=img.astype(np.float32) / 255.0, index=i))
    return FrameSequence(frames=frames)


def resize_frame(frame: GrayFrame, width: int, height: int, method: str = "bilinear") -> GrayFrame:
    """Resize to (height, width); output is clamped to [0, 1] (bicubic overshoots)."""
    if width < 1 or height < 1:
        raise ValueError("target size must be at least 1x1")
    out = resample2d(frame.pixels, height, width, method)
    return GrayFrame(pixels=np.clip(out, 0.0, 1.0), index=frame.index)


def resize_sequence(seq: FrameSequence, width: int, height: int, method: str = "bilinear") -> FrameSequence:
    if seq.width == width and seq.height == height:
        return seq
    frames = [resize_frame(f, width, height, method) for f in seq.frames]
    return FrameSequence(frames=frames, source_fps=seq.source_fps)
