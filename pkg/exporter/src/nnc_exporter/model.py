"""Shallow 5-conv feature CNN whose last conv layer yields 13x13x256 maps.

The layer stack matches the classic fast-CNN shape for 224x224 inputs:
11x11/4 stem, two 3x3/2 ceil-mode pools, then three 3x3 conv stages at
stride 1. Weights are always loaded from a local file; this package never
downloads anything.
"""

from __future__ import annotations

import os

import torch
from torch import nn

INPUT_SIZE = 224
OUTPUT_CHANNELS = 256
OUTPUT_SPATIAL = 13

# Per-channel RGB means of the ILSVRC training images in pixel units,
# the standard preprocessing constants for this model family.
DEFAULT_CHANNEL_MEANS = (123.68, 116.779, 103.939)


class ShapeMismatchError(RuntimeError):
    """The network's last conv layer does not produce the expected maps."""


class FeatureCnn(nn.Module):
    def __init__(self):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 64, kernel_size=11, stride=4),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(kernel_size=3, stride=2, ceil_mode=True),
            nn.Conv2d(64, 256, kernel_size=5, stride=1, padding=2),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(kernel_size=3, stride=2, ceil_mode=True),
            nn.Conv2d(256, 256, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(256, 256, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(256, 256, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.features(x)


def validate_output_shape(model: nn.Module) -> None:
    """Forward a probe tensor and fail loudly on the wrong map geometry."""
    with torch.no_grad():
        out = model(torch.zeros(1, 3, INPUT_SIZE, INPUT_SIZE))
    expected = (1, OUTPUT_CHANNELS, OUTPUT_SPATIAL, OUTPUT_SPATIAL)
    if tuple(out.shape) != expected:
        raise ShapeMismatchError(
            f"last conv layer yields {tuple(out.shape)}, expected {expected}")


def load_feature_cnn(weights_path: str) -> FeatureCnn:
    if not os.path.exists(weights_path):
        raise FileNotFoundError(f"weight file missing: {weights_path}")
    model = FeatureCnn()
    state = torch.load(weights_path, map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    validate_output_shape(model)
    return model
