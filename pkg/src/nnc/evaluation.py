"""Frame-level and pixel-level ROC/AUC plus ground-truth loading.

Frame level: positive frames are those containing at least one anomalous
pixel; a plain score threshold sweeps the ROC. Pixel level: a positive
frame counts as detected at a threshold only when strictly more than 40%
of its ground-truth anomalous pixels are flagged; a negative frame is a
false positive when any of its pixels is flagged. Detection maps are
Gaussian-smoothed before the pixel-level sweep. Equal-error-rate style
summaries are deliberately not provided.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .ingest import load_raw_gray
from .interp import gaussian_kernel1d
from .synth import GroundTruth

PIXEL_COVERAGE_FRACTION = 0.4
MAX_PIXEL_THRESHOLDS = 1000


@dataclass
class RocResult:
    thresholds: np.ndarray  # descending, +inf sentinel first
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float


def _trapezoid_auc(fpr: np.ndarray, tpr: np.ndarray) -> float:
    return float(np.trapezoid(tpr, fpr))


def frame_level_auc(scores: np.ndarray, labels: np.ndarray) -> RocResult:
    """ROC over score thresholds (>= comparison), trapezoidal area."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-D arrays")
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined when only one class is present")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    tp = np.cumsum(pos[order])
    fp = np.cumsum(~pos[order])
    # Keep the last index of each tied-score run (all-at-threshold counts).
    distinct = np.nonzero(np.diff(sorted_scores))[0]
    keep = np.append(distinct, labels.size - 1)
    thresholds = np.concatenate([[np.inf], sorted_scores[keep]])
    tpr = np.concatenate([[0.0], tp[keep] / n_pos])
    fpr = np.concatenate([[0.0], fp[keep] / n_neg])
    return RocResult(thresholds=thresholds, tpr=tpr, fpr=fpr,
                     auc=_trapezoid_auc(fpr, tpr))


def smooth_pixel_maps(maps: np.ndarray, sigma_s: float) -> np.ndarray:
    """Per-frame 2-D Gaussian smoothing (reflect padding) of (n, h, w) maps."""
    maps = np.asarray(maps, dtype=np.float64)
    kernel = gaussian_kernel1d(sigma_s)
    if kernel.size == 1:
        return maps.copy()
    out = convolve1d(maps, kernel, axis=-2, mode="reflect")
    return convolve1d(out, kernel, axis=-1, mode="reflect")


def pixel_level_auc(maps: np.ndarray, masks: np.ndarray,
                    frame_scores: np.ndarray | None = None,
                    max_thresholds: int = MAX_PIXEL_THRESHOLDS) -> RocResult:
    """Frame-wise ROC under the 40%-coverage detection rule.

    maps: (n, h, w) smoothed pixel detection maps; masks: (n, h, w) bool.
    frame_scores is accepted for interface symmetry and length validation
    only; detection decisions are made from the maps.
    """
    maps = np.asarray(maps, dtype=np.float64)
    masks = np.asarray(masks).astype(bool)
    if maps.shape != masks.shape:
        raise ValueError(f"map stack {maps.shape} does not match masks {masks.shape}")
    if frame_scores is not None and len(frame_scores) != maps.shape[0]:
        raise ValueError("frame_scores length does not match the map count")
    labels = masks.reshape(masks.shape[0], -1).any(axis=1)
    n_pos = int(labels.sum())
    n_neg = int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined when only one class is present")

    thresholds = np.unique(maps)[::-1]
    if thresholds.size > max_thresholds:
        idx = np.unique(np.linspace(0, thresholds.size - 1, max_thresholds).round()
                        .astype(np.int64))
        thresholds = thresholds[idx]

    # Per positive frame: sorted mask-pixel values let a searchsorted count
    # how many anomalous pixels clear each threshold.
    pos_sorted = []
    pos_required = []
    for f in np.nonzero(labels)[0]:
        vals = np.sort(maps[f][masks[f]])
        pos_sorted.append(vals)
        pos_required.append(PIXEL_COVERAGE_FRACTION * vals.size)
    neg_max = maps[~labels].reshape(n_neg, -1).max(axis=1)

    tp = np.zeros(thresholds.size)
    for vals, required in zip(pos_sorted, pos_required):
        covered = vals.size - np.searchsorted(vals, thresholds, side="left")
        tp += covered > required
    fp = (neg_max[None, :] >= thresholds[:, None]).sum(axis=1)
    tpr = tp / n_pos
    fpr = fp / n_neg
    thresholds = np.concatenate([[np.inf], thresholds])
    tpr = np.concatenate([[0.0], tpr])
    fpr = np.concatenate([[0.0], fpr])
    if tpr[-1] != 1.0 or fpr[-1] != 1.0:
        # Close the curve: below the global minimum everything is flagged.
        thresholds = np.append(thresholds, -np.inf)
        tpr = np.append(tpr, 1.0)
        fpr = np.append(fpr, 1.0)
    return RocResult(thresholds=thresholds, tpr=tpr, fpr=fpr,
                     auc=_trapezoid_auc(fpr, tpr))


# ---------------------------------------------------------------------------
# Ground truth


def load_frame_labels(path: str) -> np.ndarray:
    """Frame labels from CSV: either ``frame_index,label`` lines or one
    comma-separated line of labels."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty ground-truth CSV")
    if lines[0].replace(" ", "") == "frame_index,label":
        lines = lines[1:]
    if len(lines) == 1 and lines[0].count(",") != 1:
        return np.array([int(v) for v in lines[0].split(",")], dtype=np.uint8)
    labels = np.zeros(len(lines), dtype=np.uint8)
    for ln in lines:
        parts = ln.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}: malformed line {ln!r}")
        idx, val = int(parts[0]), int(parts[1])
        if not 0 <= idx < len(lines):
            raise ValueError(f"{path}: frame index {idx} out of range")
        labels[idx] = val
    return labels


def save_frame_labels(path: str, labels: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("frame_index,label\n")
        for i, v in enumerate(labels):
            fh.write(f"{i},{int(v)}\n")


def _load_masks(path: str) -> np.ndarray:
    """Binary masks from a raw-gray file or a directory of PGM frames."""
    if os.path.isdir(path):
        from .ingest import load_sequence

        seq = load_sequence(path, format="pgm-dir")
        return np.stack([f.pixels > 0 for f in seq.frames])
    seq = load_raw_gray(path)
    return np.stack([f.pixels > 0 for f in seq.frames])


def load_ground_truth(labels_path: str | None = None,
                      masks_path: str | None = None,
                      n_frames: int | None = None) -> GroundTruth:
    """Assemble ground truth from a label CSV and/or mask files.

    When both are given, the label/mask consistency invariant is enforced;
    with masks only, labels are derived.
    """
    if labels_path is None and masks_path is None:
        raise ValueError("need a labels CSV, mask files, or both")
    masks = _load_masks(masks_path) if masks_path else None
    if labels_path:
        labels = load_frame_labels(labels_path)
    else:
        labels = masks.reshape(len(masks), -1).any(axis=1).astype(np.uint8)
    if n_frames is not None and len(labels) != n_frames:
        raise ValueError(
            f"ground truth covers {len(labels)} frames, video has {n_frames}")
    gt = GroundTruth(frame_labels=labels, pixel_masks=masks)
    gt.validate()
    return gt


def write_report(path: str, metrics: dict[str, float]) -> None:
    """metric,value rows, e.g. frame_auc / pixel_auc."""
    with open(path, "w", newline="") as fh:
        fh.write("metric,value\n")
        for name, value in metrics.items():
            fh.write(f"{name},{float(value)!r}\n")


def write_roc_dump(path: str, curves: dict[str, RocResult]) -> None:
    """Full ROC curves as curve,threshold,fpr,tpr rows."""
    with open(path, "w", newline="") as fh:
        fh.write("curve,threshold,fpr,tpr\n")
        for name, roc in curves.items():
            for thr, fpr, tpr in zip(roc.thresholds, roc.fpr, roc.tpr):
                fh.write(f"{name},{float(thr)!r},{float(fpr)!r},{float(tpr)!r}\n")
