"""Command-line surface: train | score | eval | synth | plot.

Flag values override a ``--config`` file, which overrides the stock
defaults. Exit codes: 0 success, 1 internal error, 2 usage/input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import evaluation, synth
from .augment import (FileAppearanceProvider, HandcraftedAppearanceProvider,
                      ZeroAppearanceProvider)
from .config import RunConfig
from .detect import (PipelineError, load_model, read_maps, read_scores_csv,
                     save_model, score_sequence, train, upsample_map,
                     write_maps, write_scores_csv)
from .ingest import FormatError, load_sequence, save_raw_gray

log = logging.getLogger("nnc")

_CONFIG_FLAGS = (
    ("cubes_per_cluster", int,
     "average cubes per cluster used to size k (method default: 1000)"),
    ("restarts", int,
     "clustering restarts, keeping minimum energy (method default: 10)"),
    ("min_cluster_size", int,
     "clusters below this size are pruned as outliers (method default: 500)"),
    ("nu", float,
     "outlier fraction bound of the per-cluster SVMs (method default: 0.01)"),
    ("tau_static", float,
     "gradient-energy threshold marking cubes static (default: 0.1)"),
    ("train_temporal_stride", int,
     "frame stride between training cube stacks (method default: 1)"),
    ("test_frame_stride", int,
     "score one in every N test frames (method default: 2)"),
    ("sigma_t", float,
     "temporal Gaussian sigma for frame scores, frames (default: 10)"),
    ("sigma_s", float,
     "spatial Gaussian sigma for pixel maps, pixels (default: 20)"),
    ("seed", int, "seed for clustering restarts (default: 0)"),
    ("workers", int, "worker threads for restarts (default: 1)"),
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI config file; flags override it")
    for name, ftype, help_text in _CONFIG_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", type=ftype,
                            default=None, dest=name, help=help_text)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {name: getattr(args, name) for name, _, _ in _CONFIG_FLAGS
                 if getattr(args, name, None) is not None}
    return cfg.replace(**overrides) if overrides else cfg


def _build_provider(features: str, seq):
    if features == "handcrafted":
        return HandcraftedAppearanceProvider(seq)
    if features == "zero":
        return ZeroAppearanceProvider()
    return FileAppearanceProvider(features)


def _load_video(args: argparse.Namespace):
    return load_sequence(args.video, format=args.video_format)


def _add_video_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--video", required=True, help="input video path")
    parser.add_argument("--video-format", default="raw-gray",
                        choices=("raw-gray", "pgm-dir", "png-dir"))
    parser.add_argument("--features", default="handcrafted",
                        help="appearance source: 'handcrafted', 'zero', or an "
                             "NNCF activation file (default: handcrafted)")


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    seq = _load_video(args)
    provider = _build_provider(args.features, seq)
    log.info("training on %d frames, nu=%g, min_cluster_size=%d, restarts=%d",
             len(seq), cfg.nu, cfg.min_cluster_size, cfg.restarts)
    model = train(seq, provider, cfg)
    save_model(model, args.out_model)
    log.info("k=%d clusters, r=%d retained", model.k_total, model.r)
    for idx, svm in enumerate(model.models):
        log.info("cluster model %d: n=%d, support fraction %.4f",
                 idx, svm.n_train, float(np.mean(svm.alphas > 0)))
    log.info("model written to %s", args.out_model)
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    model = load_model(args.model)
    seq = _load_video(args)
    provider = _build_provider(args.features, seq)
    start = time.perf_counter()
    maps, series = score_sequence(
        model, seq, provider, test_frame_stride=cfg.test_frame_stride,
        sigma_t=cfg.sigma_t, appearance_missing=cfg.appearance_missing)
    elapsed = time.perf_counter() - start
    write_scores_csv(args.out_scores, series)
    if args.out_maps:
        write_maps(args.out_maps, maps)
    log.info("scored %d frames in %.2f s (%.1f frames/second)",
             len(seq), elapsed, len(seq) / elapsed)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    series = read_scores_csv(args.scores)
    gt = evaluation.load_ground_truth(
        labels_path=args.gt_labels, masks_path=args.gt_masks,
        n_frames=len(series.raw))
    metrics: dict[str, float] = {}
    curves: dict[str, evaluation.RocResult] = {}
    roc = evaluation.frame_level_auc(series.smoothed, gt.frame_labels)
    metrics["frame_auc"] = roc.auc
    curves["frame"] = roc
    print(f"frame_auc {roc.auc:.6f}")
    if args.maps and gt.pixel_masks is not None:
        maps = read_maps(args.maps)
        h, w = gt.pixel_masks.shape[1:]
        pixel_maps = np.stack([upsample_map(m, w, h) for m in maps])
        pixel_maps = evaluation.smooth_pixel_maps(pixel_maps, cfg.sigma_s)
        proc = evaluation.pixel_level_auc(pixel_maps, gt.pixel_masks,
                                          frame_scores=series.smoothed)
        metrics["pixel_auc"] = proc.auc
        curves["pixel"] = proc
        print(f"pixel_auc {proc.auc:.6f}")
    if args.report:
        evaluation.write_report(args.report, metrics)
    if args.roc_dump:
        evaluation.write_roc_dump(args.roc_dump, curves)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.preset == "benchmark-test":
        spec = synth.benchmark_test_spec()
    elif args.preset == "benchmark-train":
        spec = synth.benchmark_train_spec()
    else:
        spec = synth.SynthSpec(
            width=args.width, height=args.height, n_frames=args.frames,
            seed=args.seed,
            normal_actors=(
                synth.ActorSpec(size=9.0, speed=1.2, direction=20.0),
                synth.ActorSpec(size=8.0, speed=1.5, direction=110.0),
                synth.ActorSpec(size=10.0, speed=1.0, direction=250.0),
            ),
        )
    seq, gt = synth.generate(spec)
    save_raw_gray(args.out, seq)
    log.info("wrote %d frames to %s", len(seq), args.out)
    if args.gt_labels:
        evaluation.save_frame_labels(args.gt_labels, gt.frame_labels)
    if args.gt_masks:
        if gt.pixel_masks is None:
            log.info("no anomalies in spec; skipping %s", args.gt_masks)
        else:
            from .ingest import FrameSequence, GrayFrame

            mask_seq = FrameSequence(frames=[
                GrayFrame(pixels=m.astype(np.float32), index=i)
                for i, m in enumerate(gt.pixel_masks)])
            save_raw_gray(args.gt_masks, mask_seq)
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    series = read_scores_csv(args.scores)
    labels = None
    if args.gt_labels:
        labels = evaluation.load_frame_labels(args.gt_labels)
        if len(labels) != len(series.raw):
            raise ValueError("ground-truth length does not match the score series")
    svg = render_score_svg(series.normalized, labels)
    with open(args.out, "w") as fh:
        fh.write(svg)
    log.info("wrote %s", args.out)
    return 0


def render_score_svg(scores: np.ndarray, labels: np.ndarray | None = None,
                     width: int = 960, height: int = 240) -> str:
    """Score timeline as standalone SVG; label runs shade the background."""
    n = len(scores)
    margin = 30
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin

    def sx(i: int) -> float:
        return margin + (plot_w * i / max(n - 1, 1))

    def sy(v: float) -> float:
        return margin + plot_h * (1.0 - float(v))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if labels is not None:
        for lo, hi in label_runs(labels):
            x0, x1 = sx(lo), sx(hi - 1)
            parts.append(
                f'<rect class="gt" x="{x0:.2f}" y="{margin}" '
                f'width="{max(x1 - x0, 1.0):.2f}" height="{plot_h}" '
                f'fill="#ffb6c1"/>')
    points = " ".join(f"{sx(i):.2f},{sy(v):.2f}" for i, v in enumerate(scores))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#1f4fff" '
                 f'stroke-width="1.5"/>')
    parts.append(f'<line x1="{margin}" y1="{margin + plot_h}" '
                 f'x2="{margin + plot_w}" y2="{margin + plot_h}" '
                 f'stroke="black"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def label_runs(labels: np.ndarray) -> list[tuple[int, int]]:
    """[start, end) intervals of consecutive positive labels."""
    runs = []
    start = None
    for i, v in enumerate(labels):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(labels)))
    return runs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnc",
        description="Video anomaly detection via narrowed normality clusters",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a normality model")
    _add_video_args(p_train)
    p_train.add_argument("--out-model", required=True)
    _add_config_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_score = sub.add_parser("score", help="score a video against a model")
    _add_video_args(p_score)
    p_score.add_argument("--model", required=True)
    p_score.add_argument("--out-scores", required=True)
    p_score.add_argument("--out-maps")
    _add_config_flags(p_score)
    p_score.set_defaults(func=cmd_score)

    p_eval = sub.add_parser("eval", help="AUC metrics from scores + ground truth")
    p_eval.add_argument("--scores", required=True)
    p_eval.add_argument("--gt-labels")
    p_eval.add_argument("--gt-masks")
    p_eval.add_argument("--maps")
    p_eval.add_argument("--report")
    p_eval.add_argument("--roc-dump", dest="roc_dump",
                        help="write the full ROC curves as CSV")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic video")
    p_synth.add_argument("--preset",
                         choices=("benchmark-test", "benchmark-train", "custom"),
                         default="benchmark-test")
    p_synth.add_argument("--width", type=int, default=160)
    p_synth.add_argument("--height", type=int, default=120)
    p_synth.add_argument("--frames", type=int, default=200)
    p_synth.add_argument("--seed", type=int, default=42)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--gt-labels")
    p_synth.add_argument("--gt-masks")
    p_synth.set_defaults(func=cmd_synth)

    p_plot = sub.add_parser("plot", help="score timeline as SVG")
    p_plot.add_argument("--scores", required=True)
    p_plot.add_argument("--gt-labels")
    p_plot.add_argument("--out", required=True)
    p_plot.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, FormatError, PipelineError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
