"""Command line for the one-shot activation-map export."""

from __future__ import annotations

import argparse
import sys

from .export import ExportJob, export
from .model import ShapeMismatchError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnc-export-features",
        description="Run a pretrained CNN's last conv layer over video "
                    "frames and write an NNCF activation file.")
    parser.add_argument("--video", required=True, help="input video path")
    parser.add_argument("--video-format", default="raw-gray",
                        choices=("raw-gray", "pgm-dir", "png-dir"))
    parser.add_argument("--weights", required=True,
                        help="local .pt state-dict file (never downloaded)")
    parser.add_argument("--out", required=True, help="output NNCF path")
    parser.add_argument("--frame-stride", type=int, default=1)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--no-mean-subtract", action="store_true",
                        help="skip channel-mean subtraction (debugging aid)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        input_path=args.video,
        weights_path=args.weights,
        output_path=args.out,
        input_format=args.video_format,
        frame_stride=args.frame_stride,
        batch_size=args.batch_size,
        subtract_mean=not args.no_mean_subtract,
    )
    try:
        n = export(job)
    except (FileNotFoundError, ValueError, ShapeMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"exported {n} frames to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
