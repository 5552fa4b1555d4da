"""CLI: sam2-export --video <path> --point x,y --out <dir> --checkpoint <path>."""

from __future__ import annotations

import argparse
import sys

from .errors import AdapterError
from .export import PromptSpec, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sam2-export",
        description="Export SAM2 mask logits for one point-prompted object into the TPSM layout.",
    )
    parser.add_argument("--video", required=True, help="video file or directory of image frames")
    parser.add_argument("--point", required=True, help="positive first-frame prompt as x,y")
    parser.add_argument("--out", required=True)
    parser.add_argument("--checkpoint", required=True, help="SAM2 checkpoint path")
    parser.add_argument("--model-cfg", default=None, help="override the SAM2 model config")
    parser.add_argument("--device", default="cuda")
    parser.add_argument("--object-id", type=int, default=1)
    parser.add_argument("--fps", type=float, default=30.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        x_text, y_text = args.point.split(",")
        prompt = PromptSpec(points=((float(x_text), float(y_text), True),), object_id=args.object_id)
    except (ValueError, AdapterError) as exc:
        print(f"bad prompt: {exc}", file=sys.stderr)
        return 2
    try:
        from .predictor import Sam2VideoPredictor

        kwargs = {} if args.model_cfg is None else {"model_cfg": args.model_cfg}
        predictor = Sam2VideoPredictor(args.checkpoint, device=args.device, **kwargs)
        out = export(args.video, prompt, args.out, predictor, fps=args.fps)
    except AdapterError as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return 1
    print(f"exported sequence to {out}")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
