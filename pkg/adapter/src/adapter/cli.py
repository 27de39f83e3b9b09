"""Command line entry point: one subcommand per produced file kind.

Exit codes: 0 success, 2 configuration or backend failure, 3 I/O failure.
All backends resolve before the first image is read, so a missing
artifact never leaves a half-processed output behind.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import cv2
import numpy as np

from . import __version__
from .backends import (
    CONFIDENCE_FLOOR,
    BackendError,
    choose_bottom_up,
    resolve_deblur,
    resolve_detector,
    resolve_person_detector,
    resolve_pose_backend,
)
from .config import AdapterConfig, ConfigError, load_config
from .io import image_id_for, list_images, write_bytes_atomic, write_json_atomic

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapter",
        description="Produce detection, pose, and deblurred-image files for the "
        "posefilter pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_command(name: str, help_text: str, out_help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--in", dest="in_dir", required=True, help="input image directory")
        sp.add_argument("--out", required=True, help=out_help)
        sp.add_argument("--config", help="adapter config JSON (defaults apply when omitted)")
        return sp

    sp = add_command("detect", "emit object detections", "detections JSON (COCO results)")
    sp.set_defaults(func=cmd_detect)
    sp = add_command("pose", "emit per-image person poses", "pose entries JSON")
    sp.set_defaults(func=cmd_pose)
    sp = add_command("deblur", "emit sharpened copies of the images", "output image directory")
    sp.set_defaults(func=cmd_deblur)
    return parser


def _read_image(path: Path) -> np.ndarray | None:
    img = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if img is None:
        logger.warning("skipping undecodable image %s", path.name)
    return img


def cmd_detect(args: argparse.Namespace, config: AdapterConfig) -> int:
    detector = resolve_detector(config.detector)
    records = []
    for path in list_images(args.in_dir):
        img = _read_image(path)
        if img is None:
            continue
        image_id = image_id_for(path)
        for rec in detector.detections(img, path.name):
            if rec["score"] < CONFIDENCE_FLOOR:
                continue
            records.append(
                {
                    "image_id": image_id,
                    "category_id": rec["category_id"],
                    "bbox": rec["bbox"],
                    "score": rec["score"],
                }
            )
    write_json_atomic(args.out, records)
    return 0


def cmd_pose(args: argparse.Namespace, config: AdapterConfig) -> int:
    person_detector = resolve_person_detector(config.human_detector)
    backends = {
        False: resolve_pose_backend(config.pose_top_down),
        True: resolve_pose_backend(config.pose_bottom_up),
    }
    entries = []
    for path in list_images(args.in_dir):
        img = _read_image(path)
        if img is None:
            continue
        boxes = person_detector.person_boxes(img, path.name)
        bottom_up = choose_bottom_up(len(boxes), config.pose_person_threshold)
        backend = backends[bottom_up]
        entries.append(
            {
                "image_id": image_id_for(path),
                "person_count": len(boxes),
                "bottom_up": bottom_up,
                "poses": [{"keypoints": backend.keypoints_for(box)} for box in boxes],
            }
        )
    write_json_atomic(args.out, entries)
    return 0


def cmd_deblur(args: argparse.Namespace, config: AdapterConfig) -> int:
    deblur = resolve_deblur(config.deblur_model, config.deblur_backbone)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in list_images(args.in_dir):
        data = path.read_bytes()
        img = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_COLOR)
        if img is None:
            logger.warning("copying %s through undecoded", path.name)
            write_bytes_atomic(out_dir / path.name, data)
            continue
        ok, buf = cv2.imencode(path.suffix, deblur.apply(img))
        if not ok:
            logger.warning("copying %s through, re-encoding failed", path.name)
            write_bytes_atomic(out_dir / path.name, data)
            continue
        write_bytes_atomic(out_dir / path.name, buf.tobytes())
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except (ConfigError, BackendError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
