"""Command line entry point: every pipeline stage as a subcommand.

Exit codes: 0 success, 2 validation or usage failure, 3 I/O failure.
Every run writes a manifest (config snapshot, input digests, output list)
next to its outputs; manifests are the only outputs carrying timestamps,
so everything else is byte-identical across re-runs.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import __version__
from .aoi import generate_aois
from .blur import SIDECAR_NAME, BlurParams, augment_dataset
from .dataset import (
    HandheldClassList,
    SplitSpec,
    apply_handheld_flags,
    handheld_subset,
    split_dataset,
)
from .evaluation import filtered_ratios, sweep
from .filtering import FilterConfig
from .interchange import (
    ParseError,
    ValidationError,
    group_by_image,
    load_aois,
    load_class_ids,
    load_coco,
    load_detections,
    load_eval_set,
    load_flags,
    load_image_metas,
    load_poses,
    read_json,
    save_aois,
    save_decisions,
    save_detections,
    save_eval_set,
    sorted_image_ids,
    write_coco_subset,
    write_json_atomic,
)
from .manifest import write_manifest
from .pipeline import decide_with_regions_no_upper, decide_with_regions_upper
from .report import write_pr_csv, write_pr_svg, write_summary_json
from .scaling import DEFAULT_CONSTANTS, AnthropometricConstants
from .types import DEFAULT_KEYPOINT_CONF_THRESHOLD, image_id_sort_key

logger = logging.getLogger(__name__)

DEFAULT_SPLITS = "0.5,0.25,0.25"


def _parse_fractions(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected train,val,test fractions, got {text!r}")
    try:
        train, val, test = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return train, val, test


def _parse_int_pair(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected MIN,MAX, got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return lo, hi


def _parse_float_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected MIN,MAX, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return lo, hi


# Converters re-applied to string values arriving via --config files.
CONFIG_COERCERS: dict[str, dict[str, object]] = {
    "build-subset": {"splits": _parse_fractions},
    "blur": {"linear_len": _parse_int_pair, "rot_deg": _parse_float_pair},
}


def build_parser(suppress_defaults: bool = False) -> argparse.ArgumentParser:
    """The full CLI parser.

    With `suppress_defaults` the namespace only contains explicitly passed
    flags; main() uses that to let command line flags win over --config
    file values.
    """
    parser_kwargs = {"argument_default": argparse.SUPPRESS} if suppress_defaults else {}

    def dflt(value):
        # per-argument defaults must also vanish in suppressed mode
        return argparse.SUPPRESS if suppress_defaults else value

    parser = argparse.ArgumentParser(
        prog="posefilter",
        description="Pose-derived region filtering, dataset tooling and evaluation "
        "for handheld object detection.",
        **parser_kwargs,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add_command(name: str, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text, **parser_kwargs)
        sp.add_argument(
            "--config",
            help="JSON file of flag defaults for this command (explicit flags win)",
        )
        return sp

    sp = add_command("build-subset", "build splits and handheld evaluation subsets")
    sp.add_argument("--coco", required=True, help="COCO annotation JSON")
    sp.add_argument("--classes", required=True, help="handheld class-id list JSON")
    sp.add_argument("--person-id", type=int, default=dflt(1), help="person category id (default 1)")
    sp.add_argument(
        "--splits",
        type=_parse_fractions,
        nargs="?",
        const=DEFAULT_SPLITS,
        default=dflt(None),
        metavar="TRAIN,VAL,TEST",
        help=f"write split files; fractions default to {DEFAULT_SPLITS} when the flag is bare",
    )
    sp.add_argument("--seed", type=int, default=dflt(0), help="split shuffle seed")
    sp.add_argument("--flags", help="handheld flags JSON (annotation-id array)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_build_subset)

    sp = add_command("blur", "apply seeded rotational+linear motion blur to a directory")
    sp.add_argument("--images", required=True, help="input image directory")
    sp.add_argument("--out", required=True, help="output image directory")
    sp.add_argument("--seed", type=int, default=dflt(0))
    sp.add_argument("--linear-len", type=_parse_int_pair, default=dflt((5, 25)), metavar="MIN,MAX")
    sp.add_argument("--rot-deg", type=_parse_float_pair, default=dflt((1.0, 5.0)), metavar="MIN,MAX")
    sp.add_argument("--rot-samples", type=int, default=dflt(9))
    sp.add_argument("--threads", type=int, default=dflt(1), help="worker threads (results identical)")
    sp.set_defaults(func=cmd_blur)

    sp = add_command("aoi", "derive hand regions from a pose file")
    sp.add_argument("--poses", required=True, help="pose JSON")
    sp.add_argument("--meta", required=True, help="image dimensions (COCO file or meta array)")
    sp.add_argument("--consts", help="JSON overrides for the body-measurement constants")
    sp.add_argument(
        "--kp-conf",
        type=float,
        default=dflt(DEFAULT_KEYPOINT_CONF_THRESHOLD),
        help="keypoint detection confidence threshold",
    )
    sp.add_argument("--out", required=True, help="output AOI JSON")
    sp.set_defaults(func=cmd_aoi)

    sp = add_command("filter", "suppress detections that no hand region supports")
    sp.add_argument("--detections", required=True, help="detections JSON (COCO results)")
    sp.add_argument("--aoi", required=True, help="AOI JSON from the aoi command")
    sp.add_argument("--upper", type=float, default=dflt(0.7), help="bypass threshold; > 1 disables")
    sp.add_argument("--overlap", type=float, default=dflt(0.25), help="minimum overlap fraction")
    sp.add_argument("--cap", type=float, default=dflt(2.5), help="size cap multiplier")
    sp.add_argument(
        "--mode",
        choices=("upper", "no-upper"),
        default=dflt(None),
        help="execution mode; inferred from --upper when omitted",
    )
    sp.add_argument("--out", required=True, help="filtered detections JSON")
    sp.add_argument("--decisions-out", help="optional per-detection audit JSON")
    sp.set_defaults(func=cmd_filter)

    sp = add_command("eval", "sweep confidences, report PR curve and AP")
    sp.add_argument("--detections", required=True, help="detections JSON to evaluate")
    sp.add_argument("--eval-set", required=True, help="evaluation set JSON from build-subset")
    sp.add_argument("--iou", type=float, default=dflt(0.5))
    sp.add_argument("--step", type=float, default=dflt(0.05))
    sp.add_argument("--baseline", help="unfiltered detections JSON for filtered-ratio report")
    sp.add_argument("--base-conf", type=float, default=dflt(0.001), help="ratio base confidence")
    sp.add_argument("--out-prefix", required=True, help="prefix for pr.csv/summary.json/pr.svg")
    sp.set_defaults(func=cmd_eval)

    return parser


def _config_snapshot(args: argparse.Namespace) -> dict:
    skip = {"func", "command"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, tuple):
            value = list(value)
        elif isinstance(value, Path):
            value = str(value)
        out[key] = value
    return out


def _merge_config_file(args: argparse.Namespace, explicit: argparse.Namespace, path: str) -> None:
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: config file must be a JSON object")
    coercers = CONFIG_COERCERS.get(args.command, {})
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest in ("config", "command", "func") or not hasattr(args, dest):
            raise ValidationError(f"{path}: unknown config key {key!r} for {args.command}")
        if hasattr(explicit, dest):
            continue  # flag given on the command line wins
        coerce = coercers.get(dest)
        if coerce is not None and isinstance(value, str):
            try:
                value = coerce(value)  # type: ignore[operator]
            except argparse.ArgumentTypeError as exc:
                raise ValidationError(f"{path}: key {key!r}: {exc}") from exc
        setattr(args, dest, value)


def _sibling_manifest(out_path: str) -> Path:
    out = Path(out_path)
    return out.with_name(out.name + ".manifest.json")


def cmd_build_subset(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = load_coco(args.coco)
    classes = HandheldClassList(class_ids=load_class_ids(args.classes))
    subset = handheld_subset(ds, classes, args.person_id)

    outputs: list[str] = []
    candidates_path = out_dir / "handheld_candidates.json"
    write_json_atomic(
        candidates_path,
        {
            "image_ids": subset.image_ids,
            "annotation_ids": [a.annotation_id for a in subset.candidates],
        },
        indent=2,
    )
    outputs.append(str(candidates_path))

    # every candidate pre-marked: a starting point for reviewers to prune
    template_path = out_dir / "handheld_flags_template.json"
    write_json_atomic(template_path, [a.annotation_id for a in subset.candidates])
    outputs.append(str(template_path))

    if args.splits is not None:
        train_f, val_f, test_f = args.splits
        spec = SplitSpec(train=train_f, val=val_f, test=test_f, seed=args.seed)
        train, val, test = split_dataset(ds, spec)
        for name, ids in (("train", train), ("val", val), ("test", test)):
            split_path = out_dir / f"split_{name}.json"
            write_coco_subset(ds, ids, split_path)
            outputs.append(str(split_path))

    if args.flags:
        flags = load_flags(args.flags)
        eval_images = apply_handheld_flags(subset, flags)
        eval_path = out_dir / "eval_set.json"
        save_eval_set(eval_images, eval_path)
        outputs.append(str(eval_path))

    inputs = [args.coco, args.classes] + ([args.flags] if args.flags else [])
    write_manifest(
        out_dir / "manifest.json",
        command="build-subset",
        config=_config_snapshot(args),
        inputs=inputs,
        outputs=outputs,
        seeds={"seed": args.seed},
    )
    return 0


def cmd_blur(args: argparse.Namespace) -> int:
    params = BlurParams(
        linear_length_px=tuple(args.linear_len),
        rot_max_angle_deg=tuple(args.rot_deg),
        rot_samples=args.rot_samples,
        seed=args.seed,
    )
    draws = augment_dataset(args.images, args.out, params, threads=args.threads)
    out_dir = Path(args.out)
    write_manifest(
        out_dir / "manifest.json",
        command="blur",
        config=_config_snapshot(args),
        inputs=[args.images],
        outputs=[str(out_dir / d.file) for d in draws] + [str(out_dir / SIDECAR_NAME)],
        seeds={"seed": args.seed},
    )
    return 0


def _load_consts(path: str) -> AnthropometricConstants:
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: constants file must be a JSON object")
    try:
        return dataclasses.replace(DEFAULT_CONSTANTS, **doc)
    except TypeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def cmd_aoi(args: argparse.Namespace) -> int:
    pose_file = load_poses(args.poses)
    metas = {m.image_id: m for m in load_image_metas(args.meta)}
    consts = _load_consts(args.consts) if args.consts else DEFAULT_CONSTANTS
    if not 0.0 <= args.kp_conf <= 1.0:
        raise ValidationError(f"--kp-conf must be in [0, 1], got {args.kp_conf}")

    aois = []
    for entry in sorted(pose_file.entries, key=lambda e: image_id_sort_key(e.image_id)):
        if not entry.poses:
            continue
        meta = metas.get(entry.image_id)
        if meta is None:
            raise ValidationError(f"image {entry.image_id}: poses present but no metadata entry")
        aois.extend(generate_aois(entry.poses, meta, consts, args.kp_conf))
    save_aois(aois, args.out)

    inputs = [args.poses, args.meta] + ([args.consts] if args.consts else [])
    write_manifest(
        _sibling_manifest(args.out),
        command="aoi",
        config=_config_snapshot(args),
        inputs=inputs,
        outputs=[args.out],
    )
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    config = FilterConfig(
        upper_conf=args.upper,
        overlap_frac=args.overlap,
        size_cap_multiplier=args.cap,
    )
    mode = args.mode or ("upper" if config.bypass_enabled else "no-upper")
    if mode == "upper" and not config.bypass_enabled:
        raise ValidationError(f"--mode upper requires --upper <= 1, got {args.upper}")
    if mode == "no-upper" and config.bypass_enabled:
        raise ValidationError(f"--mode no-upper requires --upper > 1, got {args.upper}")

    dets_by_image = group_by_image(load_detections(args.detections))
    aois_by_image = group_by_image(load_aois(args.aoi))

    decisions = []
    if mode == "upper":
        # detections lead; regions are consulted only for images that need them
        for image_id in sorted_image_ids(dets_by_image):
            decisions.extend(
                decide_with_regions_upper(
                    dets_by_image[image_id], aois_by_image.get(image_id, []), config
                )
            )
    else:
        # regions lead; detections of imageless-region images are never read
        for image_id in sorted_image_ids(aois_by_image):
            decisions.extend(
                decide_with_regions_no_upper(
                    lambda iid=image_id: dets_by_image.get(iid, []),
                    aois_by_image[image_id],
                    config,
                )
            )

    kept = [d.detection for d in decisions if d.kept]
    save_detections(kept, args.out)
    outputs = [args.out]
    if args.decisions_out:
        save_decisions(decisions, args.decisions_out)
        outputs.append(args.decisions_out)
    write_manifest(
        _sibling_manifest(args.out),
        command="filter",
        config=_config_snapshot(args),
        inputs=[args.detections, args.aoi],
        outputs=outputs,
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    eval_images = load_eval_set(args.eval_set)
    dets = load_detections(args.detections)
    result = sweep(dets, eval_images, iou_thr=args.iou, step=args.step)

    prefix = str(args.out_prefix)
    csv_path = prefix + "pr.csv"
    svg_path = prefix + "pr.svg"
    summary_path = prefix + "summary.json"
    runs = [("pipeline", result)]
    extra: dict = {"iou_threshold": args.iou, "step": args.step}
    inputs = [args.detections, args.eval_set]
    outputs = [csv_path, svg_path, summary_path]

    if args.baseline:
        baseline_dets = load_detections(args.baseline)
        baseline_result = sweep(baseline_dets, eval_images, iou_thr=args.iou, step=args.step)
        ratios = filtered_ratios(
            baseline_dets, dets, eval_images, iou_thr=args.iou, base_conf=args.base_conf
        )
        runs.append(("baseline", baseline_result))
        baseline_csv = prefix + "baseline_pr.csv"
        write_pr_csv(baseline_result.points, baseline_csv)
        outputs.append(baseline_csv)
        inputs.append(args.baseline)
        extra["filtered_ratios"] = {
            "tp_filtered": ratios.tp_filtered,
            "fp_filtered": ratios.fp_filtered,
            "tp_defined": ratios.tp_defined,
            "fp_defined": ratios.fp_defined,
            "baseline_tp": ratios.baseline_tp,
            "baseline_fp": ratios.baseline_fp,
            "pipeline_tp": ratios.pipeline_tp,
            "pipeline_fp": ratios.pipeline_fp,
            "base_confidence": ratios.base_confidence,
        }

    write_pr_csv(result.points, csv_path)
    write_summary_json(runs, summary_path, extra)
    write_pr_svg([(label, r.points) for label, r in runs], svg_path)
    write_manifest(
        prefix + "manifest.json",
        command="eval",
        config=_config_snapshot(args),
        inputs=inputs,
        outputs=outputs,
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        explicit = build_parser(suppress_defaults=True).parse_args(argv)
        try:
            _merge_config_file(args, explicit, args.config)
        except (ParseError, ValidationError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
