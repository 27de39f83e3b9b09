"""Execution modes: ordering, short-circuits, and backend selection.

Two modes exist, chosen by the upper confidence threshold. With the
bypass enabled (upper_conf ≤ 1) detections come first and pose-derived
regions are only computed when some detection falls below the threshold.
With the bypass disabled (upper_conf > 1) the order flips: regions are
computed first, and when an image has none its detections are never even
requested. The detection input of no-upper mode is therefore a callable,
so skipping is observable and expensive detector calls are avoidable.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

from .aoi import AreaOfInterest, generate_aois
from .filtering import (
    FilterConfig,
    FilterDecision,
    FilterReason,
    all_above_upper,
    filter_detections,
    kept_detections,
)
from .interchange import (
    ValidationError,
    group_by_image,
    load_detections,
    load_image_metas,
    load_poses,
    save_decisions,
    save_detections,
    sorted_image_ids,
)
from .scaling import DEFAULT_CONSTANTS, AnthropometricConstants
from .types import DEFAULT_KEYPOINT_CONF_THRESHOLD, Detection, ImageMeta, PersonPose

logger = logging.getLogger(__name__)

DEFAULT_POSE_PERSON_THRESHOLD = 3


class BackendChoice(Enum):
    """Which pose estimator family to run for an image."""

    TOP_DOWN = "TopDown"
    BOTTOM_UP = "BottomUp"


@dataclass(frozen=True)
class PipelineConfig:
    """Full pipeline configuration.

    `deblur_enabled` is recorded for provenance and handed to the
    inference adapter; nothing in this package deblurs. A negative
    `pose_person_threshold` means the per-person estimator is always used.
    """

    filter: FilterConfig = field(default_factory=FilterConfig)
    pose_person_threshold: int = DEFAULT_POSE_PERSON_THRESHOLD
    deblur_enabled: bool = True
    keypoint_conf_threshold: float = DEFAULT_KEYPOINT_CONF_THRESHOLD
    consts: AnthropometricConstants = DEFAULT_CONSTANTS

    def __post_init__(self) -> None:
        if not 0.0 <= self.keypoint_conf_threshold <= 1.0:
            raise ValueError(
                f"keypoint_conf_threshold must be in [0, 1], got {self.keypoint_conf_threshold}"
            )


def select_backend(person_count: int, threshold: int) -> BackendChoice:
    """Pose backend for an image with `person_count` detected humans.

    Negative thresholds pin the choice to the per-person (top-down)
    estimator regardless of crowd size; otherwise the whole-image
    (bottom-up) estimator takes over once the count exceeds the threshold,
    keeping runtime bounded in crowded scenes.
    """
    if person_count < 0:
        raise ValueError(f"person_count must be non-negative, got {person_count}")
    if threshold < 0:
        return BackendChoice.TOP_DOWN
    return BackendChoice.TOP_DOWN if person_count <= threshold else BackendChoice.BOTTOM_UP


# ---------------------------------------------------------------------------
# Per-image decision helpers shared by the library entry points and the CLI


def decide_with_regions_upper(
    dets: Sequence[Detection],
    aois: Sequence[AreaOfInterest],
    config: FilterConfig,
) -> list[FilterDecision]:
    """Upper-mode verdicts given precomputed regions.

    When every detection clears the bypass the region list is ignored
    entirely (`aois` may even be for the wrong image; it is not touched).
    """
    if not config.bypass_enabled:
        raise ValueError("upper mode requires upper_conf <= 1")
    if all_above_upper(dets, config):
        return [FilterDecision(d, True, FilterReason.ABOVE_UPPER) for d in dets]
    return filter_detections(dets, aois, config)


def decide_with_regions_no_upper(
    dets_provider: Callable[[], Sequence[Detection]],
    aois: Sequence[AreaOfInterest],
    config: FilterConfig,
) -> list[FilterDecision]:
    """No-upper-mode verdicts given precomputed regions.

    With zero regions the provider is never invoked and the image yields
    zero detections; the caller can count provider calls to verify.
    """
    if config.bypass_enabled:
        raise ValueError("no-upper mode requires upper_conf > 1")
    if not aois:
        return []
    return filter_detections(list(dets_provider()), aois, config)


def _regions_for(
    poses: Sequence[PersonPose], meta: ImageMeta | None, config: PipelineConfig
) -> list[AreaOfInterest]:
    if not poses:
        return []
    if meta is None:
        raise ValidationError("image metadata required to derive regions from poses")
    return generate_aois(poses, meta, config.consts, config.keypoint_conf_threshold)


def run_image_upper_mode(
    dets: Sequence[Detection],
    poses: Sequence[PersonPose],
    meta: ImageMeta | None,
    config: PipelineConfig,
) -> list[Detection]:
    """One image, bypass enabled: detections first, regions only if needed.

    If every score clears the threshold the input comes back unchanged and
    no region is ever generated. `meta` may be None only when it will not
    be consulted (short-circuit taken or no poses).
    """
    if not config.filter.bypass_enabled:
        raise ValueError("upper mode requires upper_conf <= 1")
    if all_above_upper(dets, config.filter):
        return list(dets)
    aois = _regions_for(poses, meta, config)
    return kept_detections(filter_detections(dets, aois, config.filter))


def run_image_no_upper_mode(
    dets_provider: Callable[[], Sequence[Detection]],
    poses: Sequence[PersonPose],
    meta: ImageMeta | None,
    config: PipelineConfig,
) -> list[Detection]:
    """One image, bypass disabled: regions first, detections on demand.

    Zero regions (no poses, or no usable arm keypoints) produce zero
    detections without ever invoking `dets_provider`.
    """
    if config.filter.bypass_enabled:
        raise ValueError("no-upper mode requires upper_conf > 1")
    aois = _regions_for(poses, meta, config)
    return kept_detections(decide_with_regions_no_upper(dets_provider, aois, config.filter))


# ---------------------------------------------------------------------------
# Whole-dataset run over interchange files


@dataclass
class DatasetRunResult:
    """Outcome of a file-level run: survivors, audit trail, warnings."""

    kept: list[Detection]
    decisions: list[FilterDecision]
    warnings: list[str]


def run_dataset(
    dets_path: str | os.PathLike,
    poses_path: str | os.PathLike,
    meta_path: str | os.PathLike,
    config: PipelineConfig,
    out_path: str | os.PathLike | None = None,
    decisions_path: str | os.PathLike | None = None,
) -> DatasetRunResult:
    """Apply the configured mode image by image across whole files.

    Images are processed in canonical id order, so outputs are
    deterministic regardless of input file ordering. An image with
    detections but no pose entry is treated as having zero poses and a
    warning is recorded; in no-upper mode that means its detections are
    dropped without being consulted, mirroring the per-image contract.
    """
    dets_by_image = group_by_image(load_detections(dets_path))
    poses_by_image = load_poses(poses_path).by_image()
    metas_by_id = {m.image_id: m for m in load_image_metas(meta_path)}

    kept: list[Detection] = []
    decisions: list[FilterDecision] = []
    warnings: list[str] = []

    def regions_for_image(image_id) -> list[AreaOfInterest]:
        entry = poses_by_image.get(image_id)
        if entry is None or not entry.poses:
            return []
        meta = metas_by_id.get(image_id)
        if meta is None:
            raise ValidationError(f"image {image_id}: poses present but no image metadata")
        return generate_aois(entry.poses, meta, config.consts, config.keypoint_conf_threshold)

    def warn_missing_poses(image_id) -> None:
        message = f"image {image_id}: no pose entry; treating as zero poses"
        warnings.append(message)
        logger.warning(message)

    for image_id in sorted_image_ids(set(dets_by_image) | set(poses_by_image)):
        dets = dets_by_image.get(image_id, [])
        if config.filter.bypass_enabled:
            if not dets:
                continue
            if all_above_upper(dets, config.filter):
                image_decisions = decide_with_regions_upper(dets, [], config.filter)
            else:
                if image_id not in poses_by_image:
                    warn_missing_poses(image_id)
                image_decisions = decide_with_regions_upper(
                    dets, regions_for_image(image_id), config.filter
                )
        else:
            if dets and image_id not in poses_by_image:
                warn_missing_poses(image_id)
            image_decisions = decide_with_regions_no_upper(
                lambda: dets, regions_for_image(image_id), config.filter
            )
        decisions.extend(image_decisions)
        kept.extend(d.detection for d in image_decisions if d.kept)

    if out_path is not None:
        save_detections(kept, out_path)
    if decisions_path is not None:
        save_decisions(decisions, decisions_path)
    return DatasetRunResult(kept=kept, decisions=decisions, warnings=warnings)
