"""Pixels-per-centimeter estimation from a single person's pose.

The estimate anchors on body measurements that vary little between adults,
tried in a fixed order: head width (ear to ear), then the longest visible
arm segment, then shoulder width, and finally an image-size default when
nothing usable was detected. Arm segments use deliberately generous
reference lengths so that foreshortening inflates rather than shrinks the
derived regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .types import (
    DEFAULT_KEYPOINT_CONF_THRESHOLD,
    LEFT_EAR,
    LEFT_ELBOW,
    LEFT_SHOULDER,
    LEFT_WRIST,
    RIGHT_EAR,
    RIGHT_ELBOW,
    RIGHT_SHOULDER,
    RIGHT_WRIST,
    ImageMeta,
    Keypoint,
    PersonPose,
)

# Measurements shorter than this many pixels are treated as keypoint noise
# (coincident or nearly coincident points) and skipped.
MIN_MEASUREMENT_PX = 1.0


@dataclass(frozen=True)
class AnthropometricConstants:
    """Reference body measurements in centimeters.

    `default_span_cm` is the real-world length assigned to a quarter of the
    image's larger dimension when no body measurement is usable.
    `aoi_halfwidth_cm` is the physical half-width of the square region kept
    around a hand.
    """

    head_cm: float = 19.8
    forearm_cm: float = 26.0
    upper_arm_cm: float = 32.0
    shoulder_cm: float = 41.0
    default_span_cm: float = 35.6
    aoi_halfwidth_cm: float = 17.8

    def __post_init__(self) -> None:
        for name in (
            "head_cm",
            "forearm_cm",
            "upper_arm_cm",
            "shoulder_cm",
            "default_span_cm",
            "aoi_halfwidth_cm",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


DEFAULT_CONSTANTS = AnthropometricConstants()


class ScaleSource(Enum):
    """Which measurement produced a scaling factor."""

    HEAD = "Head"
    FOREARM = "Forearm"
    UPPER_ARM = "UpperArm"
    SHOULDER = "Shoulder"
    DEFAULT = "Default"


@dataclass(frozen=True)
class ScalingFactor:
    """Pixels per centimeter for one person, with its provenance."""

    px_per_cm: float
    source: ScaleSource

    def __post_init__(self) -> None:
        if self.px_per_cm <= 0:
            raise ValueError(f"px_per_cm must be positive, got {self.px_per_cm}")


def _dist(a: Keypoint, b: Keypoint) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def head_width_px(
    pose: PersonPose, threshold: float = DEFAULT_KEYPOINT_CONF_THRESHOLD
) -> float | None:
    """Ear-to-ear distance in pixels, or None when either ear is undetected."""
    if not (pose.detected(LEFT_EAR, threshold) and pose.detected(RIGHT_EAR, threshold)):
        return None
    return _dist(pose.keypoints[LEFT_EAR], pose.keypoints[RIGHT_EAR])


def best_arm_segment(
    pose: PersonPose, threshold: float = DEFAULT_KEYPOINT_CONF_THRESHOLD
) -> tuple[float, ScaleSource] | None:
    """Longest fully detected arm segment.

    Considers both forearms (elbow to wrist) and both upper arms (shoulder
    to elbow); a segment counts only when both of its endpoints are
    detected. Ties go to the earlier entry in forearm-before-upper-arm
    order. Returns None when no segment is fully detected.
    """
    candidates = (
        (LEFT_ELBOW, LEFT_WRIST, ScaleSource.FOREARM),
        (RIGHT_ELBOW, RIGHT_WRIST, ScaleSource.FOREARM),
        (LEFT_SHOULDER, LEFT_ELBOW, ScaleSource.UPPER_ARM),
        (RIGHT_SHOULDER, RIGHT_ELBOW, ScaleSource.UPPER_ARM),
    )
    best: tuple[float, ScaleSource] | None = None
    for i, j, kind in candidates:
        if not (pose.detected(i, threshold) and pose.detected(j, threshold)):
            continue
        length = _dist(pose.keypoints[i], pose.keypoints[j])
        if best is None or length > best[0]:
            best = (length, kind)
    return best


def shoulder_width_px(
    pose: PersonPose, threshold: float = DEFAULT_KEYPOINT_CONF_THRESHOLD
) -> float | None:
    """Shoulder-to-shoulder distance in pixels.

    None when either shoulder is undetected, and also when the points are
    nearly coincident (< MIN_MEASUREMENT_PX): unlike head width, which
    reports the raw distance and leaves the degenerate check to the chain,
    a degenerate shoulder pair is absent at this level.
    """
    if not (
        pose.detected(LEFT_SHOULDER, threshold) and pose.detected(RIGHT_SHOULDER, threshold)
    ):
        return None
    width = _dist(pose.keypoints[LEFT_SHOULDER], pose.keypoints[RIGHT_SHOULDER])
    if width < MIN_MEASUREMENT_PX:
        return None
    return width


def scaling_factor(
    pose: PersonPose,
    meta: ImageMeta,
    consts: AnthropometricConstants = DEFAULT_CONSTANTS,
    keypoint_conf_threshold: float = DEFAULT_KEYPOINT_CONF_THRESHOLD,
) -> ScalingFactor:
    """Estimate pixels per centimeter for one person in one image.

    Fallback order: head width, longest arm segment, shoulder width, image
    default. A measurement is skipped when its endpoints are undetected,
    when it is shorter than MIN_MEASUREMENT_PX, or, for bottom-up poses
    only, when it exceeds a plausibility ceiling (a quarter of the larger
    image dimension for head and arm, half for shoulders). A skipped
    measurement falls through to the next rung; it never aborts the chain.
    The default rung always succeeds, so the result is always positive.
    """
    max_dim = float(meta.max_dim)

    def usable(measure_px: float | None, ceiling_px: float) -> bool:
        if measure_px is None or measure_px < MIN_MEASUREMENT_PX:
            return False
        if pose.bottom_up and measure_px > ceiling_px:
            return False
        return True

    head = head_width_px(pose, keypoint_conf_threshold)
    if usable(head, max_dim / 4):
        return ScalingFactor(head / consts.head_cm, ScaleSource.HEAD)

    arm = best_arm_segment(pose, keypoint_conf_threshold)
    if arm is not None and usable(arm[0], max_dim / 4):
        length, kind = arm
        ref_cm = consts.forearm_cm if kind is ScaleSource.FOREARM else consts.upper_arm_cm
        return ScalingFactor(length / ref_cm, kind)

    shoulder = shoulder_width_px(pose, keypoint_conf_threshold)
    if usable(shoulder, max_dim / 2):
        return ScalingFactor(shoulder / consts.shoulder_cm, ScaleSource.SHOULDER)

    return ScalingFactor((max_dim / 4) / consts.default_span_cm, ScaleSource.DEFAULT)
