"""Square areas of interest centered on hands.

Each detected wrist yields one region; when a wrist is missing its elbow
stands in, since a hand is rarely far from the elbow in image space. The
region's size comes from the person's pixels-per-centimeter scaling factor
so that it covers a fixed physical reach around the hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .scaling import DEFAULT_CONSTANTS, AnthropometricConstants, scaling_factor
from .types import (
    DEFAULT_KEYPOINT_CONF_THRESHOLD,
    LEFT_ELBOW,
    LEFT_WRIST,
    RIGHT_ELBOW,
    RIGHT_WRIST,
    BBox,
    ImageId,
    ImageMeta,
    Keypoint,
    PersonPose,
)


class CenterSource(Enum):
    """Which keypoint a region is centered on."""

    WRIST = "Wrist"
    ELBOW = "Elbow"


@dataclass(frozen=True)
class AreaOfInterest:
    """Square region around one hand of one person.

    The box is not clipped to the image; crossing the border is expected
    for hands near the edge.
    """

    image_id: ImageId
    cx: float
    cy: float
    half_extent: float
    person_index: int
    center_source: CenterSource

    def __post_init__(self) -> None:
        if self.half_extent <= 0:
            raise ValueError(f"half_extent must be positive, got {self.half_extent}")
        if self.person_index < 0:
            raise ValueError(f"person_index must be non-negative, got {self.person_index}")

    @property
    def box(self) -> BBox:
        side = 2.0 * self.half_extent
        return BBox(self.cx - self.half_extent, self.cy - self.half_extent, side, side)


def center_points(
    pose: PersonPose, threshold: float = DEFAULT_KEYPOINT_CONF_THRESHOLD
) -> list[tuple[Keypoint, CenterSource]]:
    """Centers for one person's regions: up to one per arm.

    Per arm the wrist wins when detected, the elbow substitutes when only
    it is detected, and a fully undetected arm contributes nothing. Left
    arm first.
    """
    out: list[tuple[Keypoint, CenterSource]] = []
    for wrist_i, elbow_i in ((LEFT_WRIST, LEFT_ELBOW), (RIGHT_WRIST, RIGHT_ELBOW)):
        if pose.detected(wrist_i, threshold):
            out.append((pose.keypoints[wrist_i], CenterSource.WRIST))
        elif pose.detected(elbow_i, threshold):
            out.append((pose.keypoints[elbow_i], CenterSource.ELBOW))
    return out


def generate_aois(
    poses: Sequence[PersonPose] | Iterable[PersonPose],
    meta: ImageMeta,
    consts: AnthropometricConstants = DEFAULT_CONSTANTS,
    keypoint_conf_threshold: float = DEFAULT_KEYPOINT_CONF_THRESHOLD,
) -> list[AreaOfInterest]:
    """All regions for one image, in person order then left-right arm order.

    Zero poses produce zero regions. Each region is a square of
    half-width `consts.aoi_halfwidth_cm` centimeters at that person's
    scale; the scaling factor's default rung guarantees a positive size
    even for poses with no usable measurements.
    """
    regions: list[AreaOfInterest] = []
    for person_index, pose in enumerate(poses):
        factor = scaling_factor(pose, meta, consts, keypoint_conf_threshold)
        half_extent = consts.aoi_halfwidth_cm * factor.px_per_cm
        for keypoint, source in center_points(pose, keypoint_conf_threshold):
            regions.append(
                AreaOfInterest(
                    image_id=meta.image_id,
                    cx=keypoint.x,
                    cy=keypoint.y,
                    half_extent=half_extent,
                    person_index=person_index,
                    center_source=source,
                )
            )
    return regions
