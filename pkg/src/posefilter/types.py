"""Shared value types and box geometry used across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass

# COCO keypoint order. Every pose producer we ingest emits exactly these
# seventeen points in exactly this order.
KEYPOINT_NAMES = (
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)

NOSE = 0
LEFT_EYE, RIGHT_EYE = 1, 2
LEFT_EAR, RIGHT_EAR = 3, 4
LEFT_SHOULDER, RIGHT_SHOULDER = 5, 6
LEFT_ELBOW, RIGHT_ELBOW = 7, 8
LEFT_WRIST, RIGHT_WRIST = 9, 10
LEFT_HIP, RIGHT_HIP = 11, 12
LEFT_KNEE, RIGHT_KNEE = 13, 14
LEFT_ANKLE, RIGHT_ANKLE = 15, 16

# A keypoint below this confidence is treated as not detected.
DEFAULT_KEYPOINT_CONF_THRESHOLD = 0.3

# COCO image ids are ints; synthetic fixtures sometimes use strings.
ImageId = int | str


def image_id_sort_key(image_id: ImageId) -> tuple[int, int, str]:
    """Total order over mixed-type image ids: all ints first, then strings."""
    if isinstance(image_id, str):
        return (1, 0, image_id)
    return (0, image_id, "")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in COCO (left, top, width, height) pixel coordinates.

    Width and height must be non-negative. The left/top corner may be
    negative: regions centered near an image border are allowed to extend
    past it and are deliberately not clipped.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w < 0 or self.h < 0:
            raise ValueError(f"box size must be non-negative, got w={self.w} h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def max_dim(self) -> float:
        return max(self.w, self.h)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]


def intersection_area(a: BBox, b: BBox) -> float:
    iw = min(a.right, b.right) - max(a.x, b.x)
    ih = min(a.bottom, b.bottom) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes.

    Returns 0.0 for disjoint boxes and also when the union has zero area,
    so degenerate boxes never match anything.
    """
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    # corner arithmetic can overshoot the true area by a few ulps
    return min(1.0, inter / union)


def overlap_fraction(det: BBox, region: BBox) -> float:
    """Fraction of `det`'s own area that lies inside `region`.

    Asymmetric on purpose: a small box fully inside a large region scores
    1.0 regardless of the region's size. A zero-area `det` scores 0.0.
    """
    if det.area <= 0:
        return 0.0
    return min(1.0, intersection_area(det, region) / det.area)


@dataclass(frozen=True)
class Detection:
    """One detector output box with its class and confidence."""

    image_id: ImageId
    class_id: int
    bbox: BBox
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    conf: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.conf <= 1.0:
            raise ValueError(f"keypoint confidence must be in [0, 1], got {self.conf}")


@dataclass(frozen=True)
class PersonPose:
    """One person's seventeen COCO keypoints.

    `bottom_up` records which estimator family produced the pose. Whole-image
    (bottom-up) estimators can misassign limbs across people, so downstream
    measurement code applies extra plausibility ceilings to their output.
    """

    keypoints: tuple[Keypoint, ...]
    bottom_up: bool = False

    def __post_init__(self) -> None:
        if len(self.keypoints) != len(KEYPOINT_NAMES):
            raise ValueError(
                f"expected {len(KEYPOINT_NAMES)} keypoints, got {len(self.keypoints)}"
            )

    def detected(self, index: int, threshold: float = DEFAULT_KEYPOINT_CONF_THRESHOLD) -> bool:
        """True when the keypoint's confidence reaches `threshold`."""
        return self.keypoints[index].conf >= threshold


@dataclass(frozen=True)
class ImageMeta:
    """Identity and pixel dimensions of one image."""

    image_id: ImageId
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"image dimensions must be positive, got {self.width}x{self.height}"
            )

    @property
    def max_dim(self) -> int:
        return max(self.width, self.height)
