"""False-positive suppression of detections against areas of interest.

A detection survives either by confidence alone (the upper-confidence
bypass) or by overlapping some region enough while not dwarfing it. Both
checks against a region must pass for the same region: overlapping region
A while only satisfying the size cap against region B does not keep a
detection.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .aoi import AreaOfInterest
from .types import Detection, overlap_fraction


class FilterReason(Enum):
    """Why a detection was kept or discarded."""

    ABOVE_UPPER = "AboveUpper"
    AOI_MATCH = "AoiMatch"
    NO_AOI_OVERLAP = "NoAoiOverlap"
    TOO_LARGE = "TooLarge"
    NO_AOIS = "NoAois"


KEPT_REASONS = frozenset({FilterReason.ABOVE_UPPER, FilterReason.AOI_MATCH})


@dataclass(frozen=True)
class FilterConfig:
    """Filter thresholds.

    `upper_conf` above 1.0 disables the confidence bypass entirely, since
    no score can reach it; callers use that to force every detection
    through the region test. All comparisons are inclusive.
    """

    upper_conf: float = 0.7
    overlap_frac: float = 0.25
    size_cap_multiplier: float = 2.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.overlap_frac <= 1.0:
            raise ValueError(f"overlap_frac must be in [0, 1], got {self.overlap_frac}")
        if self.size_cap_multiplier <= 0:
            raise ValueError(
                f"size_cap_multiplier must be positive, got {self.size_cap_multiplier}"
            )
        if self.upper_conf < 0:
            raise ValueError(f"upper_conf must be non-negative, got {self.upper_conf}")

    @property
    def bypass_enabled(self) -> bool:
        return self.upper_conf <= 1.0


@dataclass(frozen=True)
class FilterDecision:
    """One detection's verdict with the first reason that settled it."""

    detection: Detection
    kept: bool
    reason: FilterReason

    def __post_init__(self) -> None:
        if self.kept != (self.reason in KEPT_REASONS):
            raise ValueError(f"reason {self.reason} inconsistent with kept={self.kept}")


def decide_detection(
    det: Detection, aois: Sequence[AreaOfInterest], config: FilterConfig
) -> FilterDecision:
    """Verdict for a single detection against one image's regions.

    Order of checks: confidence bypass, then regions in their given order.
    The first region that passes both the overlap and the size test keeps
    the detection. A detection that overlaps at least one region but fits
    none is reported as too large; one that overlaps nothing is reported
    as no-overlap; with zero regions every non-bypassed detection is
    discarded outright.
    """
    if det.score >= config.upper_conf:
        return FilterDecision(det, True, FilterReason.ABOVE_UPPER)
    if not aois:
        return FilterDecision(det, False, FilterReason.NO_AOIS)
    det_max_dim = det.bbox.max_dim
    overlapped_any = False
    for aoi in aois:
        region = aoi.box
        if overlap_fraction(det.bbox, region) >= config.overlap_frac:
            overlapped_any = True
            if det_max_dim <= config.size_cap_multiplier * region.w:
                return FilterDecision(det, True, FilterReason.AOI_MATCH)
    if overlapped_any:
        return FilterDecision(det, False, FilterReason.TOO_LARGE)
    return FilterDecision(det, False, FilterReason.NO_AOI_OVERLAP)


def filter_detections(
    detections: Sequence[Detection],
    aois: Sequence[AreaOfInterest],
    config: FilterConfig,
) -> list[FilterDecision]:
    """Per-detection verdicts for one image, preserving input order.

    Detections are judged independently; removing one never changes
    another's verdict. All inputs must belong to one image.
    """
    ids = {d.image_id for d in detections} | {a.image_id for a in aois}
    if len(ids) > 1:
        raise ValueError(f"filter inputs mix image ids: {sorted(map(str, ids))}")
    return [decide_detection(det, aois, config) for det in detections]


def kept_detections(decisions: Sequence[FilterDecision]) -> list[Detection]:
    """The surviving detections, in decision order."""
    return [d.detection for d in decisions if d.kept]


def all_above_upper(detections: Sequence[Detection], config: FilterConfig) -> bool:
    """True when every detection clears the bypass (vacuously true when empty)."""
    return all(det.score >= config.upper_conf for det in detections)
