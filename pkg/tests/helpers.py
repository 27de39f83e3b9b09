"""Shared builders and independent reference implementations.

The oracle_* functions restate the contract of the code under test in a
deliberately different shape (straight-line loops, exhaustive search) so
the suite never checks the library against itself.
"""
from __future__ import annotations

import random

from posefilter.aoi import AreaOfInterest, CenterSource
from posefilter.filtering import FilterConfig
from posefilter.interchange import Annotation
from posefilter.types import BBox, Detection, Keypoint, PersonPose


def make_pose(
    points: dict[int, tuple] | None = None,
    bottom_up: bool = False,
    conf: float = 0.9,
) -> PersonPose:
    """Build a 17-keypoint pose with the given keypoints detected.

    `points` maps keypoint index to (x, y) or (x, y, conf). Every index
    not listed gets confidence 0.
    """
    kps = [Keypoint(0.0, 0.0, 0.0) for _ in range(17)]
    for idx, value in (points or {}).items():
        if len(value) == 2:
            x, y = value
            c = conf
        else:
            x, y, c = value
        kps[idx] = Keypoint(float(x), float(y), float(c))
    return PersonPose(keypoints=tuple(kps), bottom_up=bottom_up)


def det(
    x: float,
    y: float,
    w: float,
    h: float,
    score: float = 0.5,
    image_id=1,
    class_id: int = 1,
) -> Detection:
    return Detection(image_id=image_id, class_id=class_id, bbox=BBox(x, y, w, h), score=score)


def ann(annotation_id: int, x: float, y: float, w: float, h: float, image_id=1, class_id: int = 1) -> Annotation:
    return Annotation(annotation_id=annotation_id, image_id=image_id, class_id=class_id, bbox=BBox(x, y, w, h))


def aoi_at(cx: float, cy: float, half: float, image_id=1, person_index: int = 0,
           source: CenterSource = CenterSource.WRIST) -> AreaOfInterest:
    return AreaOfInterest(image_id=image_id, cx=cx, cy=cy, half_extent=half,
                          person_index=person_index, center_source=source)


def rand_box(rng: random.Random, lo: float = -50.0, hi: float = 400.0, max_side: float = 200.0) -> BBox:
    return BBox(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(0.0, max_side), rng.uniform(0.0, max_side))


def oracle_inter(a: BBox, b: BBox) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def oracle_iou(a: BBox, b: BBox) -> float:
    inter = oracle_inter(a, b)
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def oracle_decide(d: Detection, aois: list[AreaOfInterest], cfg: FilterConfig) -> tuple[bool, str]:
    """Straight-line restatement of the keep rule.

    A detection survives when its score clears the upper threshold (only
    while that threshold is usable, i.e. <= 1), or when some single region
    both receives at least `overlap_frac` of the detection's area and has
    a side no smaller than 1 / size_cap_multiplier of the detection's
    larger side. Reported reason mirrors the decision log vocabulary.
    """
    if cfg.upper_conf <= 1.0 and d.score >= cfg.upper_conf:
        return True, "AboveUpper"
    if not aois:
        return False, "NoAois"
    overlapped = False
    for region in aois:
        box = region.box
        area = d.bbox.w * d.bbox.h
        frac = oracle_inter(d.bbox, box) / area if area > 0.0 else 0.0
        if frac >= cfg.overlap_frac:
            overlapped = True
            if max(d.bbox.w, d.bbox.h) <= cfg.size_cap_multiplier * box.w:
                return True, "AoiMatch"
    return False, ("TooLarge" if overlapped else "NoAoiOverlap")


def sparse_instance(rng: random.Random, image_id=1):
    """Far-separated annotations; each detection jitters one annotation or
    lands in empty space, so no detection ever has two candidates."""
    handheld = []
    other = []
    centers = []
    for i in range(rng.randrange(0, 4)):
        x = 200.0 * i
        handheld.append(ann(i, x, 0.0, 20.0, 20.0, image_id=image_id, class_id=rng.randrange(1, 3)))
        centers.append((x, 0.0, handheld[-1]))
    for i in range(rng.randrange(0, 3)):
        x = 200.0 * i
        other.append(ann(100 + i, x, 500.0, 20.0, 20.0, image_id=image_id, class_id=rng.randrange(1, 3)))
        centers.append((x, 500.0, other[-1]))
    dets = []
    for _ in range(rng.randrange(0, 6)):
        if centers and rng.random() < 0.7:
            x, y, src = rng.choice(centers)
            dx, dy = rng.uniform(-3, 3), rng.uniform(-3, 3)
            cls = src.class_id if rng.random() < 0.8 else 99
            dets.append(det(x + dx, y + dy, 20.0, 20.0, score=rng.random(),
                            image_id=image_id, class_id=cls))
        else:
            dets.append(det(rng.uniform(2000, 3000), rng.uniform(0, 500), 20.0, 20.0,
                            score=rng.random(), image_id=image_id, class_id=rng.randrange(1, 3)))
    return handheld, other, dets


def oracle_match_counts(
    dets: list[Detection],
    handheld: list[Annotation],
    other: list[Annotation],
    iou_thr: float = 0.5,
) -> tuple[int, int, int, int]:
    """Exhaustive one-to-one assignment maximising (tp, ignored) lexicographically.

    Feasible only for small instances. Each detection may claim at most one
    unclaimed same-class annotation with IoU >= iou_thr; claims on the
    handheld list count as tp, claims on the other list as ignored, and
    everything left over is fp. Returns (tp, fp, fn, ignored).
    """
    n = len(dets)
    best = (-1, -1)

    def rec(i: int, used_h: frozenset, used_o: frozenset, tp: int, ig: int) -> None:
        nonlocal best
        if i == n:
            if (tp, ig) > best:
                best = (tp, ig)
            return
        d = dets[i]
        rec(i + 1, used_h, used_o, tp, ig)
        for j, a in enumerate(handheld):
            if j not in used_h and a.class_id == d.class_id and oracle_iou(d.bbox, a.bbox) >= iou_thr:
                rec(i + 1, used_h | {j}, used_o, tp + 1, ig)
        for j, a in enumerate(other):
            if j not in used_o and a.class_id == d.class_id and oracle_iou(d.bbox, a.bbox) >= iou_thr:
                rec(i + 1, used_h, used_o | {j}, tp, ig + 1)

    rec(0, frozenset(), frozenset(), 0, 0)
    tp, ig = best
    return tp, n - tp - ig, len(handheld) - tp, ig
