"""Handheld-aware detection evaluation.

Matching runs in two tiers: detections first claim handheld annotations
(true positives), then non-handheld annotations (ignored, counting
neither for nor against), and only what claims nothing is a false
positive. Annotations and detections match one-to-one, class-aware, at a
fixed IoU threshold. Curves come from a confidence sweep pooled over all
images (micro-averaged).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .interchange import Annotation, EvalImage, ValidationError, group_by_image
from .types import Detection, ImageId, iou

OUTCOME_TP = "tp"
OUTCOME_FP = "fp"
OUTCOME_IGNORED = "ignored"


@dataclass(frozen=True)
class MatchResult:
    """Counts plus a per-detection outcome label in input order."""

    tp: int
    fp: int
    fn: int
    ignored: int
    outcomes: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.tp + self.fp + self.ignored != len(self.outcomes):
            raise ValueError("outcome labels inconsistent with counts")


def _claim_best(
    det: Detection, anns: Sequence[Annotation], used: list[bool], iou_thr: float
) -> int | None:
    """Index of the unclaimed same-class annotation with maximal IoU >= thr."""
    best_idx: int | None = None
    best_iou = 0.0
    for idx, ann in enumerate(anns):
        if used[idx] or ann.class_id != det.class_id:
            continue
        value = iou(det.bbox, ann.bbox)
        if value >= iou_thr and value > best_iou:
            best_iou = value
            best_idx = idx
    return best_idx


def match_image(
    dets: Sequence[Detection],
    handheld_anns: Sequence[Annotation],
    other_anns: Sequence[Annotation],
    iou_thr: float = 0.5,
) -> MatchResult:
    """Greedy two-tier matching for a single image.

    Detections are processed in descending score order (ties keep input
    order). Each one greedily claims the best still-unclaimed handheld
    annotation of its class; failing that, the best other annotation of
    its class; failing both it is a false positive. Handheld annotations
    left unclaimed are false negatives.

    Greedy claiming by score order is not globally optimal in general: a
    high-scoring detection can claim an annotation that a later detection
    needed, even when a different assignment would match both.
    """
    if not 0.0 < iou_thr <= 1.0:
        raise ValueError(f"iou_thr must be in (0, 1], got {iou_thr}")
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    handheld_used = [False] * len(handheld_anns)
    other_used = [False] * len(other_anns)
    outcomes: list[str] = [""] * len(dets)
    for i in order:
        det = dets[i]
        claimed = _claim_best(det, handheld_anns, handheld_used, iou_thr)
        if claimed is not None:
            handheld_used[claimed] = True
            outcomes[i] = OUTCOME_TP
            continue
        claimed = _claim_best(det, other_anns, other_used, iou_thr)
        if claimed is not None:
            other_used[claimed] = True
            outcomes[i] = OUTCOME_IGNORED
            continue
        outcomes[i] = OUTCOME_FP
    tp = sum(1 for o in outcomes if o == OUTCOME_TP)
    ignored = sum(1 for o in outcomes if o == OUTCOME_IGNORED)
    return MatchResult(
        tp=tp,
        fp=len(dets) - tp - ignored,
        fn=len(handheld_anns) - tp,
        ignored=ignored,
        outcomes=tuple(outcomes),
    )


@dataclass(frozen=True)
class PRPoint:
    """One point of the confidence sweep, with its pooled counts."""

    confidence: float
    tp: int
    fp: int
    fn: int
    ignored: int
    precision: float
    recall: float


@dataclass(frozen=True)
class SweepResult:
    points: tuple[PRPoint, ...]
    ap: float


def _precision(tp: int, fp: int) -> float:
    # no detections kept at this threshold: nothing was wrong, so 1
    return tp / (tp + fp) if tp + fp > 0 else 1.0


def _recall(tp: int, fn: int) -> float:
    # no handheld annotations at all: nothing to find, recall pinned at 0
    return tp / (tp + fn) if tp + fn > 0 else 0.0


def _validate_det_images(
    dets_by_image: Mapping[ImageId, Sequence[Detection]], eval_images: Sequence[EvalImage]
) -> None:
    known = {im.image_id for im in eval_images}
    unknown = set(dets_by_image) - known
    if unknown:
        raise ValidationError(
            f"detections reference images outside the evaluation set: {sorted(map(str, unknown))}"
        )


def pooled_counts_at(
    dets_by_image: Mapping[ImageId, Sequence[Detection]],
    eval_images: Sequence[EvalImage],
    iou_thr: float,
    confidence: float,
) -> tuple[int, int, int, int]:
    """Pooled (tp, fp, fn, ignored) keeping detections with score >= confidence."""
    tp = fp = fn = ignored = 0
    for image in eval_images:
        dets = [d for d in dets_by_image.get(image.image_id, []) if d.score >= confidence]
        result = match_image(dets, image.handheld, image.other, iou_thr)
        tp += result.tp
        fp += result.fp
        fn += result.fn
        ignored += result.ignored
    return tp, fp, fn, ignored


def sweep(
    dets: Sequence[Detection],
    eval_images: Sequence[EvalImage],
    iou_thr: float = 0.5,
    step: float = 0.05,
) -> SweepResult:
    """Evaluate at every confidence cutoff from 0 to 1 inclusive.

    `step` must divide 1 evenly; the default yields 21 points. Detections
    for images absent from the evaluation set are an error, not silently
    dropped.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    n_steps = round(1.0 / step)
    if abs(n_steps * step - 1.0) > 1e-9:
        raise ValueError(f"step must divide 1 evenly, got {step}")
    dets_by_image = group_by_image(dets)
    _validate_det_images(dets_by_image, eval_images)
    points = []
    for i in range(n_steps + 1):
        confidence = round(i * step, 12)
        tp, fp, fn, ignored = pooled_counts_at(dets_by_image, eval_images, iou_thr, confidence)
        points.append(
            PRPoint(
                confidence=confidence,
                tp=tp,
                fp=fp,
                fn=fn,
                ignored=ignored,
                precision=_precision(tp, fp),
                recall=_recall(tp, fn),
            )
        )
    return SweepResult(points=tuple(points), ap=average_precision(points))


def average_precision(points: Sequence[PRPoint]) -> float:
    """Area under the monotone precision envelope of the PR points.

    Points are sorted by recall; each precision is replaced by the maximum
    precision at any recall at least as large; the area is summed over
    recall increments starting from an implicit recall of 0.
    """
    if not points:
        raise ValueError("average_precision requires at least one point")
    pts = sorted(points, key=lambda p: p.recall)
    envelope: list[float] = []
    best = 0.0
    for point in reversed(pts):
        best = max(best, point.precision)
        envelope.append(best)
    envelope.reverse()
    ap = 0.0
    prev_recall = 0.0
    for point, env in zip(pts, envelope):
        ap += (point.recall - prev_recall) * env
        prev_recall = point.recall
    return ap


@dataclass(frozen=True)
class FilteredRatios:
    """How much of the baseline's TPs and FPs the pipeline removed.

    Ratios are fractions (0.17 means 17%). A zero baseline count makes the
    corresponding ratio 0 with its `*_defined` flag cleared.
    """

    tp_filtered: float
    fp_filtered: float
    tp_defined: bool
    fp_defined: bool
    baseline_tp: int
    baseline_fp: int
    pipeline_tp: int
    pipeline_fp: int
    base_confidence: float


def filtered_ratios(
    baseline_dets: Sequence[Detection],
    pipeline_dets: Sequence[Detection],
    eval_images: Sequence[EvalImage],
    iou_thr: float = 0.5,
    base_conf: float = 0.001,
) -> FilteredRatios:
    """Compare raw detector output against the filtered pipeline output.

    Both runs are matched at the base confidence. The pipeline never adds
    detections, so its images must be a subset of the baseline's, and both
    must lie inside the evaluation set.
    """
    baseline_by_image = group_by_image(baseline_dets)
    pipeline_by_image = group_by_image(pipeline_dets)
    _validate_det_images(baseline_by_image, eval_images)
    extra = set(pipeline_by_image) - set(baseline_by_image)
    if extra:
        raise ValidationError(
            f"pipeline detections on images absent from the baseline: {sorted(map(str, extra))}"
        )
    base_tp, base_fp, _, _ = pooled_counts_at(baseline_by_image, eval_images, iou_thr, base_conf)
    pipe_tp, pipe_fp, _, _ = pooled_counts_at(pipeline_by_image, eval_images, iou_thr, base_conf)
    tp_defined = base_tp > 0
    fp_defined = base_fp > 0
    return FilteredRatios(
        tp_filtered=(base_tp - pipe_tp) / base_tp if tp_defined else 0.0,
        fp_filtered=(base_fp - pipe_fp) / base_fp if fp_defined else 0.0,
        tp_defined=tp_defined,
        fp_defined=fp_defined,
        baseline_tp=base_tp,
        baseline_fp=base_fp,
        pipeline_tp=pipe_tp,
        pipeline_fp=pipe_fp,
        base_confidence=base_conf,
    )
