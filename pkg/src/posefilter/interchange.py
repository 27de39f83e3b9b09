"""On-disk formats: COCO annotations, detections, poses, flags, regions.

Every file is UTF-8 JSON. Numbers round-trip bit-exactly because the
serializer emits shortest-round-trip decimal floats. Writes are atomic
(temp file in the target directory, then rename) so a crashed run never
leaves a half-written file behind.

Loaders validate eagerly and never silently drop records: the returned
count always equals the file's record count, or an error is raised.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, TypeVar

from .aoi import AreaOfInterest, CenterSource
from .types import (
    BBox,
    Detection,
    ImageId,
    ImageMeta,
    Keypoint,
    PersonPose,
    image_id_sort_key,
)


class ParseError(ValueError):
    """The file is not well-formed JSON."""


class ValidationError(ValueError):
    """The file is valid JSON but violates the format contract."""


# ---------------------------------------------------------------------------
# Low-level JSON helpers


def read_json(path: str | os.PathLike) -> Any:
    """Parse a JSON file, reporting the byte offset of any syntax error."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(
            f"{path}: malformed JSON at byte {byte_offset} "
            f"(line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    """Write a file so the target never holds partial content."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def write_bytes_atomic(path: str | os.PathLike, data: bytes) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def write_json_atomic(path: str | os.PathLike, payload: Any, *, indent: int | None = None) -> None:
    text = json.dumps(payload, indent=indent, allow_nan=False)
    write_text_atomic(path, text + "\n")


# ---------------------------------------------------------------------------
# Field extraction with contextual error messages


def _require(record: Mapping, key: str, ctx: str) -> Any:
    if key not in record:
        raise ValidationError(f"{ctx}: missing required key '{key}'")
    return record[key]


def _as_number(value: Any, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{ctx}: expected a number, got {value!r}")
    return float(value)


def _as_int(value: Any, ctx: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{ctx}: expected an integer, got {value!r}")
    return value


def _as_image_id(value: Any, ctx: str) -> ImageId:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ValidationError(f"{ctx}: image_id must be an integer or string, got {value!r}")
    return value


def _as_bbox(value: Any, ctx: str) -> BBox:
    if not isinstance(value, list) or len(value) != 4:
        raise ValidationError(f"{ctx}: bbox must be an array of 4 numbers, got {value!r}")
    x, y, w, h = (_as_number(v, f"{ctx}: bbox[{i}]") for i, v in enumerate(value))
    try:
        return BBox(x, y, w, h)
    except ValueError as exc:
        raise ValidationError(f"{ctx}: {exc}") from exc


def _as_record(value: Any, ctx: str) -> Mapping:
    if not isinstance(value, dict):
        raise ValidationError(f"{ctx}: expected an object, got {type(value).__name__}")
    return value


def _as_array(value: Any, ctx: str) -> list:
    if not isinstance(value, list):
        raise ValidationError(f"{ctx}: expected an array, got {type(value).__name__}")
    return value


# ---------------------------------------------------------------------------
# COCO annotation datasets


@dataclass(frozen=True)
class Annotation:
    """One COCO object annotation (geometry only; masks stay in `raw`)."""

    annotation_id: int
    image_id: ImageId
    class_id: int
    bbox: BBox


@dataclass(frozen=True)
class Category:
    class_id: int
    name: str


@dataclass
class CocoDataset:
    """A parsed COCO annotation file.

    `raw` keeps the source document untouched (including segmentation,
    iscrowd, licenses and any vendor keys) so subset files can be written
    without losing fields this package does not model.
    """

    images: list[ImageMeta]
    annotations: list[Annotation]
    categories: list[Category]
    raw: dict = field(repr=False)

    @cached_property
    def images_by_id(self) -> dict[ImageId, ImageMeta]:
        return {m.image_id: m for m in self.images}

    @cached_property
    def annotations_by_image(self) -> dict[ImageId, list[Annotation]]:
        grouped: dict[ImageId, list[Annotation]] = {}
        for ann in self.annotations:
            grouped.setdefault(ann.image_id, []).append(ann)
        return grouped

    @cached_property
    def annotation_ids(self) -> frozenset[int]:
        return frozenset(a.annotation_id for a in self.annotations)

    @cached_property
    def category_ids(self) -> frozenset[int]:
        return frozenset(c.class_id for c in self.categories)


def load_coco(path: str | os.PathLike) -> CocoDataset:
    """Load and validate a COCO-format annotation file."""
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be an object")

    images: list[ImageMeta] = []
    for i, rec in enumerate(_as_array(doc.get("images", []), f"{path}: images")):
        ctx = f"{path}: images[{i}]"
        rec = _as_record(rec, ctx)
        try:
            meta = ImageMeta(
                image_id=_as_image_id(_require(rec, "id", ctx), ctx),
                width=_as_int(_require(rec, "width", ctx), f"{ctx}: width"),
                height=_as_int(_require(rec, "height", ctx), f"{ctx}: height"),
            )
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{ctx}: {exc}") from exc
        images.append(meta)

    image_ids = {m.image_id for m in images}
    if len(image_ids) != len(images):
        raise ValidationError(f"{path}: duplicate image ids")

    annotations: list[Annotation] = []
    seen_ann_ids: set[int] = set()
    dangling: list[int] = []
    for i, rec in enumerate(_as_array(doc.get("annotations", []), f"{path}: annotations")):
        ctx = f"{path}: annotations[{i}]"
        rec = _as_record(rec, ctx)
        ann = Annotation(
            annotation_id=_as_int(_require(rec, "id", ctx), f"{ctx}: id"),
            image_id=_as_image_id(_require(rec, "image_id", ctx), ctx),
            class_id=_as_int(_require(rec, "category_id", ctx), f"{ctx}: category_id"),
            bbox=_as_bbox(_require(rec, "bbox", ctx), ctx),
        )
        if ann.annotation_id in seen_ann_ids:
            raise ValidationError(f"{ctx}: duplicate annotation id {ann.annotation_id}")
        seen_ann_ids.add(ann.annotation_id)
        if ann.image_id not in image_ids:
            dangling.append(ann.image_id)
        annotations.append(ann)
    if dangling:
        raise ValidationError(
            f"{path}: annotations reference missing images: ids {sorted(set(dangling), key=image_id_sort_key)}"
        )

    categories: list[Category] = []
    for i, rec in enumerate(_as_array(doc.get("categories", []), f"{path}: categories")):
        ctx = f"{path}: categories[{i}]"
        rec = _as_record(rec, ctx)
        categories.append(
            Category(
                class_id=_as_int(_require(rec, "id", ctx), f"{ctx}: id"),
                name=str(_require(rec, "name", ctx)),
            )
        )

    return CocoDataset(images=images, annotations=annotations, categories=categories, raw=doc)


def save_coco(ds: CocoDataset, path: str | os.PathLike) -> None:
    """Write the dataset's raw document back out (lossless)."""
    write_json_atomic(path, ds.raw)


def write_coco_subset(
    ds: CocoDataset, image_ids: Iterable[ImageId], path: str | os.PathLike
) -> None:
    """Write a COCO file restricted to `image_ids`, preserving unmodeled keys."""
    keep = set(image_ids)
    unknown = keep - {m.image_id for m in ds.images}
    if unknown:
        raise ValidationError(f"subset references unknown image ids: {sorted(map(str, unknown))}")
    doc = dict(ds.raw)
    doc["images"] = [rec for rec in ds.raw.get("images", []) if rec.get("id") in keep]
    doc["annotations"] = [
        rec for rec in ds.raw.get("annotations", []) if rec.get("image_id") in keep
    ]
    write_json_atomic(path, doc)


# ---------------------------------------------------------------------------
# Detection results (COCO "results" array shape)


def load_detections(path: str | os.PathLike) -> list[Detection]:
    """Load a COCO-results detections file, preserving record order."""
    doc = read_json(path)
    records = _as_array(doc, f"{path}: top level")
    out: list[Detection] = []
    for i, rec in enumerate(records):
        ctx = f"{path}: detections[{i}]"
        rec = _as_record(rec, ctx)
        try:
            det = Detection(
                image_id=_as_image_id(_require(rec, "image_id", ctx), ctx),
                class_id=_as_int(_require(rec, "category_id", ctx), f"{ctx}: category_id"),
                bbox=_as_bbox(_require(rec, "bbox", ctx), ctx),
                score=_as_number(_require(rec, "score", ctx), f"{ctx}: score"),
            )
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{ctx}: {exc}") from exc
        out.append(det)
    return out


def save_detections(dets: Sequence[Detection], path: str | os.PathLike) -> None:
    payload = [
        {
            "image_id": d.image_id,
            "category_id": d.class_id,
            "bbox": d.bbox.as_list(),
            "score": d.score,
        }
        for d in dets
    ]
    write_json_atomic(path, payload)


# ---------------------------------------------------------------------------
# Pose files


@dataclass(frozen=True)
class PoseEntry:
    """All poses found in one image, plus the human count that drove backend choice.

    `person_count` comes from the human detector and may legitimately
    disagree with len(poses); the two stages can disagree about how many
    people are present. All poses in an entry carry the entry's bottom_up
    flag.
    """

    image_id: ImageId
    person_count: int
    bottom_up: bool
    poses: tuple[PersonPose, ...]

    def __post_init__(self) -> None:
        if self.person_count < 0:
            raise ValueError(f"person_count must be non-negative, got {self.person_count}")
        for pose in self.poses:
            if pose.bottom_up != self.bottom_up:
                raise ValueError("all poses in an entry must share the entry's bottom_up flag")


@dataclass(frozen=True)
class PoseFile:
    entries: tuple[PoseEntry, ...]

    def by_image(self) -> dict[ImageId, PoseEntry]:
        return {e.image_id: e for e in self.entries}


FLAT_KEYPOINT_LEN = 51  # 17 keypoints × (x, y, conf)


def _pose_from_flat(flat: list, bottom_up: bool, ctx: str) -> PersonPose:
    if not isinstance(flat, list) or len(flat) != FLAT_KEYPOINT_LEN:
        got = len(flat) if isinstance(flat, list) else type(flat).__name__
        raise ValidationError(f"{ctx}: keypoints must be an array of {FLAT_KEYPOINT_LEN} numbers, got {got}")
    numbers = [_as_number(v, f"{ctx}: keypoints[{i}]") for i, v in enumerate(flat)]
    try:
        keypoints = tuple(
            Keypoint(numbers[k], numbers[k + 1], numbers[k + 2]) for k in range(0, FLAT_KEYPOINT_LEN, 3)
        )
        return PersonPose(keypoints=keypoints, bottom_up=bottom_up)
    except ValueError as exc:
        raise ValidationError(f"{ctx}: {exc}") from exc


def load_poses(path: str | os.PathLike) -> PoseFile:
    """Load a pose file: per-image entries of flat COCO keypoint triples."""
    doc = read_json(path)
    records = _as_array(doc, f"{path}: top level")
    entries: list[PoseEntry] = []
    seen: set[ImageId] = set()
    for i, rec in enumerate(records):
        ctx = f"{path}: entries[{i}]"
        rec = _as_record(rec, ctx)
        image_id = _as_image_id(_require(rec, "image_id", ctx), ctx)
        if image_id in seen:
            raise ValidationError(f"{ctx}: duplicate entry for image {image_id}")
        seen.add(image_id)
        bottom_up = _require(rec, "bottom_up", ctx)
        if not isinstance(bottom_up, bool):
            raise ValidationError(f"{ctx}: bottom_up must be a boolean, got {bottom_up!r}")
        person_count = _as_int(_require(rec, "person_count", ctx), f"{ctx}: person_count")
        poses = []
        for j, pose_rec in enumerate(_as_array(_require(rec, "poses", ctx), f"{ctx}: poses")):
            pose_ctx = f"{ctx}: poses[{j}]"
            pose_rec = _as_record(pose_rec, pose_ctx)
            poses.append(_pose_from_flat(_require(pose_rec, "keypoints", pose_ctx), bottom_up, pose_ctx))
        try:
            entries.append(
                PoseEntry(
                    image_id=image_id,
                    person_count=person_count,
                    bottom_up=bottom_up,
                    poses=tuple(poses),
                )
            )
        except ValueError as exc:
            raise ValidationError(f"{ctx}: {exc}") from exc
    return PoseFile(entries=tuple(entries))


def save_poses(pose_file: PoseFile, path: str | os.PathLike) -> None:
    payload = []
    for entry in pose_file.entries:
        flat_poses = []
        for pose in entry.poses:
            flat: list[float] = []
            for kp in pose.keypoints:
                flat.extend((kp.x, kp.y, kp.conf))
            flat_poses.append({"keypoints": flat})
        payload.append(
            {
                "image_id": entry.image_id,
                "person_count": entry.person_count,
                "bottom_up": entry.bottom_up,
                "poses": flat_poses,
            }
        )
    write_json_atomic(path, payload)


# ---------------------------------------------------------------------------
# Handheld flags


@dataclass(frozen=True)
class HandheldFlags:
    """Annotation ids a reviewer marked as held in a hand."""

    handheld_annotation_ids: frozenset[int]


def load_flags(path: str | os.PathLike) -> HandheldFlags:
    doc = read_json(path)
    records = _as_array(doc, f"{path}: top level")
    ids = [_as_int(v, f"{path}: flags[{i}]") for i, v in enumerate(records)]
    return HandheldFlags(handheld_annotation_ids=frozenset(ids))


def save_flags(flags: HandheldFlags, path: str | os.PathLike) -> None:
    write_json_atomic(path, sorted(flags.handheld_annotation_ids))


def validate_flags(flags: HandheldFlags, ds: CocoDataset, ctx: str = "flags") -> None:
    """Every flagged id must exist in the companion dataset."""
    dangling = flags.handheld_annotation_ids - ds.annotation_ids
    if dangling:
        raise ValidationError(f"{ctx}: ids reference no annotation: {sorted(dangling)}")


# ---------------------------------------------------------------------------
# Areas of interest


def load_aois(path: str | os.PathLike) -> list[AreaOfInterest]:
    doc = read_json(path)
    records = _as_array(doc, f"{path}: top level")
    sources = {s.value: s for s in CenterSource}
    out: list[AreaOfInterest] = []
    for i, rec in enumerate(records):
        ctx = f"{path}: aois[{i}]"
        rec = _as_record(rec, ctx)
        source_raw = _require(rec, "center_source", ctx)
        if source_raw not in sources:
            raise ValidationError(
                f"{ctx}: center_source must be one of {sorted(sources)}, got {source_raw!r}"
            )
        try:
            aoi = AreaOfInterest(
                image_id=_as_image_id(_require(rec, "image_id", ctx), ctx),
                cx=_as_number(_require(rec, "cx", ctx), f"{ctx}: cx"),
                cy=_as_number(_require(rec, "cy", ctx), f"{ctx}: cy"),
                half_extent=_as_number(_require(rec, "half_extent", ctx), f"{ctx}: half_extent"),
                person_index=_as_int(_require(rec, "person_index", ctx), f"{ctx}: person_index"),
                center_source=sources[source_raw],
            )
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{ctx}: {exc}") from exc
        out.append(aoi)
    return out


def save_aois(aois: Sequence[AreaOfInterest], path: str | os.PathLike) -> None:
    payload = [
        {
            "image_id": a.image_id,
            "cx": a.cx,
            "cy": a.cy,
            "half_extent": a.half_extent,
            "person_index": a.person_index,
            "center_source": a.center_source.value,
        }
        for a in aois
    ]
    write_json_atomic(path, payload)


# ---------------------------------------------------------------------------
# Evaluation sets (images with annotations split into handheld / other)


@dataclass(frozen=True)
class EvalImage:
    """One image's ground truth, partitioned for handheld-aware matching."""

    image_id: ImageId
    width: int
    height: int
    handheld: tuple[Annotation, ...]
    other: tuple[Annotation, ...]


def _annotation_payload(ann: Annotation) -> dict:
    return {
        "annotation_id": ann.annotation_id,
        "class_id": ann.class_id,
        "bbox": ann.bbox.as_list(),
    }


def _annotation_from_record(rec: Any, image_id: ImageId, ctx: str) -> Annotation:
    rec = _as_record(rec, ctx)
    return Annotation(
        annotation_id=_as_int(_require(rec, "annotation_id", ctx), f"{ctx}: annotation_id"),
        image_id=image_id,
        class_id=_as_int(_require(rec, "class_id", ctx), f"{ctx}: class_id"),
        bbox=_as_bbox(_require(rec, "bbox", ctx), ctx),
    )


def load_eval_set(path: str | os.PathLike) -> list[EvalImage]:
    doc = read_json(path)
    records = _as_array(doc, f"{path}: top level")
    out: list[EvalImage] = []
    seen: set[ImageId] = set()
    for i, rec in enumerate(records):
        ctx = f"{path}: images[{i}]"
        rec = _as_record(rec, ctx)
        image_id = _as_image_id(_require(rec, "image_id", ctx), ctx)
        if image_id in seen:
            raise ValidationError(f"{ctx}: duplicate entry for image {image_id}")
        seen.add(image_id)
        try:
            width = _as_int(_require(rec, "width", ctx), f"{ctx}: width")
            height = _as_int(_require(rec, "height", ctx), f"{ctx}: height")
            ImageMeta(image_id, width, height)
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{ctx}: {exc}") from exc
        handheld = tuple(
            _annotation_from_record(r, image_id, f"{ctx}: handheld[{j}]")
            for j, r in enumerate(_as_array(_require(rec, "handheld", ctx), f"{ctx}: handheld"))
        )
        other = tuple(
            _annotation_from_record(r, image_id, f"{ctx}: other[{j}]")
            for j, r in enumerate(_as_array(_require(rec, "other", ctx), f"{ctx}: other"))
        )
        out.append(EvalImage(image_id=image_id, width=width, height=height, handheld=handheld, other=other))
    return out


def save_eval_set(images: Sequence[EvalImage], path: str | os.PathLike) -> None:
    payload = [
        {
            "image_id": im.image_id,
            "width": im.width,
            "height": im.height,
            "handheld": [_annotation_payload(a) for a in im.handheld],
            "other": [_annotation_payload(a) for a in im.other],
        }
        for im in images
    ]
    write_json_atomic(path, payload)


# ---------------------------------------------------------------------------
# Filter decision audit log (write-only format)


def save_decisions(decisions: Sequence, path: str | os.PathLike) -> None:
    """Write per-detection filter verdicts for audit.

    Accepts FilterDecision records; kept separate from the filtered
    detections file so downstream consumers of plain COCO results never
    need to know about it.
    """
    payload = [
        {
            "image_id": d.detection.image_id,
            "category_id": d.detection.class_id,
            "bbox": d.detection.bbox.as_list(),
            "score": d.detection.score,
            "kept": d.kept,
            "reason": d.reason.value,
        }
        for d in decisions
    ]
    write_json_atomic(path, payload)


# ---------------------------------------------------------------------------
# Image metadata (dimensions only) and class lists


def load_image_metas(path: str | os.PathLike) -> list[ImageMeta]:
    """Load image dimensions from either a COCO file or a bare meta array.

    A COCO-style object contributes its "images" list; a bare array is a
    list of {image_id, width, height} records.
    """
    doc = read_json(path)
    if isinstance(doc, dict):
        return load_coco_images(doc, str(path))
    records = _as_array(doc, f"{path}: top level")
    out: list[ImageMeta] = []
    seen: set[ImageId] = set()
    for i, rec in enumerate(records):
        ctx = f"{path}: images[{i}]"
        rec = _as_record(rec, ctx)
        try:
            meta = ImageMeta(
                image_id=_as_image_id(_require(rec, "image_id", ctx), ctx),
                width=_as_int(_require(rec, "width", ctx), f"{ctx}: width"),
                height=_as_int(_require(rec, "height", ctx), f"{ctx}: height"),
            )
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{ctx}: {exc}") from exc
        if meta.image_id in seen:
            raise ValidationError(f"{ctx}: duplicate image id {meta.image_id}")
        seen.add(meta.image_id)
        out.append(meta)
    return out


def load_coco_images(doc: Mapping, ctx: str) -> list[ImageMeta]:
    out: list[ImageMeta] = []
    seen: set[ImageId] = set()
    for i, rec in enumerate(_as_array(doc.get("images", []), f"{ctx}: images")):
        rec_ctx = f"{ctx}: images[{i}]"
        rec = _as_record(rec, rec_ctx)
        try:
            meta = ImageMeta(
                image_id=_as_image_id(_require(rec, "id", rec_ctx), rec_ctx),
                width=_as_int(_require(rec, "width", rec_ctx), f"{rec_ctx}: width"),
                height=_as_int(_require(rec, "height", rec_ctx), f"{rec_ctx}: height"),
            )
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{rec_ctx}: {exc}") from exc
        if meta.image_id in seen:
            raise ValidationError(f"{rec_ctx}: duplicate image id {meta.image_id}")
        seen.add(meta.image_id)
        out.append(meta)
    return out


def load_class_ids(path: str | os.PathLike) -> frozenset[int]:
    """Load a class-id list: bare ints or {class_id, name} records."""
    doc = read_json(path)
    records = _as_array(doc, f"{path}: top level")
    ids: list[int] = []
    for i, rec in enumerate(records):
        ctx = f"{path}: classes[{i}]"
        if isinstance(rec, dict):
            ids.append(_as_int(_require(rec, "class_id", ctx), f"{ctx}: class_id"))
        else:
            ids.append(_as_int(rec, ctx))
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{path}: duplicate class ids")
    return frozenset(ids)


# ---------------------------------------------------------------------------
# Grouping helpers

T = TypeVar("T")


def group_by_image(items: Iterable[T]) -> dict[ImageId, list[T]]:
    """Group items carrying an image_id attribute, preserving input order."""
    grouped: dict[ImageId, list[T]] = {}
    for item in items:
        grouped.setdefault(item.image_id, []).append(item)  # type: ignore[attr-defined]
    return grouped


def sorted_image_ids(ids: Iterable[ImageId]) -> list[ImageId]:
    """Canonical image ordering: integer ids first, then string ids."""
    return sorted(ids, key=image_id_sort_key)
