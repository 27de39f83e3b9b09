"""Dataset splitting and handheld evaluation subset construction."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .interchange import Annotation, CocoDataset, EvalImage, HandheldFlags, ValidationError
from .types import ImageId, image_id_sort_key


def default_handheld_classes_path() -> Path:
    """Location of the packaged default handheld class list.

    The file is a starting point, not ground truth: projects are expected
    to copy and edit it for their own object inventory.
    """
    return Path(str(resources.files("posefilter").joinpath("data/handheld_classes.json")))


@dataclass(frozen=True)
class SplitSpec:
    """Train/val/test fractions plus the shuffle seed."""

    train: float = 0.5
    val: float = 0.25
    test: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("train", "val", "test"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} fraction must be non-negative")
        total = self.train + self.val + self.test
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {total}")


@dataclass(frozen=True)
class HandheldClassList:
    """COCO category ids eligible to be handheld objects."""

    class_ids: frozenset[int]

    def __post_init__(self) -> None:
        if not self.class_ids:
            raise ValueError("class list must not be empty")


def _shuffled_ids(ids: list[ImageId], seed: int) -> list[ImageId]:
    # Explicit Fisher-Yates over canonically sorted ids: the partition must
    # not depend on input file order or on another library's shuffle
    # remaining stable across versions.
    order = sorted(ids, key=image_id_sort_key)
    rng = random.Random(seed)
    for i in range(len(order) - 1, 0, -1):
        j = rng.randrange(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def split_ids(
    ids: list[ImageId], spec: SplitSpec
) -> tuple[list[ImageId], list[ImageId], list[ImageId]]:
    """Seeded disjoint partition of image ids into train/val/test.

    Val and test sizes are floored; the remainder goes to train. The three
    lists are disjoint and cover the input exactly.
    """
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate image ids in split input")
    order = _shuffled_ids(list(ids), spec.seed)
    n = len(order)
    n_val = math.floor(spec.val * n)
    n_test = math.floor(spec.test * n)
    n_train = n - n_val - n_test
    train = order[:n_train]
    val = order[n_train : n_train + n_val]
    test = order[n_train + n_val :]
    return train, val, test


def split_dataset(
    ds: CocoDataset, spec: SplitSpec
) -> tuple[list[ImageId], list[ImageId], list[ImageId]]:
    return split_ids([m.image_id for m in ds.images], spec)


@dataclass
class HandheldSubset:
    """Images eligible for handheld evaluation, with candidate annotations.

    An image qualifies when it contains at least one person and at least
    one object of a handheld-capable class. `candidates` are the
    handheld-class annotations of kept images: the pool a reviewer flags
    from.
    """

    dataset: CocoDataset
    image_ids: list[ImageId]
    candidates: list[Annotation]


def handheld_subset(
    ds: CocoDataset, classes: HandheldClassList, person_class_id: int
) -> HandheldSubset:
    """Select images that can possibly contain a handheld object.

    Output is invariant to annotation order: images come out in canonical
    id order and candidates sorted by (image order, annotation id).
    """
    unknown = classes.class_ids - ds.category_ids
    if unknown:
        raise ValidationError(
            f"handheld class ids not present in dataset categories: {sorted(unknown)}"
        )
    if person_class_id not in ds.category_ids:
        raise ValidationError(f"person class id {person_class_id} not in dataset categories")

    kept_ids: list[ImageId] = []
    for image_id in sorted((m.image_id for m in ds.images), key=image_id_sort_key):
        anns = ds.annotations_by_image.get(image_id, [])
        has_person = any(a.class_id == person_class_id for a in anns)
        has_candidate = any(a.class_id in classes.class_ids for a in anns)
        if has_person and has_candidate:
            kept_ids.append(image_id)

    order = {image_id: i for i, image_id in enumerate(kept_ids)}
    candidates = sorted(
        (
            a
            for a in ds.annotations
            if a.image_id in order and a.class_id in classes.class_ids
        ),
        key=lambda a: (order[a.image_id], a.annotation_id),
    )
    return HandheldSubset(dataset=ds, image_ids=kept_ids, candidates=candidates)


def apply_handheld_flags(subset: HandheldSubset, flags: HandheldFlags) -> list[EvalImage]:
    """Partition each subset image's annotations by reviewer flags.

    Flagged annotations become the handheld ground truth, everything else
    on the image (people included) becomes "other". Images where nothing
    was flagged drop out entirely, so every returned image carries at
    least one handheld annotation.
    """
    dangling = flags.handheld_annotation_ids - subset.dataset.annotation_ids
    if dangling:
        raise ValidationError(f"flags reference no annotation: {sorted(dangling)}")

    images = []
    for image_id in subset.image_ids:
        anns = subset.dataset.annotations_by_image.get(image_id, [])
        handheld = tuple(a for a in anns if a.annotation_id in flags.handheld_annotation_ids)
        if not handheld:
            continue
        other = tuple(a for a in anns if a.annotation_id not in flags.handheld_annotation_ids)
        meta = subset.dataset.images_by_id[image_id]
        images.append(
            EvalImage(
                image_id=image_id,
                width=meta.width,
                height=meta.height,
                handheld=handheld,
                other=other,
            )
        )
    return images
