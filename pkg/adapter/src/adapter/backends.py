"""Classical backends for each model slot.

Every backend is deterministic: the same inputs always produce the same
file bytes. Construction validates whatever the backend needs (artifact
files, kernel names) so a misconfigured run fails before any image is
read.

Backend ids:
  detector        contour-s | contour-m | contour-l | boxes:FILE
  human_detector  silhouette | boxes:FILE
  pose            geometric
  deblur          unsharp (backbones gaussian5 | gaussian9) | copy
"""

from __future__ import annotations

import json
from pathlib import Path

import cv2
import numpy as np

# Detections scoring below this are never emitted; the downstream sweep
# needs support across the whole confidence range above it.
CONFIDENCE_FLOOR = 0.001


class BackendError(ValueError):
    """Unknown backend id or unusable backend artifact."""


# ---------------------------------------------------------------------------
# Precomputed boxes: the stand-in for externally computed model outputs


class PrecomputedBoxes:
    """Boxes looked up by image filename from a JSON artifact.

    Detection form maps filename to records:
        {"a.png": [{"category_id": 44, "bbox": [x, y, w, h], "score": 0.9}]}
    Person form maps filename to bare boxes:
        {"a.png": [[x, y, w, h], ...]}
    The whole artifact is validated at construction. Filenames absent from
    the artifact yield no boxes.
    """

    def __init__(self, path: str | Path, form: str) -> None:
        if form not in ("detections", "persons"):
            raise BackendError(f"unknown precomputed-boxes form {form!r}")
        self.form = form
        self.path = Path(path)
        if not self.path.is_file():
            raise BackendError(f"precomputed boxes file not found: {self.path}")
        try:
            doc = json.loads(self.path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise BackendError(f"{self.path}: malformed JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise BackendError(f"{self.path}: expected an object keyed by filename")
        for name, rows in doc.items():
            if not isinstance(rows, list):
                raise BackendError(f"{self.path}: {name}: expected an array of boxes")
            for i, row in enumerate(rows):
                self._check_row(row, f"{self.path}: {name}[{i}]")
        self.by_name: dict[str, list] = doc

    def _check_row(self, row, ctx: str) -> None:
        if self.form == "persons":
            if not (isinstance(row, list) and len(row) == 4):
                raise BackendError(f"{ctx}: person box must be [x, y, w, h]")
            return
        if not isinstance(row, dict):
            raise BackendError(f"{ctx}: detection must be an object")
        missing = {"category_id", "bbox", "score"} - set(row)
        if missing:
            raise BackendError(f"{ctx}: missing keys {sorted(missing)}")
        if not (isinstance(row["bbox"], list) and len(row["bbox"]) == 4):
            raise BackendError(f"{ctx}: bbox must be [x, y, w, h]")

    def detections(self, img: np.ndarray, filename: str) -> list[dict]:
        return [dict(row) for row in self.by_name.get(filename, [])]

    def person_boxes(self, img: np.ndarray, filename: str) -> list[tuple]:
        return [tuple(float(v) for v in row) for row in self.by_name.get(filename, [])]


# ---------------------------------------------------------------------------
# Contour proposal detector

# Larger variants keep smaller proposals, like larger models finding
# smaller objects. Fractions are of the image area.
CONTOUR_MIN_AREA_FRAC = {"contour-s": 0.005, "contour-m": 0.002, "contour-l": 0.0005}


class ContourDetector:
    """Class-agnostic proposals from thresholded contours (category 1)."""

    def __init__(self, variant: str) -> None:
        self.min_area_frac = CONTOUR_MIN_AREA_FRAC[variant]

    def detections(self, img: np.ndarray, filename: str) -> list[dict]:
        gray = cv2.cvtColor(img, cv2.COLOR_BGR2GRAY)
        blurred = cv2.GaussianBlur(gray, (5, 5), 0)
        _, mask = cv2.threshold(blurred, 0, 255, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
        contours, _ = cv2.findContours(mask, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
        image_area = float(img.shape[0] * img.shape[1])
        out = []
        for contour in contours:
            x, y, w, h = cv2.boundingRect(contour)
            frac = (w * h) / image_area
            if frac < self.min_area_frac:
                continue
            out.append(
                {
                    "category_id": 1,
                    "bbox": [float(x), float(y), float(w), float(h)],
                    "score": round(min(0.999, frac), 6),
                }
            )
        # stable order independent of contour extraction internals
        out.sort(key=lambda r: (-r["score"], r["bbox"]))
        return out


# ---------------------------------------------------------------------------
# People


# People are taller than wide; wide foreground regions are furniture, not people.
PERSON_MIN_AREA_FRAC = 0.002
PERSON_MIN_ELONGATION = 1.2


class SilhouettePeople:
    """Upright foreground regions from thresholded contours, as person boxes."""

    def person_boxes(self, img: np.ndarray, filename: str) -> list[tuple]:
        gray = cv2.cvtColor(img, cv2.COLOR_BGR2GRAY)
        blurred = cv2.GaussianBlur(gray, (5, 5), 0)
        _, mask = cv2.threshold(blurred, 0, 255, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
        contours, _ = cv2.findContours(mask, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
        image_area = float(img.shape[0] * img.shape[1])
        boxes = []
        for contour in contours:
            x, y, w, h = cv2.boundingRect(contour)
            if w * h < PERSON_MIN_AREA_FRAC * image_area:
                continue
            if h < PERSON_MIN_ELONGATION * w:
                continue
            boxes.append((float(x), float(y), float(w), float(h)))
        boxes.sort()
        return boxes


# ---------------------------------------------------------------------------
# Pose synthesis

# One (x, y) per COCO keypoint as fractions of a person box, nose first.
KEYPOINT_FRACTIONS = (
    (0.50, 0.10),
    (0.46, 0.08), (0.54, 0.08),
    (0.42, 0.10), (0.58, 0.10),
    (0.36, 0.22), (0.64, 0.22),
    (0.30, 0.38), (0.70, 0.38),
    (0.26, 0.52), (0.74, 0.52),
    (0.40, 0.52), (0.60, 0.52),
    (0.38, 0.72), (0.62, 0.72),
    (0.37, 0.92), (0.63, 0.92),
)
KEYPOINT_CONF = 0.9


class GeometricPose:
    """Keypoints at fixed anatomical fractions of each person box."""

    def keypoints_for(self, box: tuple) -> list[float]:
        x, y, w, h = box
        flat: list[float] = []
        for fx, fy in KEYPOINT_FRACTIONS:
            flat.extend((x + fx * w, y + fy * h, KEYPOINT_CONF))
        return flat


def choose_bottom_up(person_count: int, threshold: int) -> bool:
    """Whole-image estimation once the crowd exceeds the cap.

    Per-person estimation costs one pass per person, so it is only
    affordable up to `threshold` people; a negative threshold removes the
    cap entirely.
    """
    if person_count < 0:
        raise ValueError(f"person_count must be non-negative, got {person_count}")
    return threshold >= 0 and person_count > threshold


# ---------------------------------------------------------------------------
# Deblurring

DEBLUR_KERNELS = {"gaussian5": 5, "gaussian9": 9}


class UnsharpDeblur:
    """Unsharp masking: subtract a Gaussian blur to accentuate edges."""

    def __init__(self, backbone: str) -> None:
        if backbone not in DEBLUR_KERNELS:
            raise BackendError(
                f"unknown deblur backbone {backbone!r}, expected one of {sorted(DEBLUR_KERNELS)}"
            )
        self.ksize = DEBLUR_KERNELS[backbone]

    def apply(self, img: np.ndarray) -> np.ndarray:
        blurred = cv2.GaussianBlur(img, (self.ksize, self.ksize), 0)
        return cv2.addWeighted(img, 1.5, blurred, -0.5, 0)


class CopyDeblur:
    def apply(self, img: np.ndarray) -> np.ndarray:
        return img


# ---------------------------------------------------------------------------
# Resolution: every id is turned into a ready backend before any image I/O


def _boxes_path(spec: str) -> str:
    return spec[len("boxes:"):]


def resolve_detector(spec: str):
    if spec in CONTOUR_MIN_AREA_FRAC:
        return ContourDetector(spec)
    if spec.startswith("boxes:"):
        return PrecomputedBoxes(_boxes_path(spec), form="detections")
    raise BackendError(f"unknown detector backend {spec!r}")


def resolve_person_detector(spec: str):
    if spec == "silhouette":
        return SilhouettePeople()
    if spec.startswith("boxes:"):
        return PrecomputedBoxes(_boxes_path(spec), form="persons")
    raise BackendError(f"unknown human-detector backend {spec!r}")


def resolve_pose_backend(spec: str):
    if spec == "geometric":
        return GeometricPose()
    raise BackendError(f"unknown pose backend {spec!r}")


def resolve_deblur(model: str, backbone: str):
    if model == "unsharp":
        return UnsharpDeblur(backbone)
    if model == "copy":
        return CopyDeblur()
    raise BackendError(f"unknown deblur model {model!r}")
