"""Regenerate the staged end-to-end fixture and its golden outputs.

Run from anywhere:

    python3 tests/fixtures/e2e/generate.py

Writes coco.json, poses.json, detections.json and flags.json next to this
script, then replays the CLI chain (build-subset, aoi, filter in both
modes, eval in both modes) into tests/fixtures/golden/. Manifests are
deleted from the golden tree because they carry timestamps; everything
else is byte-stable.

The scene list is fully explicit so every golden number can be checked by
hand. Twenty 640x480 images:

  1   forearm-scaled holder, bottle TP det 0.95, chair distractor det 0.4
  2   head-scaled holder, cup TP det 0.9
  3   shoulder-scaled holder, phone TP det 0.8, far phone FP det 0.45
  4   default-scaled holder (wrist only), book TP det 0.75
  5   elbow-centered region (no wrists), bottle TP det 0.7
  6   two holders; flagged bottle TP det 0.65, unflagged cup det 0.6
  7   flagged cup but NO pose entry; TP-geometry det 0.99, far det 0.3
  8   region far from the flagged phone; TP-geometry det 0.5
  9   flagged 200x60 book; det 0.55 overlaps region but trips the size cap
  10  flagged cup TP det 0.85 plus far FP det 0.9 (above the bypass)
  11  unflagged banana candidate, pose, no detections
  12  unflagged remote candidate, pose, no detections
  13  chair only, left-arm pose, no detections
  14  two people, no objects
  15  bottom-up pose with an implausibly wide head (forearm fallback)
  16  pose with head but no arms: zero regions
  17  cup with no person: not a candidate
  18  book with no person annotation but a pose
  19  person only
  20  empty image, no pose entry

Images 1-10 are flagged, so they form the evaluation set. Detections
exist only on those images; the eval command rejects strays.
"""

from __future__ import annotations

import shutil
import subprocess
import sys
from pathlib import Path

from posefilter.interchange import (
    load_coco,
    load_detections,
    load_flags,
    load_poses,
    validate_flags,
    write_json_atomic,
)
from posefilter.types import (
    LEFT_EAR,
    LEFT_ELBOW,
    LEFT_SHOULDER,
    LEFT_WRIST,
    NOSE,
    RIGHT_EAR,
    RIGHT_ELBOW,
    RIGHT_SHOULDER,
    RIGHT_WRIST,
)

HERE = Path(__file__).resolve().parent
GOLDEN = HERE.parent / "golden"
CLASSES = HERE / "classes.json"

WIDTH, HEIGHT = 640, 480
PERSON, CAR, BOTTLE, CUP = 1, 3, 44, 47
BANANA, REMOTE, PHONE, BOOK, CHAIR = 52, 75, 77, 84, 62

SPLIT_SEED = 7
UPPER_CONF = 0.7
NO_UPPER_CONF = 1.1


def keypoints(joints: dict[int, tuple[float, float]]) -> list[float]:
    """Flat 51-number COCO triple list; listed joints score 0.9, rest 0."""
    flat: list[float] = []
    for idx in range(17):
        x, y = joints.get(idx, (0.0, 0.0))
        flat.extend((float(x), float(y), 0.9 if idx in joints else 0.0))
    return flat


def right_forearm(wx: float, wy: float) -> dict[int, tuple[float, float]]:
    # 52 px forearm: exactly 2 px per cm, region half-width exactly 35.6
    return {RIGHT_ELBOW: (wx - 52, wy), RIGHT_WRIST: (wx, wy)}


def images() -> list[dict]:
    return [
        {"id": i, "width": WIDTH, "height": HEIGHT, "file_name": f"im{i:04d}.jpg"}
        for i in range(1, 21)
    ]


def annotations() -> list[dict]:
    def ann(aid: int, image: int, cls: int, box: tuple[float, float, float, float]) -> dict:
        x, y, w, h = box
        return {
            "id": aid,
            "image_id": image,
            "category_id": cls,
            "bbox": [x, y, w, h],
            "area": w * h,
            "iscrowd": 0,
        }

    return [
        ann(101, 1, BOTTLE, (285, 185, 30, 30)),
        ann(102, 1, CHAIR, (50, 350, 80, 80)),
        ann(103, 1, PERSON, (230, 100, 150, 300)),
        ann(201, 2, CUP, (385, 285, 30, 30)),
        ann(202, 2, PERSON, (330, 80, 140, 320)),
        ann(301, 3, PHONE, (138, 238, 24, 24)),
        ann(302, 3, PERSON, (80, 100, 180, 350)),
        ann(401, 4, BOOK, (290, 210, 60, 40)),
        ann(402, 4, PERSON, (250, 60, 140, 380)),
        ann(501, 5, BOTTLE, (485, 335, 30, 30)),
        ann(502, 5, PERSON, (430, 200, 160, 270)),
        ann(601, 6, BOTTLE, (185, 165, 30, 30)),
        ann(602, 6, CUP, (435, 285, 30, 30)),
        ann(603, 6, PERSON, (140, 60, 130, 330)),
        ann(604, 6, PERSON, (390, 180, 130, 290)),
        ann(701, 7, CUP, (310, 230, 30, 30)),
        ann(702, 7, PERSON, (250, 90, 140, 350)),
        ann(801, 8, PHONE, (500, 380, 24, 24)),
        ann(802, 8, PERSON, (40, 40, 160, 300)),
        ann(901, 9, BOOK, (220, 210, 200, 60)),
        ann(902, 9, PERSON, (260, 100, 120, 320)),
        ann(1001, 10, CUP, (185, 285, 30, 30)),
        ann(1002, 10, PERSON, (140, 160, 140, 300)),
        ann(1101, 11, BANANA, (300, 200, 40, 20)),
        ann(1102, 11, PERSON, (250, 80, 140, 330)),
        ann(1201, 12, REMOTE, (420, 310, 30, 15)),
        ann(1202, 12, PERSON, (370, 170, 130, 300)),
        ann(1301, 13, CHAIR, (100, 300, 90, 110)),
        ann(1302, 13, PERSON, (300, 100, 130, 330)),
        ann(1401, 14, PERSON, (100, 80, 120, 320)),
        ann(1402, 14, PERSON, (400, 90, 120, 310)),
        ann(1501, 15, CAR, (500, 350, 120, 80)),
        ann(1502, 15, PERSON, (200, 60, 160, 360)),
        ann(1601, 16, PERSON, (280, 100, 120, 320)),
        ann(1701, 17, CUP, (300, 220, 30, 30)),
        ann(1801, 18, BOOK, (150, 150, 50, 30)),
        ann(1901, 19, PERSON, (260, 100, 130, 330)),
    ]


FLAGGED = [101, 201, 301, 401, 501, 601, 701, 801, 901, 1001]


def pose_entries() -> list[dict]:
    def entry(image: int, bottom_up: bool, *poses: dict[int, tuple[float, float]]) -> dict:
        return {
            "image_id": image,
            "person_count": len(poses),
            "bottom_up": bottom_up,
            "poses": [{"keypoints": keypoints(p)} for p in poses],
        }

    return [
        entry(1, True, right_forearm(300, 200)),
        # ears 40 px apart: head-width scaling
        entry(2, False, {LEFT_EAR: (380, 120), RIGHT_EAR: (420, 120), LEFT_WRIST: (400, 300)}),
        # shoulders 82 px apart, no elbows: shoulder-width scaling
        entry(
            3,
            False,
            {LEFT_SHOULDER: (109, 150), RIGHT_SHOULDER: (191, 150), LEFT_WRIST: (150, 250)},
        ),
        # wrist only: no usable measurement, image-default scaling
        entry(4, False, {LEFT_WRIST: (320, 240)}),
        # elbow stands in for the missing wrist; 64 px upper arm
        entry(5, False, {RIGHT_SHOULDER: (500, 286), RIGHT_ELBOW: (500, 350)}),
        entry(6, True, right_forearm(200, 180), right_forearm(450, 300)),
        # image 7 deliberately has no entry
        entry(8, True, right_forearm(100, 100)),
        entry(9, True, right_forearm(320, 240)),
        entry(10, True, right_forearm(200, 300)),
        entry(11, True, right_forearm(320, 210)),
        entry(12, False, {LEFT_EAR: (430, 120), RIGHT_EAR: (470, 120), LEFT_WRIST: (440, 320)}),
        entry(13, True, {LEFT_ELBOW: (392, 210), LEFT_WRIST: (340, 210)}),
        entry(
            14,
            False,
            {LEFT_EAR: (140, 110), RIGHT_EAR: (180, 110), LEFT_WRIST: (160, 260)},
            {LEFT_EAR: (440, 120), RIGHT_EAR: (480, 120), RIGHT_WRIST: (460, 270)},
        ),
        # 200 px head exceeds the bottom-up ceiling (640 / 4), falls to forearm
        entry(
            15,
            True,
            {**right_forearm(280, 250), LEFT_EAR: (180, 100), RIGHT_EAR: (380, 100)},
        ),
        # head only, no arms: a scale exists but there is nothing to center on
        entry(16, False, {NOSE: (340, 130), LEFT_EAR: (320, 130), RIGHT_EAR: (360, 130)}),
        entry(18, True, right_forearm(400, 300)),
        entry(19, False, {LEFT_EAR: (300, 130), RIGHT_EAR: (340, 130), RIGHT_WRIST: (320, 280)}),
    ]


def detections() -> list[dict]:
    def det(image: int, cls: int, box: tuple[float, float, float, float], score: float) -> dict:
        return {"image_id": image, "category_id": cls, "bbox": list(box), "score": score}

    return [
        det(1, BOTTLE, (287, 185, 30, 30), 0.95),
        det(1, CHAIR, (52, 352, 80, 80), 0.4),
        det(2, CUP, (386, 286, 30, 30), 0.9),
        det(3, PHONE, (139, 239, 24, 24), 0.8),
        det(3, PHONE, (550, 60, 24, 24), 0.45),
        det(4, BOOK, (292, 212, 60, 40), 0.75),
        det(5, BOTTLE, (486, 336, 30, 30), 0.7),
        det(6, BOTTLE, (187, 165, 30, 30), 0.65),
        det(6, CUP, (435, 285, 30, 30), 0.6),
        det(7, CUP, (312, 230, 30, 30), 0.99),
        det(7, CUP, (60, 60, 30, 30), 0.3),
        det(8, PHONE, (501, 381, 24, 24), 0.5),
        det(9, BOOK, (220, 210, 200, 60), 0.55),
        det(10, CUP, (186, 286, 30, 30), 0.85),
        det(10, CUP, (520, 100, 30, 30), 0.9),
    ]


def write_inputs() -> None:
    coco = {
        "info": {"description": "synthetic staged scenes for pipeline regression", "version": "1"},
        "images": images(),
        "annotations": annotations(),
        "categories": [
            {"id": PERSON, "name": "person"},
            {"id": CAR, "name": "car"},
            {"id": BOTTLE, "name": "bottle"},
            {"id": CUP, "name": "cup"},
            {"id": BANANA, "name": "banana"},
            {"id": CHAIR, "name": "chair"},
            {"id": REMOTE, "name": "remote"},
            {"id": PHONE, "name": "cell phone"},
            {"id": BOOK, "name": "book"},
        ],
    }
    classes = [
        {"class_id": BOTTLE, "name": "bottle"},
        {"class_id": CUP, "name": "cup"},
        {"class_id": BANANA, "name": "banana"},
        {"class_id": REMOTE, "name": "remote"},
        {"class_id": PHONE, "name": "cell phone"},
        {"class_id": BOOK, "name": "book"},
    ]
    write_json_atomic(HERE / "coco.json", coco, indent=2)
    write_json_atomic(HERE / "classes.json", classes, indent=2)
    write_json_atomic(HERE / "poses.json", pose_entries(), indent=2)
    write_json_atomic(HERE / "detections.json", detections(), indent=2)
    write_json_atomic(HERE / "flags.json", FLAGGED, indent=2)

    # the fixture must parse through the strict loaders it feeds
    ds = load_coco(HERE / "coco.json")
    load_poses(HERE / "poses.json")
    load_detections(HERE / "detections.json")
    validate_flags(load_flags(HERE / "flags.json"), ds)


def run_cli(*args: str) -> None:
    cmd = [sys.executable, "-m", "posefilter.cli", *args]
    subprocess.run(cmd, check=True)


def golden_chain() -> None:
    """The exact command sequence the regression test replays."""
    if GOLDEN.exists():
        shutil.rmtree(GOLDEN)
    GOLDEN.mkdir(parents=True)
    subset = GOLDEN / "subset"

    run_cli(
        "build-subset",
        "--coco", str(HERE / "coco.json"),
        "--classes", str(CLASSES),
        "--splits",
        "--seed", str(SPLIT_SEED),
        "--flags", str(HERE / "flags.json"),
        "--out", str(subset),
    )
    run_cli(
        "aoi",
        "--poses", str(HERE / "poses.json"),
        "--meta", str(HERE / "coco.json"),
        "--out", str(GOLDEN / "aoi.json"),
    )
    for mode, upper in (("upper", UPPER_CONF), ("noupper", NO_UPPER_CONF)):
        mode_dir = GOLDEN / mode
        mode_dir.mkdir()
        run_cli(
            "filter",
            "--detections", str(HERE / "detections.json"),
            "--aoi", str(GOLDEN / "aoi.json"),
            "--upper", str(upper),
            "--out", str(mode_dir / "filtered.json"),
            "--decisions-out", str(mode_dir / "decisions.json"),
        )
        run_cli(
            "eval",
            "--detections", str(mode_dir / "filtered.json"),
            "--eval-set", str(subset / "eval_set.json"),
            "--baseline", str(HERE / "detections.json"),
            "--out-prefix", str(mode_dir) + "/",
        )

    # manifests carry timestamps; the golden tree must be byte-stable
    for manifest in sorted(GOLDEN.rglob("*manifest.json")):
        manifest.unlink()


def main() -> None:
    write_inputs()
    golden_chain()
    files = sorted(p.relative_to(GOLDEN) for p in GOLDEN.rglob("*") if p.is_file())
    print(f"golden tree: {len(files)} files")
    for f in files:
        print(f"  {f}")


if __name__ == "__main__":
    main()
