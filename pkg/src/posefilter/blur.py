"""Seeded motion blur augmentation: rotational sweep then linear smear.

Each image draws its own parameters from a generator keyed by (run seed,
filename), so outputs are byte-stable under any processing order and
across repeated runs.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .interchange import write_bytes_atomic, write_json_atomic

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}
SIDECAR_NAME = "blur_params.json"


@dataclass(frozen=True)
class BlurParams:
    """Parameter ranges for the randomized blur draw.

    Per image, an integer smear length is drawn from `linear_length_px`, a
    smear direction uniformly from [0, pi), and a maximum rotation angle
    from `rot_max_angle_deg`; `rot_samples` rotated copies are averaged.
    """

    linear_length_px: tuple[int, int] = (5, 25)
    rot_max_angle_deg: tuple[float, float] = (1.0, 5.0)
    rot_samples: int = 9
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.linear_length_px
        if lo < 1 or hi < lo:
            raise ValueError(f"linear_length_px must satisfy 1 <= lo <= hi, got {self.linear_length_px}")
        rlo, rhi = self.rot_max_angle_deg
        if rlo < 0 or rhi < rlo:
            raise ValueError(f"rot_max_angle_deg must satisfy 0 <= lo <= hi, got {self.rot_max_angle_deg}")
        if self.rot_samples < 3 or self.rot_samples % 2 == 0:
            raise ValueError(f"rot_samples must be odd and >= 3, got {self.rot_samples}")


def make_linear_kernel(length: int, angle: float) -> np.ndarray:
    """Normalized 1-pixel-wide line kernel of the given length and angle.

    The segment is anti-aliased: each cell's weight falls off linearly
    with its distance from the ideal line, so off-axis angles do not
    produce staircase artifacts. Weights sum to 1. Length 1 degenerates to
    the identity kernel.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    half = (length - 1) / 2.0
    size = int(2 * math.ceil(half) + 3)
    center = size // 2
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    px = xs - center
    py = ys - center
    dx, dy = math.cos(angle), math.sin(angle)
    # distance from each cell center to the centered segment of this length
    t = np.clip(px * dx + py * dy, -half, half)
    dist = np.hypot(px - t * dx, py - t * dy)
    weights = np.clip(1.0 - dist, 0.0, 1.0)
    return weights / weights.sum()


def linear_blur(img: np.ndarray, length: int, angle: float) -> np.ndarray:
    """Smear the image along one direction with reflected borders."""
    kernel = make_linear_kernel(length, angle)
    return cv2.filter2D(img, -1, kernel, borderType=cv2.BORDER_REFLECT)


def rotational_blur(img: np.ndarray, max_angle_deg: float, samples: int) -> np.ndarray:
    """Average of the image rotated by `samples` angles in [-max, +max].

    Angles are equally spaced about the image center; sampling is bilinear
    with reflected borders. A zero max angle reproduces the input exactly.
    """
    if samples < 3 or samples % 2 == 0:
        raise ValueError(f"samples must be odd and >= 3, got {samples}")
    if max_angle_deg < 0:
        raise ValueError(f"max_angle_deg must be non-negative, got {max_angle_deg}")
    height, width = img.shape[:2]
    center = ((width - 1) / 2.0, (height - 1) / 2.0)
    source = img.astype(np.float32)
    acc = np.zeros(source.shape, dtype=np.float64)
    for angle in np.linspace(-max_angle_deg, max_angle_deg, samples):
        matrix = cv2.getRotationMatrix2D(center, float(angle), 1.0)
        rotated = cv2.warpAffine(
            source,
            matrix,
            (width, height),
            flags=cv2.INTER_LINEAR,
            borderMode=cv2.BORDER_REFLECT,
        )
        acc += rotated
    mean = acc / samples
    if np.issubdtype(img.dtype, np.integer):
        info = np.iinfo(img.dtype)
        return np.clip(np.rint(mean), info.min, info.max).astype(img.dtype)
    return mean.astype(img.dtype)


@dataclass(frozen=True)
class BlurDraw:
    """The per-image randomized parameters, recorded for audit."""

    file: str
    linear_length_px: int
    linear_angle_rad: float
    rot_max_angle_deg: float


def _image_rng(seed: int, name: str) -> random.Random:
    # hash() is salted per process; a keyed digest keeps draws stable
    # across runs and machines.
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def draw_params(params: BlurParams, name: str) -> BlurDraw:
    rng = _image_rng(params.seed, name)
    length = rng.randint(*params.linear_length_px)
    linear_angle = rng.uniform(0.0, math.pi)
    rot_angle = rng.uniform(*params.rot_max_angle_deg)
    return BlurDraw(
        file=name,
        linear_length_px=length,
        linear_angle_rad=linear_angle,
        rot_max_angle_deg=rot_angle,
    )


def blur_image(img: np.ndarray, draw: BlurDraw, rot_samples: int) -> np.ndarray:
    rotated = rotational_blur(img, draw.rot_max_angle_deg, rot_samples)
    return linear_blur(rotated, draw.linear_length_px, draw.linear_angle_rad)


def augment_dataset(
    images_dir: str | os.PathLike,
    out_dir: str | os.PathLike,
    params: BlurParams,
    threads: int = 1,
) -> list[BlurDraw]:
    """Blur every decodable image in a directory.

    Output files keep their names and dimensions; a sidecar JSON in the
    output directory records each image's drawn parameters. Undecodable
    files are skipped with a warning. Thread count never changes results
    because every image is independently seeded and written atomically.
    """
    src = Path(images_dir)
    dst = Path(out_dir)
    dst.mkdir(parents=True, exist_ok=True)
    names = sorted(
        entry.name
        for entry in src.iterdir()
        if entry.is_file() and entry.suffix.lower() in IMAGE_EXTENSIONS
    )

    def process(name: str) -> BlurDraw | None:
        data = np.fromfile(src / name, dtype=np.uint8)
        img = cv2.imdecode(data, cv2.IMREAD_COLOR)
        if img is None:
            logger.warning("skipping undecodable image: %s", src / name)
            return None
        draw = draw_params(params, name)
        blurred = blur_image(img, draw, params.rot_samples)
        ok, encoded = cv2.imencode(Path(name).suffix, blurred)
        if not ok:
            raise OSError(f"failed to encode output image: {dst / name}")
        write_bytes_atomic(dst / name, encoded.tobytes())
        return draw

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(process, names))
    else:
        results = [process(name) for name in names]

    draws = [r for r in results if r is not None]
    write_json_atomic(
        dst / SIDECAR_NAME,
        [
            {
                "file": d.file,
                "linear_length_px": d.linear_length_px,
                "linear_angle_rad": d.linear_angle_rad,
                "rot_max_angle_deg": d.rot_max_angle_deg,
            }
            for d in draws
        ],
        indent=2,
    )
    return draws
