"""Deterministic filesystem plumbing shared by the subcommands."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}


def list_images(directory: str | os.PathLike) -> list[Path]:
    """Image files in a directory, sorted by name for stable output order."""
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"image directory not found: {root}")
    return sorted(
        (p for p in root.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS),
        key=lambda p: p.name,
    )


def image_id_for(path: Path) -> int | str:
    """COCO-style numeric stems become integer ids, anything else a string.

    "000000139872.jpg" -> 139872, "kitchen_01.png" -> "kitchen_01".
    """
    stem = path.stem
    return int(stem) if stem.isdigit() else stem


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


def write_json_atomic(path: str | os.PathLike, payload: object) -> None:
    text = json.dumps(payload, allow_nan=False)
    write_bytes_atomic(path, (text + "\n").encode("utf-8"))
