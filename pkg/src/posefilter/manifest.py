"""Run manifests: config snapshot, input digests, outputs, versions.

One manifest is written per CLI run, next to the outputs. It is the only
place a timestamp appears, so data outputs stay byte-identical across
re-runs while provenance is still recorded.
"""

from __future__ import annotations

import hashlib
import os
from datetime import datetime, timezone
from typing import Any, Iterable, Mapping

from . import __version__
from .interchange import write_json_atomic

TOOL_NAME = "posefilter"


def file_digest(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return f"sha256:{digest.hexdigest()}"


def tree_digest(root: str | os.PathLike) -> str:
    """Digest of a directory: file names and contents, order-independent."""
    digest = hashlib.sha256()
    base = os.fspath(root)
    for dirpath, dirnames, filenames in sorted(os.walk(base)):
        dirnames.sort()
        for name in sorted(filenames):
            full = os.path.join(dirpath, name)
            rel = os.path.relpath(full, base)
            digest.update(rel.encode("utf-8"))
            digest.update(b"\0")
            digest.update(file_digest(full).encode("ascii"))
            digest.update(b"\0")
    return f"sha256:{digest.hexdigest()}"


def write_manifest(
    path: str | os.PathLike,
    command: str,
    config: Mapping[str, Any],
    inputs: Iterable[str | os.PathLike],
    outputs: Iterable[str | os.PathLike],
    seeds: Mapping[str, int] | None = None,
) -> None:
    input_digests = {}
    for item in inputs:
        name = os.fspath(item)
        input_digests[name] = tree_digest(name) if os.path.isdir(name) else file_digest(name)
    payload = {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": dict(config),
        "inputs": input_digests,
        "outputs": [os.fspath(o) for o in outputs],
        "seeds": dict(seeds) if seeds else {},
    }
    write_json_atomic(path, payload, indent=2)
