"""Adapter producing the files the posefilter pipeline consumes.

The contract between the two packages is files only: COCO-results
detections, per-image pose entries, and image directories. This package
never imports posefilter; the formats are the interface.
"""

__version__ = "0.1.0"
