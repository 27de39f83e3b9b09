"""Pose-derived area-of-interest filtering for handheld object detection.

The package turns serialized detector and pose-estimator outputs into
filtered detections and evaluation reports. No neural network runs in
here; inference adapters live outside and talk to this package through
JSON files.
"""

__version__ = "0.1.0"

from .types import BBox, Detection, ImageMeta, Keypoint, PersonPose, iou, overlap_fraction
from .scaling import AnthropometricConstants, ScaleSource, ScalingFactor, scaling_factor
from .aoi import AreaOfInterest, CenterSource, generate_aois
from .filtering import FilterConfig, FilterDecision, FilterReason, filter_detections
from .pipeline import BackendChoice, PipelineConfig, select_backend

__all__ = [
    "__version__",
    "BBox",
    "Detection",
    "ImageMeta",
    "Keypoint",
    "PersonPose",
    "iou",
    "overlap_fraction",
    "AnthropometricConstants",
    "ScaleSource",
    "ScalingFactor",
    "scaling_factor",
    "AreaOfInterest",
    "CenterSource",
    "generate_aois",
    "FilterConfig",
    "FilterDecision",
    "FilterReason",
    "filter_detections",
    "BackendChoice",
    "PipelineConfig",
    "select_backend",
]
