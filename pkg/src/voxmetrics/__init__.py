"""Volumetric segmentation preprocessing, augmentation and evaluation."""

from .errors import VoxError
from .metrics import ClassMetrics, MetricsRecord, dice, distance_transform, evaluate_case, hd95, iou
from .nifti_io import read_volume, write_volume
from .volume import LabelVolume, TissueClass, Volume, resample_intensity, resample_labels

__version__ = "0.1.0"

__all__ = [
    "ClassMetrics",
    "LabelVolume",
    "MetricsRecord",
    "TissueClass",
    "Volume",
    "VoxError",
    "dice",
    "distance_transform",
    "evaluate_case",
    "hd95",
    "iou",
    "read_volume",
    "resample_intensity",
    "resample_labels",
    "write_volume",
]
