"""Per-image intensity preprocessing and the training-protocol manifest."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ._percentile import linear_percentile
from .augment import AUGMENTATION_NAMES
from .errors import BadPercentile
from .volume import Volume

DEFAULT_CLIP_PERCENTILE = 99.9


def clip_percentile(vol: Volume, p: float = DEFAULT_CLIP_PERCENTILE) -> Volume:
    """Replace every value above the p-th percentile by that percentile.

    Upper side only. The percentile uses linear interpolation at rank
    ``p/100 * (n - 1)`` over the sorted voxel values.
    """
    if not (0.0 < p <= 100.0):
        raise BadPercentile(f"percentile must lie in (0, 100], got {p}")
    q = linear_percentile(vol.data, p)
    return vol.with_data(np.minimum(vol.data, q))


def minmax_normalize(vol: Volume) -> Volume:
    lo = float(vol.data.min())
    hi = float(vol.data.max())
    if hi == lo:
        return vol.with_data(np.zeros(vol.dims))
    out = (vol.data - lo) / (hi - lo)
    # pin the bounds against rounding in the division
    return vol.with_data(np.clip(out, 0.0, 1.0))


def preprocess_case(vol: Volume, clip_p: float = DEFAULT_CLIP_PERCENTILE) -> Volume:
    """Clip then min-max scale a single image, using only its own statistics."""
    return minmax_normalize(clip_percentile(vol, clip_p))


@dataclass
class Stage:
    name: str
    dataset_role: str
    epochs: int
    initial_learning_rate: float


@dataclass
class ProtocolManifest:
    """Two-stage transfer-learning schedule, descriptive only.

    JSON layout (keys in this order)::

        {"stages": [{"name", "dataset_role", "epochs", "initial_learning_rate"}, ...],
         "augmentations": [str, ...],
         "preprocessing": {"clip_percentile": float, "normalization": str}}
    """

    stages: list[Stage]
    augmentations: list[str]
    preprocessing: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.stages) != 2:
            raise ValueError("protocol has exactly two stages")
        if [s.dataset_role for s in self.stages] != ["pretrain", "finetune"]:
            raise ValueError("stages must be pretrain then finetune")
        for s in self.stages:
            if s.epochs <= 0 or s.initial_learning_rate <= 0:
                raise ValueError(f"stage {s.name!r} needs positive epochs and learning rate")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ProtocolManifest:
        obj = json.loads(text)
        return cls(
            stages=[Stage(**s) for s in obj["stages"]],
            augmentations=list(obj["augmentations"]),
            preprocessing=dict(obj["preprocessing"]),
        )


def emit_training_protocol() -> ProtocolManifest:
    return ProtocolManifest(
        stages=[
            Stage("human_pretrain", "pretrain", 1000, 1e-2),
            Stage("vervet_finetune", "finetune", 200, 1e-4),
        ],
        augmentations=list(AUGMENTATION_NAMES),
        preprocessing={"clip_percentile": DEFAULT_CLIP_PERCENTILE, "normalization": "minmax"},
    )
