"""In-memory volume types and axis-aligned resampling.

Arrays are indexed ``data[x, y, z]`` so that NIfTI's x-fastest file order is
``data.ravel(order="F")``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateOutput, InvalidLabels

HUMAN_SPACING = (1.0, 1.0, 1.0)
VERVET_SPACING = (0.5, 0.5, 0.5)


class TissueClass(enum.IntEnum):
    BACKGROUND = 0
    CSF = 1
    GM = 2
    WM = 3
    DGM = 4
    BRAINSTEM = 5
    CEREBELLUM = 6

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @classmethod
    def foreground(cls) -> tuple[TissueClass, ...]:
        return tuple(c for c in cls if c != cls.BACKGROUND)


_DISPLAY_NAMES = {
    TissueClass.BACKGROUND: "background",
    TissueClass.CSF: "CSF",
    TissueClass.GM: "GM",
    TissueClass.WM: "WM",
    TissueClass.DGM: "DGM",
    TissueClass.BRAINSTEM: "brainstem",
    TissueClass.CEREBELLUM: "cerebellum",
}

MAX_LABEL = max(TissueClass)


def default_affine(spacing) -> np.ndarray:
    aff = np.zeros((3, 4))
    aff[0, 0], aff[1, 1], aff[2, 2] = spacing
    return aff


def _check_geometry(data: np.ndarray, spacing) -> tuple[float, float, float]:
    if data.ndim != 3 or min(data.shape) < 1:
        raise ValueError(f"expected a non-empty 3D array, got shape {data.shape}")
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != 3 or not all(s > 0 and math.isfinite(s) for s in spacing):
        raise ValueError(f"spacing must be three positive reals, got {spacing}")
    return spacing


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Volume:
    """Scalar intensity grid with voxel spacing in mm."""

    data: np.ndarray
    spacing: tuple[float, float, float] = HUMAN_SPACING
    affine: np.ndarray | None = field(default=None)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        spacing = _check_geometry(data, self.spacing)
        if not np.all(np.isfinite(data)):
            raise ValueError("volume contains NaN or Inf")
        affine = default_affine(spacing) if self.affine is None else np.asarray(self.affine, float)
        if affine.shape != (3, 4):
            raise ValueError("affine must be 3x4")
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", _freeze(affine))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray) -> Volume:
        return Volume(data, self.spacing, self.affine)


@dataclass(frozen=True, eq=False)
class LabelVolume:
    """Integer tissue label grid, values in ``0..6``."""

    data: np.ndarray
    spacing: tuple[float, float, float] = HUMAN_SPACING
    affine: np.ndarray | None = field(default=None)

    def __post_init__(self):
        raw = np.asarray(self.data)
        if raw.dtype.kind == "f":
            if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                raise InvalidLabels("label data has non-integral values")
        elif raw.dtype.kind not in "iub":
            raise InvalidLabels(f"label data must be integer typed, got {raw.dtype}")
        if raw.size and (raw.min() < 0 or raw.max() > MAX_LABEL):
            raise InvalidLabels(f"labels outside 0..{int(MAX_LABEL)}")
        data = raw.astype(np.uint8)
        spacing = _check_geometry(data, self.spacing)
        affine = default_affine(spacing) if self.affine is None else np.asarray(self.affine, float)
        if affine.shape != (3, 4):
            raise ValueError("affine must be 3x4")
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", _freeze(affine))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray) -> LabelVolume:
        return LabelVolume(data, self.spacing, self.affine)

    def label_set(self) -> set[int]:
        return {int(v) for v in np.unique(self.data)}


def resampled_dims(dims, spacing, target_spacing) -> tuple[int, int, int]:
    out = []
    for n, s, t in zip(dims, spacing, target_spacing):
        if n < 1:
            raise DegenerateOutput(f"input dimension {n}")
        out.append(max(1, int(round(n * s / t))))
    return tuple(out)


def _check_target(target_spacing) -> tuple[float, float, float]:
    target = tuple(float(t) for t in target_spacing)
    if len(target) != 3 or not all(t > 0 and math.isfinite(t) for t in target):
        raise ValueError(f"target spacing must be three positive reals, got {target_spacing}")
    return target


def center_aligned_coords(n_out: int, ratio: float) -> np.ndarray:
    """Input-index coordinate of each output voxel center.

    ``ratio`` is output spacing over input spacing.
    """
    return (np.arange(n_out) + 0.5) * ratio - 0.5


def _linear_along(data: np.ndarray, axis: int, coords: np.ndarray) -> np.ndarray:
    n = data.shape[axis]
    c = np.clip(coords, 0.0, n - 1)
    lo = np.floor(c).astype(np.intp)
    hi = np.minimum(lo + 1, n - 1)
    frac = c - lo
    a = np.take(data, lo, axis=axis)
    b = np.take(data, hi, axis=axis)
    shape = [1, 1, 1]
    shape[axis] = -1
    return a + frac.reshape(shape) * (b - a)


def trilinear_resize(data: np.ndarray, out_dims, ratios) -> np.ndarray:
    """Separable trilinear resampling, voxel-center aligned, edge clamped."""
    out = np.asarray(data, dtype=np.float64)
    for axis in range(3):
        if out_dims[axis] == out.shape[axis] and ratios[axis] == 1.0:
            continue
        out = _linear_along(out, axis, center_aligned_coords(out_dims[axis], ratios[axis]))
    lo, hi = float(np.min(data)), float(np.max(data))
    return np.clip(out, lo, hi)


def nearest_resize(data: np.ndarray, out_dims, ratios) -> np.ndarray:
    idx = []
    for n_in, n_out, r in zip(data.shape, out_dims, ratios):
        c = center_aligned_coords(n_out, r)
        idx.append(np.clip(np.floor(c + 0.5).astype(np.intp), 0, n_in - 1))
    return data[np.ix_(*idx)]


def resample_intensity(vol: Volume, target_spacing) -> Volume:
    """Trilinear resampling of an intensity volume onto a new voxel spacing."""
    target = _check_target(target_spacing)
    dims = resampled_dims(vol.dims, vol.spacing, target)
    ratios = tuple(t / s for t, s in zip(target, vol.spacing))
    return Volume(trilinear_resize(vol.data, dims, ratios), target, _rescaled_affine(vol.affine, vol.spacing, target))


def resample_labels(labels: LabelVolume, target_spacing) -> LabelVolume:
    """Nearest-neighbour resampling; never introduces new labels."""
    target = _check_target(target_spacing)
    dims = resampled_dims(labels.dims, labels.spacing, target)
    ratios = tuple(t / s for t, s in zip(target, labels.spacing))
    return LabelVolume(
        nearest_resize(labels.data, dims, ratios), target, _rescaled_affine(labels.affine, labels.spacing, target)
    )


def _rescaled_affine(affine, spacing, target):
    # The affine is carried, not interpreted: only the column scale tracks the new spacing.
    out = np.array(affine, dtype=float)
    for j in range(3):
        out[:, j] *= target[j] / spacing[j]
    return out
