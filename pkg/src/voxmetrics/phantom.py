"""Synthetic six-class "brain" for tests and demos.

Anatomy is defined in coordinates normalised by the physical half-extent of
the grid (each axis runs from -1 to 1 across the field of view), so one spec
rendered at two spacings with the same physical extent gives the same object.
x is left-right, y posterior (-) to anterior (+), z inferior (-) to superior (+).

Layout, painted in this order (later shapes overwrite earlier ones):

============  ==========================================================
CSF           ellipsoid, center (0, 0.05, 0.12), radii (0.80, 0.88, 0.72)
GM            ellipsoid, same center, radii (0.70, 0.78, 0.62)
WM            ellipsoid, same center, radii (0.50, 0.58, 0.44)
DGM           ellipsoid, center (0, 0.08, 0.12), radii (0.24, 0.24, 0.20)
cerebellum    ellipsoid, center (0, -0.50, -0.52), radii (0.38, 0.28, 0.24)
brainstem     z-aligned cylinder, axis at (x, y) = (0, -0.12),
              radius 0.20, z from -0.875 to -0.0625
============  ==========================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SpecTooSmall
from .volume import LabelVolume, TissueClass, Volume

MIN_DIM = 16

DEFAULT_INTENSITY = {
    TissueClass.BACKGROUND: 0.0,
    TissueClass.CSF: 30.0,
    TissueClass.GM: 70.0,
    TissueClass.WM: 110.0,
    TissueClass.DGM: 85.0,
    TissueClass.BRAINSTEM: 100.0,
    TissueClass.CEREBELLUM: 60.0,
}

_CENTER = (0.0, 0.05, 0.12)
_LAYOUT = [
    (TissueClass.CSF, "ellipsoid", _CENTER, (0.80, 0.88, 0.72)),
    (TissueClass.GM, "ellipsoid", _CENTER, (0.70, 0.78, 0.62)),
    (TissueClass.WM, "ellipsoid", _CENTER, (0.50, 0.58, 0.44)),
    (TissueClass.DGM, "ellipsoid", (0.0, 0.08, 0.12), (0.24, 0.24, 0.20)),
    (TissueClass.CEREBELLUM, "ellipsoid", (0.0, -0.50, -0.52), (0.38, 0.28, 0.24)),
    (TissueClass.BRAINSTEM, "cylinder", (0.0, -0.12), (0.20, -0.875, -0.0625)),
]


@dataclass
class PhantomSpec:
    dims: tuple[int, int, int] = (64, 64, 64)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    seed: int = 0
    noise_sigma: float = 5.0
    class_intensity: dict = field(default_factory=lambda: dict(DEFAULT_INTENSITY))

    def validate(self):
        if len(self.dims) != 3 or min(self.dims) < MIN_DIM:
            raise SpecTooSmall(f"phantom needs at least {MIN_DIM} voxels per axis, got {self.dims}")
        if min(self.spacing) <= 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        levels = [float(self.class_intensity[c]) for c in TissueClass]
        if len(set(levels)) != len(levels):
            raise ValueError("class intensities must be distinct")


def _normalised_axes(dims, spacing):
    axes = []
    for n, s in zip(dims, spacing):
        half = n * s / 2.0
        axes.append(((np.arange(n) + 0.5) * s - half) / half)
    return np.meshgrid(*axes, indexing="ij")


def phantom_labels(dims, spacing) -> np.ndarray:
    x, y, z = _normalised_axes(dims, spacing)
    labels = np.zeros(dims, dtype=np.uint8)
    for tissue, kind, center, params in _LAYOUT:
        if kind == "ellipsoid":
            (cx, cy, cz), (rx, ry, rz) = center, params
            inside = ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 + ((z - cz) / rz) ** 2 <= 1.0
        else:
            (cx, cy), (r, z0, z1) = center, params
            inside = ((x - cx) ** 2 + (y - cy) ** 2 <= r * r) & (z >= z0) & (z <= z1)
        labels[inside] = int(tissue)
    return labels


def generate(spec: PhantomSpec | None = None) -> tuple[Volume, LabelVolume]:
    spec = spec or PhantomSpec()
    spec.validate()
    dims = tuple(int(d) for d in spec.dims)
    spacing = tuple(float(s) for s in spec.spacing)
    labels = phantom_labels(dims, spacing)
    lut = np.array([float(spec.class_intensity[c]) for c in TissueClass])
    image = lut[labels]
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        image = image + rng.normal(0.0, spec.noise_sigma, size=dims)
    return Volume(image, spacing), LabelVolume(labels, spacing)
