"""Seeded 3D augmentation of image / label pairs.

Spatial transforms (rotate, scale, mirror) move intensities and labels with the
same geometry: trilinear for intensities, nearest neighbour for labels, and
samples falling outside the field of view become 0 / background. All other
transforms touch the intensity volume only.

Randomness in :func:`apply_pipeline` comes from one root seed. Every
(case index, transform) pair gets its own substream, so results do not depend
on how cases are spread across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import correlate1d

from .errors import NotNormalized
from .volume import LabelVolume, Volume, trilinear_resize

TRANSFORM_ORDER = (
    "rotate",
    "scale",
    "gaussian_noise",
    "gaussian_blur",
    "brightness",
    "contrast",
    "low_resolution",
    "gamma",
    "mirror",
)

# The eight augmentation families; brightness and contrast form one family.
AUGMENTATION_NAMES = (
    "rotation",
    "scaling",
    "gaussian_noise",
    "gaussian_blur",
    "brightness_contrast",
    "low_resolution",
    "gamma",
    "mirroring",
)

_AXES = {"x": 0, "y": 1, "z": 2}


# ---------------------------------------------------------------------------
# samplers


def _sample_linear(data: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Trilinear lookup at index-space ``coords`` (shape ``(3, ...)``), 0 outside."""
    shape = data.shape
    valid = np.ones(coords.shape[1:], dtype=bool)
    lo, hi, frac = [], [], []
    for ax in range(3):
        c = coords[ax]
        n = shape[ax]
        valid &= (c >= -0.5) & (c <= n - 0.5)
        c = np.clip(c, 0.0, n - 1)
        l = np.floor(c).astype(np.intp)
        lo.append(l)
        hi.append(np.minimum(l + 1, n - 1))
        frac.append(c - l)
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    fx, fy, fz = frac

    def lerp(a, b, f):
        return a + f * (b - a)

    c00 = lerp(data[x0, y0, z0], data[x1, y0, z0], fx)
    c10 = lerp(data[x0, y1, z0], data[x1, y1, z0], fx)
    c01 = lerp(data[x0, y0, z1], data[x1, y0, z1], fx)
    c11 = lerp(data[x0, y1, z1], data[x1, y1, z1], fx)
    out = lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    return np.where(valid, out, 0.0)


def _sample_nearest(data: np.ndarray, coords: np.ndarray, fill=0) -> np.ndarray:
    valid = np.ones(coords.shape[1:], dtype=bool)
    idx = []
    for ax in range(3):
        i = np.floor(coords[ax] + 0.5).astype(np.intp)
        n = data.shape[ax]
        valid &= (i >= 0) & (i < n)
        idx.append(np.clip(i, 0, n - 1))
    out = data[tuple(idx)]
    return np.where(valid, out, fill).astype(data.dtype)


def _source_coords(shape, matrix: np.ndarray) -> np.ndarray:
    """Input-index position of each output voxel under ``p -> M (p - c) + c``."""
    center = (np.asarray(shape, dtype=float) - 1.0) / 2.0
    grid = np.indices(shape, dtype=float).reshape(3, -1)
    src = matrix @ (grid - center[:, None]) + center[:, None]
    return src.reshape((3,) + tuple(shape))


def _snap(m: np.ndarray) -> np.ndarray:
    # quarter turns must land exactly on grid points
    r = np.round(m)
    return np.where(np.abs(m - r) < 1e-12, r, m)


def _warp(vol: Volume, labels: LabelVolume, matrix: np.ndarray) -> tuple[Volume, LabelVolume]:
    if vol.dims != labels.dims:
        raise ValueError(f"image {vol.dims} and labels {labels.dims} differ in shape")
    coords = _source_coords(vol.dims, matrix)
    return (
        vol.with_data(_sample_linear(vol.data, coords)),
        labels.with_data(_sample_nearest(labels.data, coords, fill=0)),
    )


def rotation_matrix(angles_deg) -> np.ndarray:
    ax, ay, az = (math.radians(a) for a in angles_deg)
    cx, sx, cy, sy, cz, sz = math.cos(ax), math.sin(ax), math.cos(ay), math.sin(ay), math.cos(az), math.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return _snap(rz @ ry @ rx)


# ---------------------------------------------------------------------------
# transforms


def rotate(vol: Volume, labels: LabelVolume, angles) -> tuple[Volume, LabelVolume]:
    """Rigid rotation about the volume center, angles in degrees about x, y, z.

    Rotation happens in physical space, so anisotropic spacing is respected.
    """
    angles = tuple(float(a) for a in angles)
    if not all(math.isfinite(a) for a in angles):
        raise ValueError(f"non-finite rotation angles {angles}")
    if all(a == 0.0 for a in angles):
        return vol, labels
    s = np.diag(vol.spacing)
    s_inv = np.diag([1.0 / v for v in vol.spacing])
    matrix = _snap(s_inv @ rotation_matrix(angles).T @ s)
    return _warp(vol, labels, matrix)


def scale_spatial(vol: Volume, labels: LabelVolume, factor: float) -> tuple[Volume, LabelVolume]:
    """Zoom about the center; ``factor > 1`` enlarges the content."""
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    if factor == 1.0:
        return vol, labels
    return _warp(vol, labels, np.eye(3) / factor)


def add_gaussian_noise(vol: Volume, sigma: float, seed=None) -> Volume:
    if sigma < 0:
        raise ValueError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return vol
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return vol.with_data(vol.data + rng.normal(0.0, sigma, size=vol.dims))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1D Gaussian truncated at 4 sigma and normalised to unit sum."""
    radius = int(4.0 * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(vol: Volume, sigma: float) -> Volume:
    """Separable Gaussian smoothing with mirrored (half-sample) edges; sigma in voxels."""
    if sigma < 0:
        raise ValueError(f"blur sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return vol
    k = gaussian_kernel(sigma)
    out = vol.data
    for ax in range(3):
        out = correlate1d(out, k, axis=ax, mode="reflect")
    return vol.with_data(out)


def adjust_brightness(vol: Volume, factor: float) -> Volume:
    if not factor > 0:
        raise ValueError(f"brightness factor must be positive, got {factor}")
    return vol.with_data(vol.data * factor)


def adjust_contrast(vol: Volume, factor: float) -> Volume:
    """Stretch about the mean, then clamp back into the input's value range."""
    if factor < 0:
        raise ValueError(f"contrast factor must be >= 0, got {factor}")
    if factor == 1.0:
        return vol
    d = vol.data
    mean = float(d.mean())
    return vol.with_data(np.clip(mean + factor * (d - mean), d.min(), d.max()))


def simulate_low_res(vol: Volume, downscale: float) -> Volume:
    """Downsample by ``1/downscale`` then upsample back, both trilinear."""
    if not downscale >= 1.0:
        raise ValueError(f"downscale must be >= 1, got {downscale}")
    if downscale == 1.0:
        return vol
    dims = vol.dims
    small = tuple(max(1, int(round(n / downscale))) for n in dims)
    down = trilinear_resize(vol.data, small, tuple(n / m for n, m in zip(dims, small)))
    up = trilinear_resize(down, dims, tuple(m / n for n, m in zip(dims, small)))
    return vol.with_data(up)


def gamma_transform(vol: Volume, gamma: float) -> Volume:
    """``v ** gamma``; input must already lie in [0, 1]."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    d = vol.data
    if d.min() < 0.0 or d.max() > 1.0:
        raise NotNormalized(f"gamma needs values in [0, 1], got [{d.min()}, {d.max()}]")
    if gamma == 1.0:
        return vol
    return vol.with_data(np.power(d, gamma))


def mirror(vol: Volume, labels: LabelVolume, axes) -> tuple[Volume, LabelVolume]:
    idx = sorted({_AXES[a] if isinstance(a, str) else int(a) for a in axes})
    if not idx:
        return vol, labels
    return vol.with_data(np.flip(vol.data, axis=idx)), labels.with_data(np.flip(labels.data, axis=idx))


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class TransformSpec:
    enabled: bool = True
    probability: float = 0.0
    low: float = 0.0
    high: float = 0.0

    def validate(self, name):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"{name}: probability {self.probability} outside [0, 1]")
        if self.low > self.high:
            raise ValueError(f"{name}: range low {self.low} > high {self.high}")


def _defaults() -> dict[str, TransformSpec]:
    return {
        "rotate": TransformSpec(True, 0.2, -30.0, 30.0),
        "scale": TransformSpec(True, 0.2, 0.7, 1.4),
        "gaussian_noise": TransformSpec(True, 0.1, 0.0, 0.1),
        "gaussian_blur": TransformSpec(True, 0.2, 0.5, 1.0),
        "brightness": TransformSpec(True, 0.15, 0.75, 1.25),
        "contrast": TransformSpec(True, 0.15, 0.75, 1.25),
        "low_resolution": TransformSpec(True, 0.25, 1.0, 2.0),
        "gamma": TransformSpec(True, 0.3, 0.7, 1.5),
        # probability is per axis; the range is unused
        "mirror": TransformSpec(True, 0.5, 0.0, 0.0),
    }


@dataclass
class AugmentSpec:
    """Per-transform probabilities and parameter ranges plus the root seed.

    Config file layout (JSON; every key optional, missing keys keep defaults)::

        {"seed": 0,
         "transforms": {"rotate": {"enabled": true, "probability": 0.2, "range": [-30, 30]},
                        ...}}

    Ranges are degrees for rotate, zoom factor for scale, noise sigma,
    blur sigma in voxels, brightness / contrast factors, low-resolution
    downscale and the gamma exponent. ``mirror.probability`` applies per axis.
    """

    transforms: dict[str, TransformSpec] = field(default_factory=_defaults)
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.transforms) - set(TRANSFORM_ORDER)
        if unknown:
            raise ValueError(f"unknown transforms {sorted(unknown)}")
        for name in TRANSFORM_ORDER:
            self.transforms.setdefault(name, _defaults()[name])
            self.transforms[name].validate(name)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "transforms": {
                name: {"enabled": t.enabled, "probability": t.probability, "range": [t.low, t.high]}
                for name, t in ((n, self.transforms[n]) for n in TRANSFORM_ORDER)
            },
        }

    @classmethod
    def from_dict(cls, obj: dict, base: AugmentSpec | None = None) -> AugmentSpec:
        base = base or cls()
        transforms = {n: replace(t) for n, t in base.transforms.items()}
        for name, conf in obj.get("transforms", {}).items():
            if name not in TRANSFORM_ORDER:
                raise ValueError(f"unknown transform {name!r}")
            t = transforms[name]
            if "enabled" in conf:
                t.enabled = bool(conf["enabled"])
            if "probability" in conf:
                t.probability = float(conf["probability"])
            if "range" in conf:
                t.low, t.high = (float(v) for v in conf["range"])
        return cls(transforms, int(obj.get("seed", base.seed)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str, base: AugmentSpec | None = None) -> AugmentSpec:
        return cls.from_dict(json.loads(text), base)

    def all_off(self) -> AugmentSpec:
        return replace(self, transforms={n: replace(t, probability=0.0) for n, t in self.transforms.items()})


def transform_rng(seed: int, case_index: int, step: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(case_index, step)))


def _gamma_any_range(vol: Volume, gamma: float) -> Volume:
    # rescale into [0, 1] for the exponent, then back to the original range
    lo, hi = float(vol.data.min()), float(vol.data.max())
    if hi == lo:
        return vol
    unit = np.clip((vol.data - lo) / (hi - lo), 0.0, 1.0)
    out = gamma_transform(vol.with_data(unit), gamma).data
    return vol.with_data(out * (hi - lo) + lo)


def apply_pipeline(
    spec: AugmentSpec, vol: Volume, labels: LabelVolume, case_index: int = 0
) -> tuple[Volume, LabelVolume]:
    """Run the enabled transforms in the fixed order, each firing with its probability."""
    for step, name in enumerate(TRANSFORM_ORDER):
        t = spec.transforms[name]
        if not t.enabled:
            continue
        rng = transform_rng(spec.seed, case_index, step)
        if name == "mirror":
            axes = [ax for ax in range(3) if rng.random() < t.probability]
            vol, labels = mirror(vol, labels, axes)
            continue
        if not rng.random() < t.probability:
            continue
        if name == "rotate":
            vol, labels = rotate(vol, labels, rng.uniform(t.low, t.high, size=3))
            continue
        value = float(rng.uniform(t.low, t.high))
        if name == "scale":
            vol, labels = scale_spatial(vol, labels, value)
        elif name == "gaussian_noise":
            vol = add_gaussian_noise(vol, value, rng)
        elif name == "gaussian_blur":
            vol = gaussian_blur(vol, value)
        elif name == "brightness":
            vol = adjust_brightness(vol, value)
        elif name == "contrast":
            vol = adjust_contrast(vol, value)
        elif name == "low_resolution":
            vol = simulate_low_res(vol, value)
        elif name == "gamma":
            vol = _gamma_any_range(vol, value)
    return vol, labels
