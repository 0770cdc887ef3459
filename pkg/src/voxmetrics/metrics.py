"""Per-class overlap (DSC, IoU) and boundary (HD95) metrics.

HD95 is built on an exact Euclidean distance transform computed with the
separable lower-envelope-of-parabolas method, one pass per axis with that
axis' voxel spacing folded in. Distances are in mm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ._percentile import linear_percentile
from .errors import EmptyMask, GridMismatch
from .volume import LabelVolume, TissueClass

HD_PERCENTILE = 95.0


@dataclass(frozen=True)
class ClassMetrics:
    """Metrics for one tissue class. ``None`` marks an undefined value."""

    tissue: TissueClass
    dsc: float | None
    iou: float | None
    hd95: float | None


@dataclass(frozen=True)
class MetricsRecord:
    case_id: str
    method: str
    per_class: tuple[ClassMetrics, ...]

    def __post_init__(self):
        if not self.case_id or not self.method:
            raise ValueError("case_id and method must be non-empty")
        got = [m.tissue for m in self.per_class]
        if got != list(TissueClass.foreground()):
            raise ValueError(f"per_class must list classes 1..6 in order, got {got}")

    def get(self, tissue) -> ClassMetrics:
        return self.per_class[int(tissue) - 1]


def _grids(pred, gt):
    if isinstance(pred, LabelVolume) and isinstance(gt, LabelVolume):
        if pred.dims != gt.dims or pred.spacing != gt.spacing:
            raise GridMismatch(f"pred {pred.dims}@{pred.spacing} vs gt {gt.dims}@{gt.spacing}")
        return pred.data, gt.data, gt.spacing
    a = pred.data if isinstance(pred, LabelVolume) else np.asarray(pred)
    b = gt.data if isinstance(gt, LabelVolume) else np.asarray(gt)
    if a.shape != b.shape:
        raise GridMismatch(f"pred {a.shape} vs gt {b.shape}")
    spacing = gt.spacing if isinstance(gt, LabelVolume) else getattr(pred, "spacing", None)
    return a, b, spacing


def confusion_counts(pred, gt, tissue) -> tuple[int, int, int]:
    a, b, _ = _grids(pred, gt)
    pm = a == int(tissue)
    gm = b == int(tissue)
    tp = int(np.count_nonzero(pm & gm))
    fp = int(np.count_nonzero(pm)) - tp
    fn = int(np.count_nonzero(gm)) - tp
    return tp, fp, fn


def dice(pred, gt, tissue) -> float | None:
    tp, fp, fn = confusion_counts(pred, gt, tissue)
    denom = 2 * tp + fp + fn
    return None if denom == 0 else 2 * tp / denom


def iou(pred, gt, tissue) -> float | None:
    tp, fp, fn = confusion_counts(pred, gt, tissue)
    denom = tp + fp + fn
    return None if denom == 0 else tp / denom


# ---------------------------------------------------------------------------
# exact EDT


@numba.njit(cache=True, nogil=True)
def _lower_envelope(f, n, step, out, v, z):
    # f[:n] holds squared distances (inf where unknown); out[:n] receives the
    # minimum over q of f[q] + ((x - q) * step)^2.
    s2 = step * step
    k = -1
    for q in range(n):
        fq = f[q]
        if fq == np.inf:
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
            z[1] = np.inf
            continue
        while True:
            p = v[k]
            s = ((fq + s2 * q * q) - (f[p] + s2 * p * p)) / (2.0 * s2 * (q - p))
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    if k < 0:
        for x in range(n):
            out[x] = np.inf
        return
    k = 0
    for x in range(n):
        while z[k + 1] < x:
            k += 1
        d = (x - v[k]) * step
        out[x] = d * d + f[v[k]]


@numba.njit(cache=True, nogil=True)
def _squared_edt(mask, sx, sy, sz):
    nx, ny, nz = mask.shape
    g = np.empty((nx, ny, nz))
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                g[i, j, k] = 0.0 if mask[i, j, k] else np.inf
    m = max(nx, ny, nz)
    f = np.empty(m)
    out = np.empty(m)
    v = np.empty(m, dtype=np.int64)
    z = np.empty(m + 1)
    for j in range(ny):
        for k in range(nz):
            for i in range(nx):
                f[i] = g[i, j, k]
            _lower_envelope(f, nx, sx, out, v, z)
            for i in range(nx):
                g[i, j, k] = out[i]
    for i in range(nx):
        for k in range(nz):
            for j in range(ny):
                f[j] = g[i, j, k]
            _lower_envelope(f, ny, sy, out, v, z)
            for j in range(ny):
                g[i, j, k] = out[j]
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                f[k] = g[i, j, k]
            _lower_envelope(f, nz, sz, out, v, z)
            for k in range(nz):
                g[i, j, k] = out[k]
    return g


def distance_transform(mask, spacing=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Distance in mm from every voxel center to the nearest true voxel center."""
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    if mask.ndim != 3:
        raise ValueError(f"expected a 3D mask, got shape {mask.shape}")
    sx, sy, sz = (float(s) for s in spacing)
    if min(sx, sy, sz) <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    if not mask.any():
        raise EmptyMask("distance to an empty mask is undefined")
    return np.sqrt(_squared_edt(mask, sx, sy, sz))


# ---------------------------------------------------------------------------
# surfaces and HD95


def surface_mask(mask) -> np.ndarray:
    """True voxels with a 6-neighbour that is false or off the grid."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask, 1, constant_values=False)
    interior = mask.copy()
    for ax in range(3):
        for shift in (-1, 1):
            sl = [slice(1, -1)] * 3
            sl[ax] = slice(1 + shift, padded.shape[ax] - 1 + shift)
            interior &= padded[tuple(sl)]
    return mask & ~interior


def surface_voxels(mask) -> set[tuple[int, int, int]]:
    return {tuple(int(i) for i in p) for p in np.argwhere(surface_mask(mask))}


def _bbox(mask):
    idx = np.argwhere(mask)
    lo = idx.min(axis=0)
    hi = idx.max(axis=0) + 1
    return tuple(slice(a, b) for a, b in zip(lo, hi))


def directed_surface_distances(src_surface, dst_surface, spacing) -> np.ndarray:
    """Distance from each voxel of ``src_surface`` to the nearest of ``dst_surface``."""
    # Cropping to the union bounding box keeps every candidate nearest point.
    box = _bbox(src_surface | dst_surface)
    dt = distance_transform(dst_surface[box], spacing)
    return dt[src_surface[box]]


def hd95(pred, gt, tissue, spacing=None) -> float | None:
    """95th-percentile symmetric surface distance in mm.

    ``None`` if the class is absent from both masks, ``inf`` if absent from
    exactly one.
    """
    a, b, grid_spacing = _grids(pred, gt)
    spacing = spacing if spacing is not None else grid_spacing
    if spacing is None:
        spacing = (1.0, 1.0, 1.0)
    pm = a == int(tissue)
    gm = b == int(tissue)
    p_any, g_any = bool(pm.any()), bool(gm.any())
    if not p_any and not g_any:
        return None
    if p_any != g_any:
        return float("inf")
    sp = surface_mask(pm)
    sg = surface_mask(gm)
    d_pg = directed_surface_distances(sp, sg, spacing)
    d_gp = directed_surface_distances(sg, sp, spacing)
    return max(linear_percentile(d_pg, HD_PERCENTILE), linear_percentile(d_gp, HD_PERCENTILE))


def evaluate_case(pred: LabelVolume, gt: LabelVolume, case_id: str, method: str) -> MetricsRecord:
    _grids(pred, gt)
    per_class = []
    for tissue in TissueClass.foreground():
        per_class.append(
            ClassMetrics(tissue, dice(pred, gt, tissue), iou(pred, gt, tissue), hd95(pred, gt, tissue))
        )
    return MetricsRecord(case_id, method, tuple(per_class))
