"""Slow, obviously-correct reference computations used only by the tests."""

import itertools
import math

import numpy as np
from scipy import integrate


def brute_edt(mask, spacing):
    mask = np.asarray(mask, bool)
    pts = np.argwhere(mask) * np.asarray(spacing, float)
    grid = np.indices(mask.shape).reshape(3, -1).T * np.asarray(spacing, float)
    out = np.empty(len(grid))
    for start in range(0, len(grid), 512):
        chunk = grid[start : start + 512]
        d2 = ((chunk[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        out[start : start + 512] = np.sqrt(d2.min(axis=1))
    return out.reshape(mask.shape)


def brute_surface(mask):
    mask = np.asarray(mask, bool)
    shape = mask.shape
    out = set()
    for p in map(tuple, np.argwhere(mask)):
        for ax, step in itertools.product(range(3), (-1, 1)):
            q = list(p)
            q[ax] += step
            if not 0 <= q[ax] < shape[ax] or not mask[tuple(q)]:
                out.add(p)
                break
    return out


def _all_pairs_min(src, dst, spacing):
    a = np.array(sorted(src), float) * spacing
    b = np.array(sorted(dst), float) * spacing
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
    return d.min(axis=1)


def brute_hd95(pred, gt, label, spacing):
    spacing = np.asarray(spacing, float)
    pm, gm = pred == label, gt == label
    if not pm.any() and not gm.any():
        return None
    if pm.any() != gm.any():
        return math.inf
    sp, sg = brute_surface(pm), brute_surface(gm)
    return max(
        float(np.percentile(_all_pairs_min(sp, sg, spacing), 95)),
        float(np.percentile(_all_pairs_min(sg, sp, spacing), 95)),
    )


def brute_hausdorff(pred, gt, label, spacing):
    spacing = np.asarray(spacing, float)
    sp, sg = brute_surface(pred == label), brute_surface(gt == label)
    return max(_all_pairs_min(sp, sg, spacing).max(), _all_pairs_min(sg, sp, spacing).max())


def set_overlap(pred, gt, label):
    a = set(map(tuple, np.argwhere(pred == label)))
    b = set(map(tuple, np.argwhere(gt == label)))
    if not a and not b:
        return None, None
    inter = len(a & b)
    return 2 * inter / (len(a) + len(b)), inter / len(a | b)


def normal_sf_quad(z):
    pdf = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
    val, _ = integrate.quad(pdf, z, np.inf, epsabs=1e-14, epsrel=1e-13)
    return val


def chi2_sf_quad(x, df):
    k = df / 2.0
    log_norm = -k * math.log(2) - math.lgamma(k)
    pdf = lambda t: math.exp(log_norm + (k - 1) * math.log(t) - t / 2) if t > 0 else 0.0
    val, _ = integrate.quad(pdf, x, np.inf, epsabs=1e-15, epsrel=1e-12, limit=200)
    return val


def gaussian_kernel_3d_center(sigma):
    r = int(4 * sigma + 0.5)
    total = 0.0
    for x, y, z in itertools.product(range(-r, r + 1), repeat=3):
        total += math.exp(-(x * x + y * y + z * z) / (2 * sigma * sigma))
    return 1.0 / total
