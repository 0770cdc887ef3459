import math

import numpy as np


def linear_percentile(values, p: float) -> float:
    """p-th percentile with linear interpolation at rank ``p/100 * (n - 1)``."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = v.size
    if n == 0:
        raise ValueError("percentile of an empty set")
    rank = p * (n - 1) / 100.0
    lo = min(int(math.floor(rank)), n - 1)
    hi = min(lo + 1, n - 1)
    frac = rank - lo
    if frac == 0.0 or v[hi] == v[lo]:
        return float(v[lo])
    return float(v[lo] + frac * (v[hi] - v[lo]))
