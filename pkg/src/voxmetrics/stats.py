"""Rank-based comparison of methods: Kruskal-Wallis H with tie correction and
Dunn's pairwise post-hoc test.

The chi-square survival function is evaluated through the regularized upper
incomplete gamma function (power series below ``a + 1``, Lentz continued
fraction above); the normal survival function uses ``math.erfc``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateData, TooFewGroups, UnknownAdjustment

_EPS = 1e-16
_MAX_ITER = 10_000


@dataclass
class Group:
    method: str
    values: list[float]


@dataclass
class GroupedScores:
    groups: list[Group]
    metric_name: str = "score"

    def __post_init__(self):
        self.groups = [g if isinstance(g, Group) else Group(*g) for g in self.groups]
        if len(self.groups) < 2:
            raise TooFewGroups(f"need at least 2 groups, got {len(self.groups)}")
        for g in self.groups:
            g.values = [float(v) for v in g.values]
            if not g.values:
                raise DegenerateData(f"group {g.method!r} is empty")
            if not all(math.isfinite(v) for v in g.values):
                raise DegenerateData(f"group {g.method!r} has non-finite values")

    @classmethod
    def from_mapping(cls, mapping: dict, metric_name: str = "score") -> GroupedScores:
        return cls([Group(k, list(v)) for k, v in mapping.items()], metric_name)


@dataclass(frozen=True)
class KruskalResult:
    h: float
    df: int
    p: float
    tie_correction: float
    h_uncorrected: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class DunnPair:
    method_a: str
    method_b: str
    z: float
    p_raw: float
    p_adjusted: float


@dataclass(frozen=True)
class DunnResult:
    pairs: tuple[DunnPair, ...]
    adjustment: str

    def pair(self, a: str, b: str) -> DunnPair:
        for p in self.pairs:
            if (p.method_a, p.method_b) == (a, b):
                return p
            if (p.method_a, p.method_b) == (b, a):
                return DunnPair(a, b, -p.z, p.p_raw, p.p_adjusted)
        raise KeyError((a, b))


# ---------------------------------------------------------------------------
# special functions


def _lower_gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by its power series."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by modified Lentz."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammaincc(a: float, x: float) -> float:
    if a <= 0:
        raise ValueError("shape must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_gamma_series(a, x)
    return _upper_gamma_cf(a, x)


def chi2_sf(x: float, df: int) -> float:
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if x <= 0:
        return 1.0
    return min(1.0, max(0.0, gammaincc(df / 2.0, x / 2.0)))


def norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# ranks and tests


def rank_with_ties(values) -> np.ndarray:
    """Ranks 1..n, tied values sharing the mean of their rank span."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(n)
    sx = x[order]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def _tie_sizes(values) -> np.ndarray:
    _, counts = np.unique(np.asarray(values, dtype=np.float64), return_counts=True)
    return counts[counts > 1].astype(np.float64)


def _pooled(scores: GroupedScores):
    pooled = np.concatenate([np.asarray(g.values) for g in scores.groups])
    n_total = pooled.size
    if n_total < 3:
        raise DegenerateData(f"need at least 3 observations, got {n_total}")
    ranks = rank_with_ties(pooled)
    sizes = [len(g.values) for g in scores.groups]
    bounds = np.cumsum([0] + sizes)
    mean_ranks = [float(ranks[a:b].mean()) for a, b in zip(bounds[:-1], bounds[1:])]
    ties = _tie_sizes(pooled)
    tie_sum = float(np.sum(ties**3 - ties))
    return n_total, sizes, mean_ranks, tie_sum


def kruskal_wallis(scores: GroupedScores) -> KruskalResult:
    n, sizes, mean_ranks, tie_sum = _pooled(scores)
    correction = 1.0 - tie_sum / (n**3 - n)
    if correction <= 0.0:
        raise DegenerateData("all values are identical; H is undefined")
    center = (n + 1) / 2.0
    spread = sum(ni * (r - center) ** 2 for ni, r in zip(sizes, mean_ranks))
    h_raw = 12.0 * spread / (n * (n + 1))
    h = h_raw / correction
    df = len(sizes) - 1
    return KruskalResult(h=h, df=df, p=chi2_sf(h, df), tie_correction=correction, h_uncorrected=h_raw)


def _adjust(p_raw: list[float], method: str) -> list[float]:
    m = len(p_raw)
    if method == "none":
        return list(p_raw)
    if method == "bonferroni":
        return [min(1.0, m * p) for p in p_raw]
    if method == "holm":
        order = sorted(range(m), key=lambda i: p_raw[i])
        out = [0.0] * m
        running = 0.0
        for rank, i in enumerate(order):
            running = max(running, min(1.0, (m - rank) * p_raw[i]))
            out[i] = running
        return out
    raise UnknownAdjustment(f"unknown p-value adjustment {method!r}; use bonferroni, holm or none")


ADJUSTMENTS = ("bonferroni", "holm", "none")


def dunn_variance_term(n: int, tie_sum: float) -> float:
    return n * (n + 1) / 12.0 - tie_sum / (12.0 * (n - 1))


def dunn_posthoc(scores: GroupedScores, adjustment: str = "bonferroni") -> DunnResult:
    """Pairwise z-tests on pooled mean ranks, with tie-corrected variance."""
    if adjustment not in ADJUSTMENTS:
        raise UnknownAdjustment(f"unknown p-value adjustment {adjustment!r}; use {', '.join(ADJUSTMENTS)}")
    n, sizes, mean_ranks, tie_sum = _pooled(scores)
    var = dunn_variance_term(n, tie_sum)
    if var <= 0.0:
        raise DegenerateData("all values are identical; Dunn z is undefined")
    names = [g.method for g in scores.groups]
    rows = []
    for i, j in itertools.combinations(range(len(names)), 2):
        se = math.sqrt(var * (1.0 / sizes[i] + 1.0 / sizes[j]))
        z = (mean_ranks[i] - mean_ranks[j]) / se
        rows.append((names[i], names[j], z, min(1.0, 2.0 * norm_sf(abs(z)))))
    adjusted = _adjust([r[3] for r in rows], adjustment)
    return DunnResult(tuple(DunnPair(*r, p_adj) for r, p_adj in zip(rows, adjusted)), adjustment)
