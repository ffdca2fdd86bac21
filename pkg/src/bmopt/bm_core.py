"""Lazy Brownian paths on dyadic grids and closed-form distributional oracles.

A path is refined by midpoint displacement: the value at the midpoint of a
dyadic cell ``[l, r]`` is drawn from the Brownian-bridge law
``N((w_l + w_r) / 2, (r - l) / 4)`` using a normal keyed by
``(seed, domain, depth, index)``.  Values are therefore independent of the
order of queries, and the single-point route (:meth:`DyadicPath.value`) and
the batched full-grid route (:func:`grid_batch`) agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

import numpy as np

from . import rng

MAX_GRID_DEPTH = 24
MAX_POINT_DEPTH = 62


@total_ordering
@dataclass(frozen=True)
class DyadicPoint:
    """The dyadic rational ``index / 2**depth`` in path coordinates.

    Instances are stored in canonical form (odd index, or depth 0), so equal
    rationals compare and hash equal.
    """

    depth: int
    index: int

    def __post_init__(self):
        h, k = self.depth, self.index
        if h < 0:
            raise ValueError(f"negative depth {h}")
        if not 0 <= k <= (1 << h):
            raise ValueError(f"index {k} outside [0, 2^{h}]")
        if k == 0:
            h = 0
        else:
            tz = (k & -k).bit_length() - 1
            shift = min(tz, h)
            h, k = h - shift, k >> shift
        object.__setattr__(self, "depth", h)
        object.__setattr__(self, "index", k)

    @classmethod
    def from_fraction(cls, u) -> "DyadicPoint":
        u = Fraction(u)
        den = u.denominator
        if den & (den - 1):
            raise ValueError(f"{u} is not a dyadic rational")
        return cls(den.bit_length() - 1, u.numerator)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.index, 1 << self.depth)

    @property
    def x(self) -> float:
        return self.index / (1 << self.depth)

    def index_at(self, depth: int) -> int:
        """Index of this point on the depth-``depth`` grid."""
        if depth < self.depth:
            raise ValueError(f"point at depth {self.depth} is not on the depth-{depth} grid")
        return self.index << (depth - self.depth)

    def __lt__(self, other: "DyadicPoint") -> bool:
        return self.index << other.depth < other.index << self.depth

    def __repr__(self) -> str:
        return f"DyadicPoint({self.index}/2^{self.depth})"


@dataclass(frozen=True)
class MaxRecord:
    argmax: DyadicPoint
    value: float
    truth_depth: int


def _bridge_sd(length: float, depth: int) -> float:
    # midpoint of a depth-(depth-1) cell of width length / 2**(depth-1)
    return math.sqrt(length / (1 << (depth + 1)))


def _domain_tag(start: Fraction, end: Fraction) -> int:
    return rng.text_tag(f"{start}:{end}")


def _path_keys(seeds, domain_tag: int) -> np.ndarray:
    return rng.fold(seeds, rng.PATH, domain_tag)


def _refine(coarse: np.ndarray, keys: np.ndarray, depth: int, length: float) -> np.ndarray:
    """Values on the depth grid from values on the depth - 1 grid (rows = paths)."""
    n, m = coarse.shape
    level = rng.fold(keys, depth)[:, None]
    z = rng.normals(level, np.arange(1, 2 * (m - 1), 2, dtype=np.uint64))
    fine = np.empty((n, 2 * m - 1))
    fine[:, ::2] = coarse
    fine[:, 1::2] = 0.5 * (coarse[:, :-1] + coarse[:, 1:]) + _bridge_sd(length, depth) * z
    return fine


def _endpoints(keys: np.ndarray, length: float, anchor: float) -> np.ndarray:
    z = rng.normals(keys[:, None], np.array([1], dtype=np.uint64))[:, 0]
    out = np.empty((keys.size, 2))
    out[:, 0] = anchor
    out[:, 1] = anchor + math.sqrt(length) * z
    return out


def grid_batch(seeds, depth: int, domain=(0, 1), anchor: float = 0.0) -> np.ndarray:
    """Depth-``depth`` grids for many seeds at once, shape ``(n, 2**depth + 1)``.

    Row ``i`` equals ``DyadicPath(seeds[i], domain, anchor).grid(depth)``.
    """
    if depth > MAX_GRID_DEPTH:
        raise ValueError(f"grid depth {depth} exceeds cap {MAX_GRID_DEPTH}")
    start, end = Fraction(domain[0]), Fraction(domain[1])
    keys = _path_keys(np.asarray(seeds, dtype=np.uint64).ravel(), _domain_tag(start, end))
    length = float(end - start)
    vals = _endpoints(keys, length, anchor)
    for d in range(1, depth + 1):
        vals = _refine(vals, keys, d, length)
    return vals


class DyadicPath:
    """A Brownian path on ``[a, b]``, materialized lazily on dyadic points.

    Points are addressed by :class:`DyadicPoint` in path coordinates, i.e.
    ``u`` in ``[0, 1]`` stands for ``a + (b - a) u``.  A path instance is not
    thread safe.
    """

    def __init__(self, seed: int, domain=(0, 1), anchor: float = 0.0):
        start, end = Fraction(domain[0]), Fraction(domain[1])
        if not end > start:
            raise ValueError(f"degenerate domain [{start}, {end}]")
        self.seed = int(seed) & rng.MASK64
        self.start = start
        self.end = end
        self.length = float(end - start)
        self.anchor = float(anchor)
        self._key = _path_keys(self.seed, _domain_tag(start, end))
        self._level_keys: dict[int, np.ndarray] = {}
        left, right = _endpoints(self._key, self.length, self.anchor)[0]
        self._values: dict[tuple[int, int], float] = {(0, 0): float(left), (0, 1): float(right)}
        self._grid: np.ndarray | None = None
        self._grid_depth = -1

    @property
    def domain(self) -> tuple[Fraction, Fraction]:
        return self.start, self.end

    def _level_key(self, depth: int) -> np.ndarray:
        key = self._level_keys.get(depth)
        if key is None:
            key = self._level_keys[depth] = rng.fold(self._key, depth)
        return key

    def value(self, p: DyadicPoint) -> float:
        h, k = p.depth, p.index
        if h <= self._grid_depth:
            return float(self._grid[k << (self._grid_depth - h)])
        cached = self._values.get((h, k))
        if cached is not None:
            return cached
        if h > MAX_POINT_DEPTH:
            raise ValueError(f"depth {h} exceeds cap {MAX_POINT_DEPTH}")
        wl = self.value(DyadicPoint(h - 1, (k - 1) >> 1))
        wr = self.value(DyadicPoint(h - 1, (k + 1) >> 1))
        z = rng.normals(self._level_key(h), np.array([k], dtype=np.uint64))
        v = float(0.5 * (np.float64(wl) + np.float64(wr)) + _bridge_sd(self.length, h) * z[0])
        self._values[(h, k)] = v
        return v

    def point_at(self, x) -> DyadicPoint:
        """Path-coordinate point for the absolute location ``x``."""
        x = Fraction(x)
        if not self.start <= x <= self.end:
            raise ValueError(f"{x} outside domain [{self.start}, {self.end}]")
        return DyadicPoint.from_fraction((x - self.start) / (self.end - self.start))

    def value_at(self, x) -> float:
        return self.value(self.point_at(x))

    def grid(self, depth: int) -> np.ndarray:
        """All values on the depth-``depth`` grid (materializes it)."""
        if depth > MAX_GRID_DEPTH:
            raise ValueError(f"grid depth {depth} exceeds cap {MAX_GRID_DEPTH}")
        if depth <= self._grid_depth:
            return self._grid[:: 1 << (self._grid_depth - depth)]
        if self._grid is None:
            vals = _endpoints(self._key, self.length, self.anchor)
            d0 = 0
        else:
            vals = self._grid[None, :]
            d0 = self._grid_depth
        for d in range(d0 + 1, depth + 1):
            vals = _refine(vals, self._key, d, self.length)
        self._grid = vals[0]
        self._grid_depth = depth
        return self._grid

    def __repr__(self) -> str:
        return f"DyadicPath(seed={self.seed}, domain=[{self.start}, {self.end}])"


def path_new(seed: int, domain=(0, 1), anchor: float = 0.0) -> DyadicPath:
    return DyadicPath(seed, domain, anchor)


def path_value(path: DyadicPath, p: DyadicPoint) -> float:
    return path.value(p)


def path_max(path: DyadicPath, truth_depth: int) -> MaxRecord:
    if truth_depth < 1:
        raise ValueError("truth_depth must be >= 1")
    g = path.grid(truth_depth)
    i = int(np.argmax(g))
    return MaxRecord(DyadicPoint(truth_depth, i), float(g[i]), truth_depth)


def _check_log_arg(arg: float, name: str):
    if not arg > 1.0:
        raise ValueError(f"{name}: log argument {arg} <= 1 gives a nonpositive bound")


def eta(x: float, delta: float) -> float:
    """Running-maximum excess allowance ``sqrt(5x/2 * ln(2 / (x delta)))``."""
    if not 0 < x <= 1:
        raise ValueError(f"length {x} outside (0, 1]")
    if not delta > 0:
        raise ValueError(f"delta {delta} must be positive")
    arg = 2.0 / (x * delta)
    _check_log_arg(arg, "eta")
    return math.sqrt(2.5 * x * math.log(arg))


def alpha(x: float, delta: float) -> float:
    """Increment / averaging allowance ``sqrt(6x * ln(1 / (x delta)))``."""
    if not 0 < x <= 1:
        raise ValueError(f"length {x} outside (0, 1]")
    if not delta > 0:
        raise ValueError(f"delta {delta} must be positive")
    arg = 1.0 / (x * delta)
    _check_log_arg(arg, "alpha")
    return math.sqrt(6.0 * x * math.log(arg))


def bridge_max_survival(w_a: float, w_b: float, length: float, y: float) -> float:
    """``P[max of the bridge > y]`` for a Brownian bridge from ``w_a`` to ``w_b``.

    For ``y`` at or below the larger endpoint the running maximum already
    reaches ``y``, and 1 is returned.
    """
    if not length > 0:
        raise ValueError("length must be positive")
    if y <= max(w_a, w_b):
        return 1.0
    return math.exp(-2.0 * (y - w_a) * (y - w_b) / length)
