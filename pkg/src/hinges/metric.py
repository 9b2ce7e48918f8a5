"""Hausdorff distance between sampled closed sets, and the limsup/liminf of set sequences.

A closed subset of a compact metric space is carried around as a finite
ε-net (:class:`ClosedSetSample`).  Distances come from a :class:`MetricSpace`
looked up by ``space_id``, so samples over different spaces never mix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.spatial.distance import cdist


class MetricError(ValueError):
    pass


class MetricSpace:
    """Distance oracle for one ambient space.

    Subclasses override :meth:`distance` and, when a vectorised route exists,
    :meth:`pairwise` or :meth:`nearest`.  ``encode_point``/``decode_point``
    own the JSON form of a point.
    """

    space_id = "abstract"
    diameter = math.inf

    def distance(self, a, b) -> float:
        raise NotImplementedError

    def pairwise(self, xs: Sequence, ys: Sequence) -> np.ndarray:
        out = np.empty((len(xs), len(ys)))
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                out[i, j] = self.distance(x, y)
        return out

    def nearest(self, xs: Sequence, ys: Sequence) -> np.ndarray:
        """For every x, the distance to the closest y."""
        if len(ys) == 0:
            return np.full(len(xs), np.inf)
        return self.pairwise(xs, ys).min(axis=1)

    def same_point(self, a, b) -> bool:
        return self.distance(a, b) == 0.0

    def encode_point(self, p) -> Any:
        return p

    def decode_point(self, obj) -> Any:
        return obj


class EuclideanSpace(MetricSpace):
    """Points are tuples of floats (a bare float is a point of the line)."""

    space_id = "euclidean"

    def _arr(self, xs):
        a = np.asarray(xs, dtype=float)
        return a.reshape(len(xs), -1)

    def distance(self, a, b):
        return float(np.linalg.norm(np.atleast_1d(np.subtract(a, b, dtype=float))))

    def pairwise(self, xs, ys):
        if len(xs) == 0 or len(ys) == 0:
            return np.zeros((len(xs), len(ys)))
        X, Y = self._arr(xs), self._arr(ys)
        if X.shape[1] == 1:
            # cdist squares before the root and underflows on tiny gaps
            return np.abs(X - Y.T)
        return cdist(X, Y)

    def same_point(self, a, b):
        return bool(np.array_equal(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))

    def encode_point(self, p):
        if np.ndim(p) == 0:
            return float(p)
        return [float(v) for v in p]

    def decode_point(self, obj):
        if isinstance(obj, list):
            return tuple(float(v) for v in obj)
        return float(obj)


class FiniteMetricSpace(MetricSpace):
    """A finite metric space given by its distance matrix; points are indices."""

    def __init__(self, dist: np.ndarray, space_id: str = "finite"):
        dist = np.asarray(dist, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise MetricError("distance matrix must be square")
        if not np.array_equal(dist, dist.T) or np.any(np.diag(dist) != 0) or np.any(dist < 0):
            raise MetricError("not a distance matrix")
        self.dist = dist
        self.space_id = space_id
        self.diameter = float(dist.max()) if dist.size else 0.0

    def distance(self, a, b):
        return float(self.dist[int(a), int(b)])

    def pairwise(self, xs, ys):
        return self.dist[np.ix_(np.asarray(xs, dtype=int), np.asarray(ys, dtype=int))]

    def same_point(self, a, b):
        return int(a) == int(b)

    def encode_point(self, p):
        return int(p)

    def decode_point(self, obj):
        return int(obj)


_REGISTRY: dict[str, MetricSpace] = {}


def register_space(space: MetricSpace) -> MetricSpace:
    _REGISTRY[space.space_id] = space
    return space


def get_space(space_id: str) -> MetricSpace:
    try:
        return _REGISTRY[space_id]
    except KeyError:
        raise MetricError(f"unknown space {space_id!r}") from None


register_space(EuclideanSpace())


class _Empty:
    """The empty closed set.  Kept apart from samples, which are never empty."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY"

    def __bool__(self):
        return False

    def __len__(self):
        return 0


EMPTY = _Empty()


@dataclass
class ClosedSetSample:
    points: list
    space: MetricSpace
    resolution: float = 0.0

    def __post_init__(self):
        self.points = list(self.points)
        if not self.points:
            raise MetricError("empty closed set")
        if self.resolution < 0:
            raise MetricError("resolution must be nonnegative")

    @property
    def space_id(self) -> str:
        return self.space.space_id

    def __len__(self):
        return len(self.points)

    def subset(self, mask) -> "ClosedSetSample | _Empty":
        pts = [p for p, keep in zip(self.points, mask) if keep]
        if not pts:
            return EMPTY
        return ClosedSetSample(pts, self.space, self.resolution)

    def to_json(self) -> dict:
        return {
            "space": self.space_id,
            "resolution": float(self.resolution),
            "points": [self.space.encode_point(p) for p in self.points],
        }

    @classmethod
    def from_json(cls, obj: dict, space: MetricSpace | None = None) -> "ClosedSetSample":
        if space is None:
            space = get_space(obj["space"])
        elif space.space_id != obj["space"]:
            raise MetricError(f"sample is over {obj['space']!r}, expected {space.space_id!r}")
        return cls([space.decode_point(p) for p in obj["points"]], space, float(obj.get("resolution", 0.0)))


def _check_pair(S, T):
    if S is EMPTY or T is EMPTY:
        raise MetricError("empty closed set")
    if S.space_id != T.space_id:
        raise MetricError(f"space mismatch: {S.space_id!r} vs {T.space_id!r}")


def hausdorff_distance(S: ClosedSetSample, T: ClosedSetSample) -> float:
    """Exact max-min sweep over the two point lists."""
    _check_pair(S, T)
    space = S.space
    d_st = space.nearest(S.points, T.points).max()
    d_ts = space.nearest(T.points, S.points).max()
    return float(max(d_st, d_ts))


def point_set_equal(S, T) -> bool:
    """Set equality of two samples (or EMPTY) as point collections."""
    if S is EMPTY or T is EMPTY:
        return S is T
    _check_pair(S, T)
    eq = S.space.same_point
    return all(any(eq(s, t) for t in T.points) for s in S.points) and all(
        any(eq(s, t) for s in S.points) for t in T.points
    )


def _check_seq(seq):
    if len(seq) == 0:
        raise MetricError("empty sequence")
    sid = seq[0].space_id
    for N in seq:
        if N is EMPTY:
            raise MetricError("empty closed set")
        if N.space_id != sid:
            raise MetricError("sequence mixes spaces")


def hit_matrix(seq: Sequence[ClosedSetSample], probes: ClosedSetSample, eps: float) -> np.ndarray:
    """``hits[j, i]`` is True when ``seq[j]`` meets the open ball of radius eps at probe i."""
    _check_seq(seq)
    if eps <= 0:
        raise MetricError("eps must be positive")
    if probes.space_id != seq[0].space_id:
        raise MetricError("probes live in another space")
    space = probes.space
    return np.array([space.nearest(probes.points, N.points) < eps for N in seq])


def _tail(n: int) -> slice:
    return slice(n // 2, n)


def limsup_set(seq, probes, eps, min_hits: int = 2):
    """Probe points that the sequence visits infinitely often.

    On a finite sequence "infinitely often" means: within the last half of
    the sequence, the ball around the probe is met at least ``min_hits``
    times (or at every index when the last half is shorter than that).
    """
    hits = hit_matrix(seq, probes, eps)[_tail(len(seq))]
    need = min(min_hits, hits.shape[0])
    return probes.subset(hits.sum(axis=0) >= need)


def liminf_set(seq, probes, eps):
    """Probe points whose ε-ball meets every set of the last half of the sequence."""
    hits = hit_matrix(seq, probes, eps)[_tail(len(seq))]
    return probes.subset(hits.all(axis=0))


def limit_classes(seq, tol: float, members: bool = False) -> list:
    """Observed subsequential Hausdorff limits of ``seq``.

    The last half of the sequence is clustered greedily: a set joins the first
    cluster whose seed lies within ``tol``.  Each cluster must have diameter
    at most ``tol`` and recur (at least two members); its latest member is
    returned as the representative (or, with ``members``, the whole cluster).
    """
    _check_seq(seq)
    tail = list(seq[_tail(len(seq))])
    if len(seq) == 1:
        return [[seq[0]]] if members else [seq[0]]
    clusters: list[list[ClosedSetSample]] = []
    for N in tail:
        for cl in clusters:
            if hausdorff_distance(cl[0], N) <= tol:
                cl.append(N)
                break
        else:
            clusters.append([N])
    for cl in clusters:
        if len(cl) < 2:
            raise MetricError("unresolved limit at tolerance")
        for i in range(len(cl)):
            for j in range(i + 1, len(cl)):
                if hausdorff_distance(cl[i], cl[j]) > tol:
                    raise MetricError("unresolved limit at tolerance")
    if members:
        return clusters
    return [cl[-1] for cl in clusters]


def union_samples(samples: Sequence[ClosedSetSample]):
    """Union of samples as a point set (duplicates dropped)."""
    pts: list = []
    space = None
    res = 0.0
    for S in samples:
        if S is EMPTY:
            continue
        space = S.space
        res = max(res, S.resolution)
        for p in S.points:
            if not any(space.same_point(p, q) for q in pts):
                pts.append(p)
    if not pts:
        return EMPTY
    return ClosedSetSample(pts, space, res)


def intersect_samples(samples: Sequence[ClosedSetSample]):
    """Intersection of samples as point sets."""
    if any(S is EMPTY for S in samples) or not samples:
        return EMPTY
    first = samples[0]
    eq = first.space.same_point
    keep = [p for p in first.points if all(any(eq(p, q) for q in S.points) for S in samples[1:])]
    if not keep:
        return EMPTY
    return ClosedSetSample(keep, first.space, first.resolution)


def check_metric(space: MetricSpace, points: Sequence, slack: float = 1e-9,
                 rng: np.random.Generator | None = None, trials: int = 200) -> None:
    """Fuzz the metric axioms on random triples of ``points``; raise on violation."""
    rng = np.random.default_rng(0) if rng is None else rng
    m = len(points)
    for _ in range(trials):
        i, j, k = rng.integers(0, m, size=3)
        a, b, c = points[i], points[j], points[k]
        dab, dba = space.distance(a, b), space.distance(b, a)
        if dab != dba or dab < 0:
            raise MetricError("distance not symmetric or negative")
        if dab > space.distance(a, c) + space.distance(c, b) + slack:
            raise MetricError("triangle inequality violated")
