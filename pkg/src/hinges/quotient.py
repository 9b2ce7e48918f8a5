"""Separated quotients of sampled metric spaces.

A :class:`QuotientScene` is a finite sample of a compact metric space M, a
partition of the sample into labelled classes, and a chart: the labels on
which the quotient topology is already separated.  The scene resolution r is
the sampling scale.  Two points closer than r are indistinguishable, so on a
scene the closure of a set is its closed r-neighbourhood and "m_j -> m"
means that the tail of m_j stays within r of m.

Admissible label sets are computed two ways:

* through Hausdorff limits of chart closures (:func:`separated_quotient`
  followed by :func:`labels_of`), and
* directly through label sequences and quotient convergence
  (:func:`is_admissible_by_sequences`).

On scenes whose chart closures are saturated (:func:`check_partition_star`)
the two agree exactly; tests hold them to that.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .metric import (
    EMPTY, ClosedSetSample, MetricError, MetricSpace, get_space,
    hausdorff_distance, limit_classes, liminf_set, limsup_set, point_set_equal,
)

Label = Hashable

# an eventually periodic sequence is fed to the limsup/liminf machinery as
# this many copies of its period, so the last half holds whole periods
PERIOD_REPEATS = 4


class QuotientError(ValueError):
    pass


@dataclass
class QuotientScene:
    space: MetricSpace
    points: list
    labels: list
    chart: set
    resolution: float = 0.0
    label_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.points) != len(self.labels):
            raise QuotientError("labels must be given for every point")
        if not self.points:
            raise QuotientError("empty scene")
        self.label_index = {}
        for i, lab in enumerate(self.labels):
            self.label_index.setdefault(lab, []).append(i)
        self.chart = set(self.chart)
        for lab in self.chart:
            if lab not in self.label_index:
                raise QuotientError(f"chart label {lab!r} has an empty class")
        self._dist = None

    @property
    def all_labels(self) -> list:
        return sorted(self.label_index, key=_label_key)

    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            self._dist = self.space.pairwise(self.points, self.points)
        return self._dist

    def check_label(self, lab):
        if lab not in self.label_index:
            raise QuotientError(f"unknown label {lab!r}")

    def class_sample(self, lab) -> ClosedSetSample:
        self.check_label(lab)
        return ClosedSetSample([self.points[i] for i in self.label_index[lab]], self.space, self.resolution)

    def all_points(self) -> ClosedSetSample:
        return ClosedSetSample(self.points, self.space, self.resolution)

    def closure(self, idx: Iterable[int]) -> list[int]:
        """Indices of the sample points within resolution of the given points."""
        idx = list(idx)
        if not idx:
            return []
        near = self.dist[:, idx].min(axis=1) <= self.resolution
        return list(np.nonzero(near)[0])

    def to_json(self) -> dict:
        metric = "grassmann-gap" if self.space.space_id == "grassmann-gap" else self.space.space_id
        return {
            "metric": metric,
            "resolution": float(self.resolution),
            "points": [self.space.encode_point(p) for p in self.points],
            "labels": list(self.labels),
            "chart": sorted(self.chart, key=_label_key),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QuotientScene":
        space = get_space(obj.get("metric", "euclidean"))
        pts = [space.decode_point(p) for p in obj["points"]]
        return cls(space, pts, list(obj["labels"]), set(obj["chart"]), float(obj.get("resolution", 0.0)))


def _label_key(lab):
    if isinstance(lab, (int, float)):
        return (0, lab, "")
    return (1, 0, str(lab))


def _sorted_labels(labs) -> list:
    return sorted(labs, key=_label_key)


def _eps(r: float) -> float:
    # the open ball of radius just above r, so "within r" includes r itself
    return float(np.nextafter(r, np.inf))


def _class_distance_profile(scene, a, seq) -> np.ndarray:
    """dist(m, M_{seq_j}) for every m in M_a (rows) and every j (columns)."""
    rows = scene.label_index[a]
    return np.column_stack([scene.dist[np.ix_(rows, scene.label_index[b])].min(axis=1) for b in seq])


def quotient_converges(scene: QuotientScene, seq: Sequence[Label], a: Label) -> bool:
    """Whether the label sequence converges to ``a`` in the quotient topology.

    True when some m in M_a has every set M_{seq_j} of the last half of the
    sequence within the scene resolution.
    """
    if len(seq) == 0:
        raise QuotientError("empty sequence")
    for lab in list(seq) + [a]:
        scene.check_label(lab)
    tail = list(seq)[len(seq) // 2:]
    prof = _class_distance_profile(scene, a, tail)
    return bool(prof.max(axis=1).min() <= scene.resolution)


def check_partition_star(scene: QuotientScene, B: Iterable[Label]) -> set:
    """Labels of the closure of the union of the classes in B.

    Raises when the closure is not a union of classes.
    """
    B = list(B)
    if not B:
        raise QuotientError("B must be nonempty")
    for lab in B:
        scene.check_label(lab)
    idx = [i for lab in B for i in scene.label_index[lab]]
    cl = set(scene.closure(idx))
    out = set()
    for lab in scene.all_labels:
        members = scene.label_index[lab]
        inside = [i in cl for i in members]
        if any(inside) and not all(inside):
            raise QuotientError(f"closure is not a union of classes at label {lab!r}")
        if all(inside):
            out.add(lab)
    return out


def labels_of(scene: QuotientScene, N: ClosedSetSample) -> set:
    """S_N: labels whose whole class lies in N (within N's resolution)."""
    if N is EMPTY:
        return set()
    out = set()
    for lab in scene.all_labels:
        d = scene.space.nearest([scene.points[i] for i in scene.label_index[lab]], N.points)
        inside = d <= N.resolution
        if inside.all():
            out.add(lab)
        elif inside.any():
            raise QuotientError(f"not saturated at label {lab!r}")
    return out


def _chart_subsets(scene, max_chart):
    chart = _sorted_labels(scene.chart)
    if len(chart) > max_chart:
        raise QuotientError(
            f"chart has {len(chart)} labels; exhaustive search is limited to {max_chart}, pass candidate sequences"
        )
    for r in range(1, len(chart) + 1):
        yield from itertools.combinations(chart, r)


def separated_quotient(scene: QuotientScene, tol: float | None = None,
                       candidates: Sequence[Sequence[Label]] | None = None,
                       max_chart: int = 12) -> list[ClosedSetSample]:
    """Members of the Hausdorff closure of the chart closures.

    Without ``candidates`` every eventually periodic chart sequence is tried.
    The limit behaviour of such a sequence depends only on the set of labels
    in its period, so one representative per nonempty subset of the chart
    suffices.  The sequence converges in the Hausdorff metric when its limsup
    and liminf sets coincide, and that common set is its limit.

    With ``candidates`` (sampled continuous scenes) each candidate label
    sequence is clustered by :func:`limit_classes` at ``tol`` and every
    cluster contributes its liminf set, at resolution ``tol``.
    """
    if not scene.chart:
        raise QuotientError("chart is empty")
    for lab in scene.chart:
        check_partition_star(scene, [lab])
    probes = scene.all_points()
    found: dict[frozenset, ClosedSetSample] = {}

    def add(N):
        if N is EMPTY:
            return
        key = frozenset(i for i, p in enumerate(scene.points) if any(scene.space.same_point(p, q) for q in N.points))
        found.setdefault(key, N)

    for lab in _sorted_labels(scene.chart):
        cl = scene.closure(scene.label_index[lab])
        add(ClosedSetSample([scene.points[i] for i in cl], scene.space, 0.0))

    if candidates is None:
        eps = _eps(scene.resolution)
        for T in _chart_subsets(scene, max_chart):
            seq = [scene.class_sample(a) for a in T] * PERIOD_REPEATS
            upper = limsup_set(seq, probes, eps)
            lower = liminf_set(seq, probes, eps)
            if lower is not EMPTY and point_set_equal(upper, lower):
                add(ClosedSetSample(lower.points, scene.space, 0.0))
    else:
        if tol is None:
            tol = scene.resolution
        eps = _eps(max(tol, scene.resolution))
        for cand in candidates:
            for lab in cand:
                scene.check_label(lab)
            seq = [scene.class_sample(a) for a in cand]
            try:
                clusters = limit_classes(seq, tol, members=True)
            except MetricError as exc:
                raise QuotientError(str(exc)) from exc
            for cl in clusters:
                N = liminf_set(cl * 2, probes, eps)
                if N is not EMPTY:
                    add(ClosedSetSample(N.points, scene.space, tol))

    return [found[k] for k in sorted(found, key=lambda k: (len(k), sorted(k)))]


def _limits_and_limit_points(scene, seq):
    limits = {a for a in scene.all_labels if quotient_converges(scene, seq, a)}
    tail = list(seq)[len(seq) // 2:]
    points = set()
    for a in scene.all_labels:
        prof = _class_distance_profile(scene, a, tail)
        # a subsequence converges to a: some m in M_a stays within r of
        # infinitely many terms (at least two in the tail)
        hits = (prof <= scene.resolution).sum(axis=1)
        if hits.max() >= min(2, len(tail)):
            points.add(a)
    return limits, points


def admissible_sets_by_sequences(scene: QuotientScene, candidates=None, max_chart: int = 12) -> list[frozenset]:
    """All label sets S for which some chart sequence has exactly S as limits and limit points."""
    if candidates is None:
        seqs = [list(T) * PERIOD_REPEATS for T in _chart_subsets(scene, max_chart)]
    else:
        seqs = [list(c) for c in candidates]
    out = set()
    for seq in seqs:
        for lab in seq:
            if lab not in scene.chart:
                raise QuotientError(f"label {lab!r} is not in the chart")
        limits, points = _limits_and_limit_points(scene, seq)
        if limits and points <= limits:
            out.add(frozenset(limits))
    return sorted(out, key=lambda s: (len(s), _sorted_labels(s)))


def is_admissible_by_sequences(scene: QuotientScene, S: Iterable[Label], candidates=None,
                               max_chart: int = 12) -> bool:
    """Whether some chart sequence has every limit point in S and converges to every s in S."""
    S = set(S)
    if not S:
        raise QuotientError("S must be nonempty")
    for lab in S:
        scene.check_label(lab)
    if candidates is None:
        seqs = [list(T) * PERIOD_REPEATS for T in _chart_subsets(scene, max_chart)]
    else:
        seqs = [list(c) for c in candidates]
    for seq in seqs:
        limits, points = _limits_and_limit_points(scene, seq)
        if points <= S <= limits:
            return True
    return False


def check_chart_separation(scene: QuotientScene, factor: float = 10.0) -> list[tuple]:
    """Pairs of chart labels that the quotient sees as close but whose closures are far apart.

    A coarse surrogate for the requirement that label -> closure of its class
    is a homeomorphism on the chart: classes within resolution of each other
    should have closures within ``factor`` resolutions in the Hausdorff metric.
    """
    chart = _sorted_labels(scene.chart)
    closures = {a: ClosedSetSample([scene.points[i] for i in scene.closure(scene.label_index[a])],
                                   scene.space) for a in chart}
    bad = []
    for a, b in itertools.combinations(chart, 2):
        near = scene.dist[np.ix_(scene.label_index[a], scene.label_index[b])].min() <= scene.resolution
        if near:
            h = hausdorff_distance(closures[a], closures[b])
            if h > factor * max(scene.resolution, 1e-300):
                bad.append((a, b, h))
    return bad


def run_scene(scene: QuotientScene, tol: float | None = None, candidates=None) -> dict:
    """Everything the CLI reports for a scene."""
    members = separated_quotient(scene, tol, candidates)
    return {
        "members": [
            {"labels": _sorted_labels(labels_of(scene, N)), "sample": N.to_json()} for N in members
        ],
        "admissible": [_sorted_labels(s) for s in admissible_sets_by_sequences(scene, candidates)],
        "chart_separation_violations": [[a, b, h] for a, b, h in check_chart_separation(scene)],
    }


def line_scene(values: Sequence[float], labels=None, chart=None, resolution: float = 0.0) -> QuotientScene:
    """Scene of points on the real line; each point its own class unless labels are given."""
    labels = list(range(len(values))) if labels is None else list(labels)
    chart = set(labels) if chart is None else set(chart)
    return QuotientScene(get_space("euclidean"), [float(v) for v in values], labels, chart, resolution)
