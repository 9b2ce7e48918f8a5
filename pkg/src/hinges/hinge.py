"""Hinges: chains (Q0, P1, Q1, ..., Pk, Qk) of linear relations up to scalar.

Besides validation this module produces hinges two ways, which are used to
cross-check each other:

* :func:`hinge_limit` reads the limit hinge of a curve of invertible matrices
  off a singular value decomposition at the largest probe;
* :func:`limit_of_orbit_closures` takes the Hausdorff limit of the sampled
  orbit closures directly, with no knowledge of hinges at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linrel
from .linrel import (
    GRASSMANN, LinearRelation, LinrelError, Subspace, _dtype, direct_sum,
    equal_mod_scale, fixed_part, gap_distance, is_scaling_fixed, relation_gap, scale_relation,
)
from .metric import ClosedSetSample, MetricError, limit_classes


class HingeError(ValueError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class Hinge:
    n: int
    field: str
    P: list[LinearRelation]
    Q: list[LinearRelation]

    @property
    def k(self) -> int:
        return len(self.P)

    def components(self) -> list[LinearRelation]:
        """Q0, P1, Q1, ..., Pk, Qk."""
        out = [self.Q[0]]
        for p, q in zip(self.P, self.Q[1:]):
            out += [p, q]
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "field": self.field,
            "k": self.k,
            "P": [p.to_json() for p in self.P],
            "Q": [q.to_json() for q in self.Q],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Hinge":
        P = [LinearRelation.from_json(p) for p in obj["P"]]
        Q = [LinearRelation.from_json(q) for q in obj["Q"]] if "Q" in obj else derive_q(P)
        if "k" in obj and int(obj["k"]) != len(P):
            raise HingeError(f"k={obj['k']} but {len(P)} P components given")
        return cls(int(obj["n"]), obj.get("field", P[0].field), P, Q)


def derive_q(P: Sequence[LinearRelation]) -> list[LinearRelation]:
    """The fixed points Q0..Qk determined by P1..Pk."""
    if not P:
        raise HingeError("hinge needs at least one P component")
    n, f = P[0].n, P[0].field
    if any(p.n != n or p.field != f for p in P):
        raise HingeError("P components disagree on n or field")
    for a, b in zip(P, P[1:]):
        if a.ker.dim != b.dom.dim or a.im.dim != b.indef.dim:
            raise HingeError("chain dimensions inconsistent")
    Q = [LinearRelation.first_factor(n, f)]
    for p in P[:-1]:
        if p.ker.dim + p.im.dim != n:
            raise HingeError("chain dimensions inconsistent")
        Q.append(LinearRelation(direct_sum(f, n, p.ker, p.im), n))
    Q.append(LinearRelation.second_factor(n, f))
    return Q


def _full(field, n):
    return Subspace(field, np.eye(n))


def validate_hinge(H: Hinge, tol: float = 1e-8) -> dict:
    """Check the hinge axioms; every check lands in the report with its gap."""
    checks = []

    def add(axiom, what, gap):
        checks.append({"axiom": axiom, "check": what, "gap": float(gap), "passed": bool(gap <= tol)})

    n, f, k = H.n, H.field, H.k
    if len(H.Q) != k + 1:
        checks.append({"axiom": "shape", "check": f"{len(H.Q)} Q components for k={k}",
                       "gap": 1.0, "passed": False})
        return {"passed": False, "tol": tol, "checks": checks}

    for j, q in enumerate(H.Q):
        gap = relation_gap(q, LinearRelation(fixed_part(q), n)) if q.quotient_dim == 0 else 1.0
        add("0", f"Q{j} = Ker Q{j} + Indef Q{j}", gap)
    for j, p in enumerate(H.P, start=1):
        # P_j is not fixed: a nonzero quotient Dom/Ker, reported as a 0/1 gap
        add("0", f"P{j} != Ker P{j} + Indef P{j}", 0.0 if p.quotient_dim > 0 else 1.0)

    for j, p in enumerate(H.P, start=1):
        q = H.Q[j]
        add("1", f"Ker P{j} = Ker Q{j}", gap_distance(p.ker, q.ker))
        add("1", f"Im P{j} = Im Q{j}", gap_distance(p.im, q.im))
        if j < k:
            nxt = H.P[j]
            add("1", f"Ker P{j} = Dom P{j + 1}", gap_distance(p.ker, nxt.dom))
            add("1", f"Im P{j} = Indef P{j + 1}", gap_distance(p.im, nxt.indef))

    add("2", "Q0 = K^n + 0", relation_gap(H.Q[0], LinearRelation.first_factor(n, f)))
    add("2", "Dom P1 = K^n", gap_distance(H.P[0].dom, _full(f, n)))
    add("2", f"Q{k} = 0 + K^n", relation_gap(H.Q[k], LinearRelation.second_factor(n, f)))
    add("2", f"Im P{k} = K^n", gap_distance(H.P[-1].im, _full(f, n)))

    return {"passed": all(c["passed"] for c in checks), "tol": tol, "checks": checks}


def _check_invertible(A):
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0 or s[-1] <= linrel.RANK_TOL * s[0]:
        raise HingeError("matrix is singular")


def hinge_of_invertible(A) -> Hinge:
    A = np.asarray(A)
    _check_invertible(A)
    P = [LinearRelation.graph(A)]
    return Hinge(A.shape[0], P[0].field, P, derive_q(P))


def hinges_equal(H1: Hinge, H2: Hinge, tol: float = 1e-8) -> bool:
    """Component-wise equality, P's up to scalar."""
    if (H1.n, H1.field, H1.k) != (H2.n, H2.field, H2.k):
        return False
    return all(equal_mod_scale(a, b, tol) for a, b in zip(H1.P, H2.P)) and all(
        relation_gap(a, b) <= tol for a, b in zip(H1.Q, H2.Q)
    )


# -- sampling -----------------------------------------------------------------


@dataclass(frozen=True)
class ScalingGrid:
    """Log-spaced moduli times phases (signs over the reals)."""

    log_min: float = -8.0
    log_max: float = 8.0
    moduli: int = 33
    phases: int = 16
    positive_only: bool = False

    @property
    def log_step(self) -> float:
        return (self.log_max - self.log_min) / (self.moduli - 1) if self.moduli > 1 else 0.0

    def scalars(self, field: str) -> list:
        mods = np.logspace(self.log_min, self.log_max, self.moduli)
        if self.positive_only:
            return list(mods)
        if field == "real":
            return list(mods) + list(-mods)
        ph = np.exp(2j * np.pi * np.arange(self.phases) / self.phases)
        return [m * z for m in mods for z in ph]

    def resolution(self, field: str) -> float:
        """Bound on the gap from any orbit point to the nearest grid point.

        Scaling by z moves a relation by at most |z - 1| / (1 + |z|) in the
        gap metric (worst case over the principal angles); half a grid step in
        modulus and phase is the furthest an orbit point can be from the grid.
        The tail beyond the extreme moduli is within 10**log_min of the
        endpoint fixed points, which every sample contains.
        """
        r = 10 ** (self.log_step / 2)
        phi = 0.0 if (field == "real" or self.positive_only) else np.pi / self.phases
        z = r * np.exp(1j * phi)
        return float(abs(z - 1) / (1 + abs(z)) + 10 ** min(self.log_min, -self.log_max))

    def snap(self, c: float) -> float:
        """Nearest grid modulus ratio to the positive scalar c."""
        if self.log_step == 0:
            return 1.0
        return float(10 ** (self.log_step * round(math.log10(c) / self.log_step)))


DEFAULT_GRID = ScalingGrid()


def _orbit_points(V: LinearRelation, grid: ScalingGrid) -> list[LinearRelation]:
    return [scale_relation(lam, V) for lam in grid.scalars(V.field)]


def hinge_to_sample(H: Hinge, grid: ScalingGrid = DEFAULT_GRID) -> ClosedSetSample:
    """Sample of the closed set Q0 u ... u Qk u (orbits of the P_j)."""
    pts = list(H.Q)
    for p in H.P:
        pts += _orbit_points(p, grid)
    return ClosedSetSample(pts, GRASSMANN, grid.resolution(H.field))


def orbit_closure_sample(V: LinearRelation, grid: ScalingGrid = DEFAULT_GRID) -> ClosedSetSample:
    """Sample of the closure of the scaling orbit of the graph of an invertible operator."""
    if not V.is_graph_of_invertible():
        raise HingeError("relation is not the graph of an invertible operator")
    n, f = V.n, V.field
    pts = _orbit_points(V, grid) + [LinearRelation.first_factor(n, f), LinearRelation.second_factor(n, f)]
    return ClosedSetSample(pts, GRASSMANN, grid.resolution(f))


def _normalised_graph(g, grid):
    g = np.asarray(g)
    _check_invertible(g)
    s = np.linalg.svd(g, compute_uv=False)
    # the orbit closure of graph(c g) is that of graph(g); dividing by a grid
    # modulus near the geometric mean centres the orbit inside the grid
    return LinearRelation.graph(g / grid.snap(math.sqrt(s[0] * s[-1])))


def limit_of_orbit_closures(family: Sequence, grid: ScalingGrid = DEFAULT_GRID,
                            tol: float | None = None) -> ClosedSetSample:
    """Hausdorff limit of the orbit closures of graph(g_j)."""
    if len(family) == 0:
        raise HingeError("empty family")
    samples = [orbit_closure_sample(_normalised_graph(g, grid), grid) for g in family]
    if tol is None:
        tol = 2 * grid.resolution(samples[0].points[0].field)
    try:
        classes = limit_classes(samples, tol)
    except MetricError as exc:
        raise HingeError(str(exc)) from exc
    if len(classes) != 1:
        raise HingeError("sequence has multiple limit classes", report=classes)
    return classes[0]


# -- limit hinge of a curve of matrices -----------------------------------------


@dataclass
class _Decomp:
    U: np.ndarray  # left vectors, columns
    s: np.ndarray  # descending
    W: np.ndarray  # right vectors, columns


def _decompose(g, symmetric: bool) -> _Decomp:
    g = np.asarray(g)
    if symmetric:
        lam, Qm = np.linalg.eigh(g)
        if lam[0] <= 0:
            raise HingeError("symmetric family is not positive definite")
        order = np.argsort(lam)[::-1]
        return _Decomp(Qm[:, order], lam[order], Qm[:, order])
    U, s, Wh = np.linalg.svd(g)
    return _Decomp(U, s, Wh.conj().T)


SEPARATION_RATIO = 1e2


def _split_points(s: np.ndarray) -> np.ndarray:
    return s[:-1] / s[1:] >= SEPARATION_RATIO


def scale_groups(s_last: np.ndarray, s_prev: np.ndarray, t_last: float, t_prev: float) -> list[list[int]]:
    """Group the singular values (descending) by asymptotic scale.

    Neighbours are split when their ratio is at least 100 at both probes and
    the ratio grows between them at least like sqrt(t_last / t_prev); a ratio
    that is large but not growing is a fixed conditioning, not a separation.
    """
    big_last, big_prev = _split_points(s_last), _split_points(s_prev)
    if np.any(big_last != big_prev):
        raise HingeError("scales not separated at probes")
    growth = (s_last[:-1] / s_last[1:]) / (s_prev[:-1] / s_prev[1:])
    split = big_last & (growth >= math.sqrt(t_last / t_prev))
    groups, cur = [], [0]
    for i, cut in enumerate(split, start=1):
        if cut:
            groups.append(cur)
            cur = []
        cur.append(i)
    groups.append(cur)
    return groups


def _components(d: _Decomp, groups, field) -> list[LinearRelation]:
    n = d.s.size
    dt = _dtype(field)
    out = []
    for i, grp in enumerate(groups):
        before = [j for g in groups[:i] for j in g]
        after = [j for g in groups[i + 1:] for j in g]
        top = d.s[grp[0]]
        cols = []
        for j in after:
            cols.append(np.concatenate([d.W[:, j], np.zeros(n)]))
        for j in before:
            cols.append(np.concatenate([np.zeros(n), d.U[:, j]]))
        for j in grp:
            c = np.concatenate([d.W[:, j], (d.s[j] / top) * d.U[:, j]])
            cols.append(c / np.linalg.norm(c))
        F = np.array(cols, dtype=dt).T
        out.append(LinearRelation(Subspace(field, F), n))
    return out


def hinge_limit(family: Callable[[float], np.ndarray], probes: Sequence[float], tol: float = 1e-6,
                symmetric: bool = False, field: str | None = None) -> Hinge:
    """Limit hinge of the curve t -> graph(g(t)) modulo scaling, as t grows.

    At the two largest probes the singular values are grouped by scale;
    component i is the limit of graph(g(t) / s_i(t)), where s_i is the top
    singular value of group i: directions of smaller groups become kernel,
    images of larger groups become indefiniteness.  Each component is accepted
    when its values at the last two probes are within ``tol``.

    With ``symmetric`` the family must be symmetric positive definite and an
    eigendecomposition replaces the SVD, so left and right vectors coincide.
    """
    probes = sorted(float(t) for t in probes)
    if len(probes) < 2:
        raise HingeError("need at least two probes")
    if probes[0] <= 0:
        raise HingeError("probes must be positive")
    mats = {t: np.asarray(family(t)) for t in probes[-2:]}
    t_prev, t_last = probes[-2], probes[-1]
    for t, g in mats.items():
        _check_invertible(g)
    if field is None:
        field = "complex" if any(np.iscomplexobj(g) for g in mats.values()) else "real"
    d_last = _decompose(mats[t_last], symmetric)
    d_prev = _decompose(mats[t_prev], symmetric)
    groups = scale_groups(d_last.s, d_prev.s, t_last, t_prev)
    P = _components(d_last, groups, field)
    P_prev = _components(d_prev, groups, field)
    for i, (a, b) in enumerate(zip(P, P_prev), start=1):
        gap = relation_gap(a, b)
        if gap > tol:
            raise HingeError(f"component P{i} not converged at probes (gap {gap:.3g} > {tol:.3g})")
    Q = derive_q(P)
    H = Hinge(P[0].n, field, P, Q)
    report = validate_hinge(H, max(tol, 1e-8))
    if not report["passed"]:
        raise HingeError("limit failed hinge validation", report=report)
    return H


def diagonal_family(exponents: Sequence[float], left=None, right=None) -> Callable[[float], np.ndarray]:
    """t -> left @ diag(t**a) @ right."""
    a = np.asarray(exponents, dtype=float)
    L = np.eye(a.size) if left is None else np.asarray(left)
    R = np.eye(a.size) if right is None else np.asarray(right)

    def g(t):
        return L @ np.diag(t ** a) @ R

    return g


# -- recovering a hinge from a sampled closed set ----------------------------------


def extract_hinge_from_sample(N: ClosedSetSample, tol: float = 1e-6) -> Hinge:
    """Read a hinge back from a sampled union of scaling orbits.

    Fixed points give the Q's; the remaining members are clustered into
    orbits with :func:`equal_mod_scale` and each orbit contributes one P.
    Stray members that only fail to cluster because rank decisions flip at
    extreme scales (they sit within the sample resolution of a clustered
    member or a fixed point) are ignored.
    """
    if N.space_id != GRASSMANN.space_id:
        raise HingeError("sample is not over the grassmannian")
    pts: list[LinearRelation] = N.points
    fixed, moving = [], []
    for p in pts:
        (fixed if is_scaling_fixed(p, tol) else moving).append(p)
    Qs: list[LinearRelation] = []
    for q in fixed:
        if not any(relation_gap(q, r) <= tol for r in Qs):
            Qs.append(q)
    moving = [p for p in moving if not any(relation_gap(p, q) <= tol for q in Qs)]

    clusters: list[list[LinearRelation]] = []
    for p in moving:
        for cl in clusters:
            if equal_mod_scale(cl[0], p, tol):
                cl.append(p)
                break
        else:
            clusters.append([p])
    big = [cl for cl in clusters if len(cl) > 1]
    anchors = [p for cl in big for p in cl] + Qs
    for cl in clusters:
        if len(cl) == 1 and not any(relation_gap(cl[0], a) <= N.resolution for a in anchors):
            raise HingeError("sample is not a hinge set")
    if not big:
        raise HingeError("sample is not a hinge set: no orbit components")

    def interior(p):
        return min((relation_gap(p, q) for q in Qs), default=1.0)

    P = [max(cl, key=interior) for cl in big]
    P.sort(key=lambda p: (-p.ker.dim, p.im.dim))
    try:
        Q = derive_q(P)
    except HingeError as exc:
        raise HingeError(f"sample is not a hinge set: {exc}") from exc
    for q in Q:
        if not any(relation_gap(q, r) <= tol for r in Qs):
            raise HingeError("sample is not a hinge set: missing fixed point")
    if len(Qs) != len(Q):
        raise HingeError("sample is not a hinge set: extra fixed points")
    H = Hinge(P[0].n, P[0].field, P, Q)
    report = validate_hinge(H, max(tol, 1e-8))
    if not report["passed"]:
        raise HingeError("sample is not a hinge set", report=report)
    return H
