"""Subspaces of K^n (+) K^n, the gap metric, and linear relations.

A linear relation is an n-dimensional subspace V of K^n (+) K^n.  Vectors are
written (h, p) with h in the first factor and p in the second.  Frames are
stored with orthonormal columns; rank decisions use a singular-value cutoff
relative to the largest singular value (or to 1 for blocks of orthonormal
frames, whose singular values live in [0, 1]).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .metric import MetricSpace, register_space

RANK_TOL = 1e-9
# gaps below this are roundoff and reported as exactly zero
GAP_FLOOR = 64 * np.finfo(float).eps
FIELDS = ("real", "complex")


class LinrelError(ValueError):
    pass


def _dtype(field):
    if field not in FIELDS:
        raise LinrelError(f"unknown field {field!r}")
    return np.float64 if field == "real" else np.complex128


def numerical_rank(s: np.ndarray, scale: float | None = None, rank_tol: float | None = None) -> int:
    rank_tol = RANK_TOL if rank_tol is None else rank_tol
    if s.size == 0:
        return 0
    ref = s.max() if scale is None else scale
    if ref == 0:
        return 0
    return int(np.count_nonzero(s > rank_tol * ref))


def _canonical_signs(frame: np.ndarray) -> np.ndarray:
    # make the largest-modulus entry of each column real and positive
    if frame.shape[1] == 0:
        return frame
    idx = np.argmax(np.abs(frame), axis=0)
    piv = frame[idx, np.arange(frame.shape[1])]
    return frame * (np.abs(piv) / piv)


class Subspace:
    """A subspace of K^m stored as an m x d matrix with orthonormal columns."""

    __slots__ = ("field", "frame")

    def __init__(self, field: str, frame: np.ndarray):
        self.field = field
        self.frame = np.asarray(frame, dtype=_dtype(field))
        self.frame.setflags(write=False)

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> np.ndarray:
        F = self.frame
        return F @ F.conj().T

    def contains(self, other: "Subspace", tol: float = 1e-9) -> bool:
        """Whether ``other`` lies inside this subspace."""
        if other.dim == 0:
            return True
        R = other.frame - self.frame @ (self.frame.conj().T @ other.frame)
        return float(np.linalg.norm(R, 2)) <= tol

    def __repr__(self):
        return f"Subspace({self.field}, dim={self.dim}/{self.ambient_dim})"


def span_from_columns(field: str, ambient_dim: int, columns, rank_tol: float | None = None) -> Subspace:
    X = np.asarray(columns, dtype=_dtype(field))
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != ambient_dim:
        raise LinrelError(f"columns have {X.shape[0]} rows, expected {ambient_dim}")
    if X.shape[1] == 0:
        return Subspace(field, np.zeros((ambient_dim, 0)))
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    r = numerical_rank(s, rank_tol=rank_tol)
    return Subspace(field, _canonical_signs(U[:, :r]))


def _orth(field, ambient_dim, X, dim):
    """Orthonormal basis of the top ``dim`` left singular directions of X."""
    if dim == 0:
        return Subspace(field, np.zeros((ambient_dim, 0)))
    U, _, _ = np.linalg.svd(X, full_matrices=False)
    return Subspace(field, _canonical_signs(U[:, :dim]))


def gap_distance(U: Subspace, V: Subspace) -> float:
    """Norm of the difference of the orthogonal projectors onto U and V.

    Computed as ``max(||(I - P_U) V||, ||(I - P_V) U||)``, which equals the
    projector-difference norm and keeps small angles accurate.
    """
    if U.ambient_dim != V.ambient_dim or U.field != V.field:
        raise LinrelError("subspaces live in different ambient spaces")
    if U.dim == 0 and V.dim == 0:
        return 0.0
    if U.dim == 0 or V.dim == 0:
        return 1.0
    A, B = U.frame, V.frame
    r1 = np.linalg.norm(B - A @ (A.conj().T @ B), 2)
    r2 = np.linalg.norm(A - B @ (B.conj().T @ A), 2)
    g = max(r1, r2)
    return 0.0 if g < GAP_FLOOR else float(min(1.0, g))


def direct_sum(field: str, n: int, first: Subspace, second: Subspace) -> Subspace:
    """``first (+) 0  +  0 (+) second`` inside K^n (+) K^n."""
    dt = _dtype(field)
    F = np.zeros((2 * n, first.dim + second.dim), dtype=dt)
    F[:n, : first.dim] = first.frame
    F[n:, first.dim:] = second.frame
    return Subspace(field, F)


@dataclass(frozen=True)
class InducedOperator:
    """The invertible map Dom V / Ker V -> Im V / Indef V.

    ``dom_basis`` spans Dom V minus Ker V (orthogonal complement inside Dom),
    ``im_basis`` spans Im V minus Indef V; ``matrix`` sends coordinates in the
    first basis to coordinates in the second.
    """

    dom_basis: np.ndarray
    im_basis: np.ndarray
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


class LinearRelation:
    """An n-dimensional subspace of K^n (+) K^n."""

    def __init__(self, subspace: Subspace, n: int | None = None):
        if n is None:
            n = subspace.ambient_dim // 2
        if subspace.ambient_dim != 2 * n:
            raise LinrelError(f"ambient dimension {subspace.ambient_dim} != 2n = {2 * n}")
        if subspace.dim != n:
            raise LinrelError(f"relation must have dimension n={n}, got {subspace.dim}")
        self.V = subspace
        self.n = n

    @classmethod
    def from_columns(cls, columns, field: str = "complex", n: int | None = None):
        X = np.asarray(columns)
        if X.ndim == 1:
            X = X[:, None]
        if n is None:
            n = X.shape[0] // 2
        return cls(span_from_columns(field, 2 * n, X), n)

    @classmethod
    def graph(cls, A, field: str | None = None) -> "LinearRelation":
        """The relation {(h, A h)}."""
        A = np.asarray(A)
        if field is None:
            field = "complex" if np.iscomplexobj(A) else "real"
        n = A.shape[0]
        if A.shape != (n, n):
            raise LinrelError("graph needs a square matrix")
        cols = np.vstack([np.eye(n), A])
        return cls(Subspace(field, np.linalg.qr(cols.astype(_dtype(field)))[0]), n)

    @classmethod
    def first_factor(cls, n: int, field: str = "complex") -> "LinearRelation":
        """K^n (+) 0."""
        F = np.zeros((2 * n, n))
        F[:n] = np.eye(n)
        return cls(Subspace(field, F), n)

    @classmethod
    def second_factor(cls, n: int, field: str = "complex") -> "LinearRelation":
        """0 (+) K^n."""
        F = np.zeros((2 * n, n))
        F[n:] = np.eye(n)
        return cls(Subspace(field, F), n)

    @property
    def field(self) -> str:
        return self.V.field

    @property
    def frame(self) -> np.ndarray:
        return self.V.frame

    # -- invariant subspaces ------------------------------------------------

    @cached_property
    def _blocks(self):
        n = self.n
        top, bot = self.frame[:n], self.frame[n:]
        Ut, st, Vth = np.linalg.svd(top)
        Ub, sb, Vbh = np.linalg.svd(bot)
        # blocks of an orthonormal frame: singular values are in [0, 1]
        rt = numerical_rank(st, scale=1.0)
        rb = numerical_rank(sb, scale=1.0)
        return top, bot, (Ut, st, Vth, rt), (Ub, sb, Vbh, rb)

    @cached_property
    def quadruple(self) -> tuple[Subspace, Subspace, Subspace, Subspace]:
        """(ker, im, dom, indef), each a subspace of K^n."""
        n, f = self.n, self.field
        top, bot, (Ut, st, Vth, rt), (Ub, sb, Vbh, rb) = self._blocks
        null_bot = Vbh[rb:].conj().T
        null_top = Vth[rt:].conj().T
        ker = _orth(f, n, top @ null_bot, n - rb)
        indef = _orth(f, n, bot @ null_top, n - rt)
        dom = Subspace(f, _canonical_signs(Ut[:, :rt]))
        im = Subspace(f, _canonical_signs(Ub[:, :rb]))
        return ker, im, dom, indef

    @property
    def ker(self) -> Subspace:
        return self.quadruple[0]

    @property
    def im(self) -> Subspace:
        return self.quadruple[1]

    @property
    def dom(self) -> Subspace:
        return self.quadruple[2]

    @property
    def indef(self) -> Subspace:
        return self.quadruple[3]

    @property
    def dims(self) -> dict[str, int]:
        ker, im, dom, indef = self.quadruple
        return {"ker": ker.dim, "im": im.dim, "dom": dom.dim, "indef": indef.dim}

    @property
    def quotient_dim(self) -> int:
        return self.dom.dim - self.ker.dim

    def _complement(self, big: Subspace, small: Subspace) -> np.ndarray:
        m = big.dim - small.dim
        X = big.frame - small.frame @ (small.frame.conj().T @ big.frame)
        return _orth(self.field, self.n, X, m).frame

    @cached_property
    def quotient_bases(self) -> tuple[np.ndarray, np.ndarray]:
        ker, im, dom, indef = self.quadruple
        return self._complement(dom, ker), self._complement(im, indef)

    def induced_operator(self, dom_basis: np.ndarray | None = None,
                         im_basis: np.ndarray | None = None) -> InducedOperator:
        """Matrix of <V> : Dom/Ker -> Im/Indef.

        Bases default to the stored orthonormal quotient bases.  Either may be
        replaced by another orthonormal basis of the same complement (used to
        compare operators of different relations, or to read a Lagrangian
        block in a single basis).
        """
        D0, E0 = self.quotient_bases
        D = D0 if dom_basis is None else dom_basis
        E = E0 if im_basis is None else im_basis
        if D.shape[1] == 0:
            return InducedOperator(D, E, np.zeros((0, 0), dtype=self.frame.dtype))
        top, bot, (Ut, st, Vth, rt), _ = self._blocks
        # minimum-norm coefficients c with top @ c = D, then p = bot @ c
        coeff = Vth[:rt].conj().T @ ((Ut[:, :rt].conj().T @ D) / st[:rt, None])
        M = E.conj().T @ (bot @ coeff)
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= RANK_TOL * s[0]:
            raise LinrelError("relation does not induce invertible operator")
        return InducedOperator(D, E, M)

    def is_graph_of_invertible(self) -> bool:
        d = self.dims
        return d["ker"] == 0 and d["indef"] == 0

    def operator(self) -> np.ndarray:
        """For the graph of an operator A, return A in standard coordinates."""
        d = self.dims
        if d["indef"] != 0 or d["dom"] != self.n:
            raise LinrelError("relation is not the graph of an everywhere-defined operator")
        top, bot = self.frame[: self.n], self.frame[self.n:]
        return bot @ np.linalg.inv(top)

    def __repr__(self):
        d = self.dims
        return f"LinearRelation(n={self.n}, {self.field}, ker={d['ker']}, im={d['im']}, dom={d['dom']}, indef={d['indef']})"

    # -- JSON --------------------------------------------------------------

    def to_json(self) -> dict:
        return {"n": self.n, "field": self.field, "frame": matrix_to_json(self.frame)}

    @classmethod
    def from_json(cls, obj: dict) -> "LinearRelation":
        field = obj.get("field", "complex")
        F = matrix_from_json(obj["frame"])
        n = int(obj["n"])
        if field == "real" and np.iscomplexobj(F):
            raise LinrelError("real relation with complex frame")
        F = np.asarray(F, dtype=_dtype(field))
        Q = F
        # keep stored frames bit for bit; re-orthonormalise anything else
        if F.shape[1] and np.abs(F.conj().T @ F - np.eye(F.shape[1])).max() > 1e-12:
            Q = np.linalg.qr(F)[0]
        rel = cls(Subspace(field, Q), n)
        if F.shape[1] and numerical_rank(np.linalg.svd(F, compute_uv=False)) != n:
            raise LinrelError("frame is rank deficient")
        return rel


def matrix_to_json(M: np.ndarray) -> dict:
    M = np.asarray(M)
    out = {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "re": np.real(M).tolist()}
    if np.iscomplexobj(M):
        out["im"] = np.imag(M).tolist()
    return out


def matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    re = np.asarray(obj["re"], dtype=float).reshape(rows, cols)
    if "im" in obj:
        return re + 1j * np.asarray(obj["im"], dtype=float).reshape(rows, cols)
    return re


def relation_gap(P: LinearRelation, Q: LinearRelation) -> float:
    return gap_distance(P.V, Q.V)


def scale_relation(lam, V: LinearRelation) -> LinearRelation:
    """lam V = {(h, lam p) : (h, p) in V}.

    The frame is first rotated into its cosine-sine form (columns (a_i, b_i)
    with the a_i and the b_i each mutually orthogonal), so scaling just
    rescales each column.
    """
    if lam == 0:
        raise LinrelError("lambda = 0 is not a group element")
    if V.field == "real" and np.iscomplexobj(lam) and np.imag(lam) != 0:
        raise LinrelError("complex scalar on a real relation")
    if V.field == "real":
        lam = float(np.real(lam))
    n = V.n
    F = V.frame
    _, _, Wh = np.linalg.svd(F[n:])
    G = F @ Wh.conj().T
    a, b = G[:n], G[n:] * lam
    norms = np.sqrt(np.sum(np.abs(a) ** 2, axis=0) + np.sum(np.abs(b) ** 2, axis=0))
    H = np.vstack([a, b]) / norms
    return LinearRelation(Subspace(V.field, H), n)


def fixed_part(V: LinearRelation) -> Subspace:
    """Ker V (+) Indef V as a subspace of K^n (+) K^n."""
    return direct_sum(V.field, V.n, V.ker, V.indef)


def is_scaling_fixed(V: LinearRelation, tol: float = 1e-8) -> bool:
    """V = Ker V (+) Indef V, i.e. V is a fixed point of the scaling action."""
    if V.quotient_dim != 0:
        return False
    return gap_distance(V.V, fixed_part(V)) <= tol


def quadruple_gap(P: LinearRelation, Q: LinearRelation) -> float:
    return max(gap_distance(a, b) for a, b in zip(P.quadruple, Q.quadruple))


def scale_ratio(P: LinearRelation, Q: LinearRelation) -> complex | float | None:
    """Scalar lam with lam P close to Q, read off the induced operators.

    Assumes P and Q share their quadruple.  Returns None when the induced
    operators are empty (fixed points) or the read-off ratio is zero.
    """
    if P.quotient_dim == 0:
        return None
    D, E = P.quotient_bases
    MP = P.induced_operator().matrix
    MQ = Q.induced_operator(dom_basis=D, im_basis=E).matrix
    idx = np.unravel_index(np.argmax(np.abs(MP)), MP.shape)
    lam = MQ[idx] / MP[idx]
    if lam == 0:
        return None
    if P.field == "real":
        lam = float(np.real(lam))
    return lam


def equal_mod_scale(P: LinearRelation, Q: LinearRelation, tol: float = 1e-8) -> bool:
    """Whether lam P = Q (within gap ``tol``) for some nonzero scalar lam."""
    if P.n != Q.n or P.field != Q.field:
        return False
    if P.dims != Q.dims or quadruple_gap(P, Q) > tol:
        return False
    if P.quotient_dim == 0:
        return relation_gap(P, Q) <= tol
    lam = scale_ratio(P, Q)
    if lam is None:
        return False
    return relation_gap(scale_relation(lam, P), Q) <= tol


class GrassmannSpace(MetricSpace):
    """Points are LinearRelation objects; the distance is the gap metric."""

    space_id = "grassmann-gap"
    diameter = 1.0

    def distance(self, a, b):
        return gap_distance(a.V, b.V)

    def pairwise(self, xs, ys):
        return _batched_gap(_stack(xs), _stack(ys))

    def nearest(self, xs, ys):
        # The Frobenius projector distance f satisfies gap <= f <= sqrt(2m) gap
        # (m = subspace dim), so only candidates with f / sqrt(2m) <= min f can
        # realise the minimal gap; exact gaps are evaluated for those alone.
        if len(ys) == 0:
            return np.full(len(xs), np.inf)
        X, Y = _stack(xs), _stack(ys)
        if X.shape[2] != Y.shape[2]:
            return np.ones(len(xs))
        m = X.shape[2]
        PX = np.einsum("aik,ajk->aij", X, X.conj()).reshape(len(xs), -1)
        PY = np.einsum("aik,ajk->aij", Y, Y.conj()).reshape(len(ys), -1)
        f2 = 2 * m - 2 * np.real(PX.conj() @ PY.T)
        f = np.sqrt(np.clip(f2, 0, None))
        best = f.min(axis=1)
        out = np.empty(len(xs))
        for i in range(len(xs)):
            cand = np.nonzero(f[i] / np.sqrt(2 * m) <= best[i] + 1e-6)[0]
            out[i] = _batched_gap(X[i:i + 1], Y[cand]).min()
        return out

    def encode_point(self, p):
        return p.to_json()

    def decode_point(self, obj):
        return LinearRelation.from_json(obj)


def _stack(rels) -> np.ndarray:
    return np.stack([r.frame for r in rels])


def _batched_gap(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Gap distances between every frame in X and every frame in Y (equal dims)."""
    if X.shape[2] != Y.shape[2]:
        return np.ones((len(X), len(Y)))
    C = np.einsum("aki,bkj->abij", X.conj(), Y)  # X^H Y
    R1 = Y[None] - np.einsum("aki,abij->abkj", X, C)  # (I - P_X) Y
    R2 = X[:, None] - np.einsum("bkj,abij->abki", Y, C.conj())  # (I - P_Y) X
    e1 = np.linalg.eigvalsh(np.einsum("abki,abkj->abij", R1.conj(), R1))[..., -1]
    e2 = np.linalg.eigvalsh(np.einsum("abki,abkj->abij", R2.conj(), R2))[..., -1]
    g = np.sqrt(np.clip(np.maximum(e1, e2), 0.0, 1.0))
    g[g < GAP_FLOOR] = 0.0
    return g


GRASSMANN = register_space(GrassmannSpace())
