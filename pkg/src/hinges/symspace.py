"""Lagrangian relations in R^n (+) R^n and positive-definite boundary hinges.

Graphs of symmetric matrices are exactly the Lagrangian graphs for the form
J = [[0, I], [-I, 0]]; the congruence action S -> g^T S g of GL_n(R) moves
the identity through all positive definite matrices.  Limits of such curves
modulo positive scalars are hinges whose components stay Lagrangian and
whose induced blocks stay positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hinge import Hinge, HingeError, ScalingGrid, hinge_limit, validate_hinge
from . import linrel
from .linrel import LinearRelation, Subspace

PD_FLOOR = 1e-8

# positive moduli only: the acting group is the positive reals
POSITIVE_GRID = ScalingGrid(positive_only=True)


class SymspaceError(ValueError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SymplecticAmbient:
    n: int

    @property
    def J(self) -> np.ndarray:
        n = self.n
        return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])


def _frame(V) -> np.ndarray:
    return V.frame if isinstance(V, (Subspace, LinearRelation)) else np.asarray(V)


def lagrangian_residual(V, amb: SymplecticAmbient) -> float:
    F = _frame(V)
    if F.shape[0] != 2 * amb.n:
        raise SymspaceError(f"ambient dimension {F.shape[0]} != {2 * amb.n}")
    if np.iscomplexobj(F):
        raise SymspaceError("real field required")
    return float(np.abs(F.T @ amb.J @ F).max()) if F.shape[1] else 0.0


def is_lagrangian(V, amb: SymplecticAmbient, tol: float = 1e-8) -> bool:
    """dim V = n and the skew form vanishes on V."""
    if _frame(V).shape[1] != amb.n:
        if _frame(V).shape[0] != 2 * amb.n:
            raise SymspaceError("wrong ambient dimension")
        return False
    return lagrangian_residual(V, amb) <= tol


def congruence_act(g, S) -> np.ndarray:
    """g^T S g."""
    g = np.asarray(g, dtype=float)
    s = np.linalg.svd(g, compute_uv=False)
    if s[-1] <= linrel.RANK_TOL * s[0]:
        raise SymspaceError("g is singular")
    X = g.T @ np.asarray(S, dtype=float) @ g
    return (X + X.T) / 2


def act_on_relation(g, V: LinearRelation) -> LinearRelation:
    """The action on relations extending S -> g^T S g on graphs: (h, p) -> (g^-1 h, g^T p)."""
    g = np.asarray(g, dtype=float)
    n = V.n
    F = np.vstack([np.linalg.solve(g, V.frame[:n]), g.T @ V.frame[n:]])
    return LinearRelation(Subspace(V.field, np.linalg.qr(F)[0]), n)


def block_in_single_basis(P: LinearRelation) -> np.ndarray:
    """<P> written in one orthonormal basis of Dom P minus Ker P.

    For a Lagrangian relation that complement coincides with Im P minus
    Indef P, so the block is a square matrix on a single space and its
    symmetry and definiteness make sense.
    """
    D, _ = P.quotient_bases
    return P.induced_operator(dom_basis=D, im_basis=D).matrix


def validate_pd_hinge(H: Hinge, amb: SymplecticAmbient | None = None, tol: float = 1e-8) -> dict:
    """Hinge axioms plus Lagrangian residuals and the eigenvalues of each <P_j>."""
    if H.field != "real":
        raise SymspaceError("real field required")
    amb = SymplecticAmbient(H.n) if amb is None else amb
    report = validate_hinge(H, tol)
    report["lagrangian_residual"] = {}
    for name, V in zip(_names(H.k), H.components()):
        res = lagrangian_residual(V, amb)
        report["lagrangian_residual"][name] = res
        report["checks"].append({"axiom": "lagrangian", "check": f"{name} Lagrangian",
                                 "gap": res, "passed": bool(res <= tol)})
    report["block_eigenvalues"] = {}
    report["block_skew_residual"] = {}
    for j, P in enumerate(H.P, start=1):
        M = block_in_single_basis(P)
        sym = (M + M.T) / 2
        ev = np.linalg.eigvalsh(sym)
        report["block_eigenvalues"][f"P{j}"] = ev.tolist()
        report["block_skew_residual"][f"P{j}"] = float(np.abs(M - M.T).max())
        ok = bool(ev[0] > 0 and ev[0] >= PD_FLOOR * ev[-1])
        report["checks"].append({"axiom": "pd", "check": f"<P{j}> positive definite",
                                 "gap": float(ev[0]), "passed": ok})
    report["passed"] = all(c["passed"] for c in report["checks"])
    return report


def _names(k):
    out = ["Q0"]
    for j in range(1, k + 1):
        out += [f"P{j}", f"Q{j}"]
    return out


def pd_boundary_hinge(family: Callable[[float], np.ndarray], probes: Sequence[float],
                      tol: float = 1e-6) -> Hinge:
    """Boundary hinge of a curve of symmetric positive definite matrices."""
    amb = None
    for t in sorted(probes)[-2:]:
        S = np.asarray(family(t), dtype=float)
        if np.abs(S - S.T).max() > 1e-12 * max(1.0, np.abs(S).max()):
            raise SymspaceError("family is not symmetric")
        amb = SymplecticAmbient(S.shape[0])
    try:
        H = hinge_limit(lambda t: np.asarray(family(t), dtype=float), probes, tol, symmetric=True, field="real")
    except HingeError as exc:
        raise SymspaceError(str(exc), report=exc.report) from exc
    report = validate_pd_hinge(H, amb, max(tol, 1e-8))
    if not report["passed"]:
        failing = [c for c in report["checks"] if not c["passed"]]
        raise SymspaceError(f"boundary hinge check failed: {failing[0]['check']}", report=report)
    return H


def congruence_family(exponents: Sequence[float], g=None) -> Callable[[float], np.ndarray]:
    """t -> g^T diag(t**a) g."""
    a = np.asarray(exponents, dtype=float)
    G = np.eye(a.size) if g is None else np.asarray(g, dtype=float)

    def S(t):
        return congruence_act(G, np.diag(t ** a))

    return S
