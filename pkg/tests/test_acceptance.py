"""Acceptance suite.  Each criterion prints one PASS/FAIL line.

Run alone with ``python3 -m pytest tests/test_acceptance.py -v``; the lines
are repeated in the terminal summary.
"""

import itertools
import time

import numpy as np
import pytest
from scipy.stats import ortho_group, unitary_group

from hinges.hinge import (
    DEFAULT_GRID, diagonal_family, extract_hinge_from_sample, hinge_limit, hinge_of_invertible,
    hinge_to_sample, hinges_equal, limit_of_orbit_closures, orbit_closure_sample, validate_hinge,
)
from hinges.linrel import LinearRelation, equal_mod_scale, gap_distance, scale_relation
from hinges.metric import ClosedSetSample, FiniteMetricSpace, hausdorff_distance, liminf_set, limsup_set
from hinges.quotient import (
    QuotientError, QuotientScene, is_admissible_by_sequences, labels_of, separated_quotient,
)
from hinges.symspace import (
    PD_FLOOR, SymplecticAmbient, block_in_single_basis, congruence_family, is_lagrangian, lagrangian_residual,
    pd_boundary_hinge, validate_pd_hinge,
)
from conftest import example_relations, random_relation

LINES: list[str] = []


def report(n, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {n}: {detail}"
    LINES.append(line)
    print(line)
    return passed


# -- generated hinges, shared with the round trip ----------------------------------------


def _unitary(n, rng, real=False):
    if n == 1:
        return np.ones((1, 1)) if real else np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return (ortho_group if real else unitary_group).rvs(n, random_state=rng)


def _probes(a):
    # condition number of g(t) stays near 1e8 at the largest probe, and the
    # last two probes are far enough out that unit exponent gaps read >= 100
    span = float(np.max(a) - np.min(a))
    t_max = 10.0 ** (8 / span) if span else 1e8
    return t_max * np.sqrt(10.0) ** -np.arange(5, -1, -1)


@pytest.fixture(scope="module")
def crit1():
    t0 = time.perf_counter()
    g = diagonal_family([0, 1])
    probes = 10.0 ** np.arange(1, 7)
    H = hinge_limit(lambda t: g(t).astype(complex), probes, tol=1e-6)
    L = limit_of_orbit_closures([g(t).astype(complex) for t in probes])
    d = hausdorff_distance(hinge_to_sample(H), L)
    return H, d, time.perf_counter() - t0


@pytest.fixture(scope="module")
def crit2():
    rng = np.random.default_rng(20240601)
    out = []
    t0 = time.perf_counter()
    for _ in range(200):
        n = int(rng.integers(1, 5))
        a = rng.integers(0, 4, size=n)
        g = diagonal_family(a, _unitary(n, rng), _unitary(n, rng))
        probes = _probes(a)
        H = hinge_limit(g, probes, tol=1e-6)
        passed = validate_hinge(H, 1e-6)["passed"]
        L = limit_of_orbit_closures([g(t) for t in probes[-4:]])
        N = hinge_to_sample(H)
        d = hausdorff_distance(N, L)
        out.append((H, a, passed, d, N.resolution + L.resolution))
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def crit3():
    rng = np.random.default_rng(7)
    out = []
    for i in range(100):
        n = int(rng.integers(1, 6))
        A = rng.normal(size=(n, n))
        if i % 2:
            A = A + 1j * rng.normal(size=(n, n))
        H = hinge_of_invertible(A)
        passed = validate_hinge(H)["passed"]
        S = orbit_closure_sample(LinearRelation.graph(A))
        N = hinge_to_sample(H)
        out.append((H, passed, hausdorff_distance(S, N), S.resolution))
    return out


def test_criterion_1_worked_example(crit1):
    H, d, elapsed = crit1
    V = example_relations()
    p_ok = all(equal_mod_scale(p, ref, 1e-6) for p, ref in zip(H.P, [V[1], V[3]]))
    q_gaps = [gap_distance(q.V, ref.V) for q, ref in zip(H.Q, [V[0], V[2], V[4]])]
    ok = (H.k == 2 and p_ok and max(q_gaps) <= 1e-6 and validate_hinge(H, 1e-6)["passed"]
          and d <= 0.05 and elapsed < 60)
    assert report(1, ok, f"k={H.k}, P1~V2 and P2~V4 mod scale at 1e-6, max Q gap {max(q_gaps):.1e}, "
                         f"Hausdorff to orbit-closure limit {d:.4f} <= 0.05, {elapsed:.1f}s < 60s")


def test_criterion_2_random_families(crit2):
    cases, elapsed = crit2
    fails = [(a.tolist(), d, r) for H, a, passed, d, r in cases if not passed or d > r]
    worst = max(d / r for _, _, _, d, r in cases)
    ok = not fails and elapsed < 600
    assert report(2, ok, f"{len(cases)} families, {len(fails)} failures, worst Hausdorff/resolution {worst:.3f}, "
                         f"{elapsed:.0f}s < 600s"), fails[:5]


def test_criterion_3_invertible(crit3):
    fails = [i for i, (_, passed, d, r) in enumerate(crit3) if not passed or d > r]
    worst = max(d for _, _, d, _ in crit3)
    assert report(3, not fails, f"{len(crit3)} matrices, {len(fails)} failures, max Hausdorff {worst:.1e} "
                                f"<= resolution {crit3[0][3]:.4f}"), fails


def _random_finite_space(rng):
    m = int(rng.integers(2, 41))
    X = rng.normal(size=(m, int(rng.integers(1, 4))))
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    return FiniteMetricSpace(D), m


def test_criterion_4_limsup_liminf_oracle():
    rng = np.random.default_rng(4)
    mismatches = 0
    for _ in range(50):
        F, m = _random_finite_space(rng)
        eps = F.dist[F.dist > 0].min() / 2
        probes = ClosedSetSample(list(range(m)), F)

        def random_set():
            k = int(rng.integers(1, m + 1))
            return sorted(int(i) for i in rng.choice(m, size=k, replace=False))

        prefix = [random_set() for _ in range(int(rng.integers(0, 6)))]
        period = [random_set() for _ in range(int(rng.integers(1, 7)))]
        q = len(period)
        reps = -(-(len(prefix) + 6 * q) // q)
        seq = [ClosedSetSample(s, F) for s in prefix + period * reps]
        # in a finite space the subsequential Hausdorff limits of an
        # eventually periodic sequence are exactly the sets in its period
        union = set().union(*map(set, period))
        inter = set(period[0]).intersection(*map(set, period))
        up, low = limsup_set(seq, probes, eps), liminf_set(seq, probes, eps)
        got_up = set(up.points) if up else set()
        got_low = set(low.points) if low else set()
        mismatches += (got_up != union) + (got_low != inter)
    assert report(4, mismatches == 0, f"50 random finite spaces, {mismatches} mismatches against brute force")


def _random_scene(rng):
    m = int(rng.integers(2, 13))
    X = rng.normal(size=(m, 2))
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    r = float(np.quantile(D[D > 0], rng.uniform(0.0, 0.3)))
    labels = [int(x) for x in rng.integers(0, min(m, 7), size=m)]
    chart = {lab for lab in set(labels) if rng.random() < 0.7} or {labels[0]}
    return QuotientScene(FiniteMetricSpace(D), list(range(m)), labels, chart, r)


def test_criterion_5_admissible_sets():
    rng = np.random.default_rng(5)
    scenes, skipped, mismatches = 0, 0, 0
    while scenes < 20:
        scene = _random_scene(rng)
        try:
            members = separated_quotient(scene)
        except QuotientError:
            skipped += 1  # a chart label's closure is not a union of classes
            continue
        via_limits = {frozenset(labels_of(scene, N)) for N in members}
        labs = scene.all_labels
        via_sequences = {frozenset(S) for r in range(1, len(labs) + 1) for S in itertools.combinations(labs, r)
                         if is_admissible_by_sequences(scene, S)}
        mismatches += via_limits != via_sequences or len(via_limits) != len(members)
        scenes += 1
    assert report(5, mismatches == 0, f"20 random finite scenes ({skipped} rejected by the closure condition), "
                                      f"{mismatches} mismatches")


def test_criterion_6_linrel_invariants():
    rng = np.random.default_rng(6)
    bad_dims, worst = 0, 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        field = "complex" if rng.random() < 0.7 else "real"
        V = random_relation(rng, n, field)
        d = V.dims
        bad_dims += not (d["ker"] + d["im"] == n and d["dom"] + d["indef"] == n
                         and d["dom"] - d["ker"] == d["im"] - d["indef"])
        lam = 10.0 ** rng.uniform(-3, 3)
        lam = lam * (np.exp(2j * np.pi * rng.random()) if field == "complex" else rng.choice([-1.0, 1.0]))
        W = scale_relation(lam, V)
        if W.dims != d:
            bad_dims += 1
            continue
        worst = max(worst, max(gap_distance(x, y) for x, y in zip(V.quadruple, W.quadruple)))
    assert report(6, bad_dims == 0 and worst <= 1e-10,
                  f"1000 relations, {bad_dims} dimension failures, max quadruple gap under scaling {worst:.1e} <= 1e-10")


def test_criterion_7_pd_boundary():
    rng = np.random.default_rng(8)
    worst_res, worst_ratio, fails = 0.0, np.inf, 0
    for i in range(100):
        n = int(rng.integers(1, 5))
        Qm = _unitary(n, rng, real=True)
        if i % 2:
            a = rng.integers(0, 4, size=n)
            H = pd_boundary_hinge(congruence_family(a, Qm), _probes(a))
        else:
            # coefficients in [1/2, 2] give blocks that are not multiples of I;
            # exponents stop at 2 so the groups still separate within the rank budget
            a = rng.integers(0, 3, size=n)
            c = 2.0 ** rng.uniform(-1, 1, size=n)
            H = pd_boundary_hinge(congruence_family(a, np.diag(np.sqrt(c)) @ Qm), _probes(a) / 4 ** (1 / max(np.ptp(a), 1)))
        amb = SymplecticAmbient(n)
        worst_res = max(worst_res, max(lagrangian_residual(c, amb) for c in H.components()))
        for P in H.P:
            M = block_in_single_basis(P)
            ev = np.linalg.eigvalsh((M + M.T) / 2)
            worst_ratio = min(worst_ratio, ev[0] / ev[-1])
        fails += not validate_pd_hinge(H)["passed"]
    equiv_fails = 0
    tol = 1e-8
    for i in range(500):
        n = int(rng.integers(1, 6))
        X = rng.normal(size=(n, n))
        kind = i % 4
        S = {0: X + X.T, 1: X + X.T + 1e-13 * (X - X.T), 2: X, 3: X + X.T + 1e-5 * (X - X.T)}[kind]
        sym = np.linalg.norm(S - S.T, 2) <= tol * np.linalg.norm(S, 2)
        equiv_fails += is_lagrangian(LinearRelation.graph(S), SymplecticAmbient(n), tol) != sym
    ok = fails == 0 and worst_res <= 1e-8 and worst_ratio >= PD_FLOOR and equiv_fails == 0
    assert report(7, ok, f"100 PD families: max Lagrangian residual {worst_res:.1e} <= 1e-8, "
                         f"min lambda_min/lambda_max {worst_ratio:.2e} >= 1e-8; "
                         f"500 matrices, {equiv_fails} Lagrangian/symmetric disagreements")


def test_criterion_8_round_trip(crit1, crit2, crit3):
    hinges = [crit1[0]] + [c[0] for c in crit2[0]] + [c[0] for c in crit3]
    fails = []
    for i, H in enumerate(hinges):
        try:
            E = extract_hinge_from_sample(hinge_to_sample(H, DEFAULT_GRID))
        except ValueError as exc:
            fails.append((i, str(exc)))
            continue
        if not hinges_equal(E, H, 1e-6):
            fails.append((i, "differs"))
    assert report(8, not fails, f"{len(hinges)} hinges from criteria 1-3, {len(fails)} round-trip failures"), fails[:5]
