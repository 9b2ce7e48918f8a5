import numpy as np
import pytest

from hinges.metric import ClosedSetSample, FiniteMetricSpace, get_space
from hinges.quotient import (
    QuotientError, QuotientScene, admissible_sets_by_sequences, check_chart_separation, check_partition_star,
    is_admissible_by_sequences, labels_of, line_scene, quotient_converges, run_scene, separated_quotient,
)

R = 0.05


@pytest.fixture
def harmonic():
    """0 and 1/j on the line; labels are the points' indices, 0 is label 0."""
    vals = [0.0] + [1.0 / j for j in range(1, 41)]
    return line_scene(vals, resolution=R)


def test_converges_constant(harmonic):
    assert quotient_converges(harmonic, [3] * 10, 3)


def test_converges_harmonic(harmonic):
    seq = list(range(1, 41))
    assert quotient_converges(harmonic, seq, 0)
    assert not quotient_converges(harmonic, seq, 1)


def test_converges_unknown_label(harmonic):
    with pytest.raises(QuotientError):
        quotient_converges(harmonic, [1, 2], 99)


def test_star_examples(harmonic):
    everything = set(harmonic.all_labels)
    assert check_partition_star(harmonic, everything) == everything
    B = set(range(1, 41))
    assert check_partition_star(harmonic, B) == B | {0}


def test_star_violation():
    scene = line_scene([0.0, 0.04, 1.0], labels=["a", "b", "b"], resolution=R)
    with pytest.raises(QuotientError, match="not a union of classes"):
        check_partition_star(scene, ["a"])


def test_discrete_scene_members_are_singletons():
    scene = line_scene([0.0, 1.0, 2.0])
    members = separated_quotient(scene)
    assert [labels_of(scene, N) for N in members] == [{0}, {1}, {2}]


def test_harmonic_members(harmonic):
    scene = line_scene(harmonic.points, chart=range(1, 41), resolution=R)
    cands = [[j] * 4 for j in range(1, 41)] + [list(range(1, 41))]
    found = [labels_of(scene, N) for N in separated_quotient(scene, R, candidates=cands)]
    # well separated points stay singletons; the limit 0 shows up in a member
    for j in (1, 2, 3):
        assert {j} in found
    assert any(0 in S for S in found)
    assert all(S <= set(scene.all_labels) for S in found)


def test_labels_of_examples():
    scene = line_scene([0.0, 1.0, 2.0, 2.01], labels=["a", "b", "c", "c"], resolution=0.02)
    assert labels_of(scene, scene.class_sample("a")) == {"a"}
    both = ClosedSetSample([0.0, 2.0, 2.01], get_space("euclidean"), 0.0)
    assert labels_of(scene, both) == {"a", "c"}
    with pytest.raises(QuotientError, match="not saturated"):
        labels_of(scene, ClosedSetSample([2.0], get_space("euclidean"), 0.0))


def test_admissible_examples(harmonic):
    assert is_admissible_by_sequences(harmonic, {1}, candidates=[[1] * 4])
    # 1/5 has neighbours within resolution, so a constant sequence has three limits
    assert not is_admissible_by_sequences(harmonic, {5}, candidates=[[5] * 4])
    scene = line_scene(harmonic.points, chart=range(1, 41), resolution=R)
    # at resolution R, 1/j for large j cannot be told apart from 0: the label
    # nearest 0 repeated certifies the cluster of labels within R of it
    near_zero = {lab for lab in scene.all_labels if scene.points[lab] <= 1 / 40 + R}
    assert 0 in near_zero and 1 not in near_zero
    assert is_admissible_by_sequences(scene, near_zero, candidates=[[40] * 8])
    assert not is_admissible_by_sequences(scene, {0, 1}, candidates=[[40] * 8, list(range(1, 41))])
    assert not is_admissible_by_sequences(line_scene([0.0, 0.5, 1.0], resolution=R), {0, 2})


def test_admissible_needs_nonempty(harmonic):
    with pytest.raises(QuotientError):
        is_admissible_by_sequences(harmonic, set())


def _random_scene(rng):
    m = int(rng.integers(2, 13))
    X = rng.normal(size=(m, 2))
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    r = float(np.quantile(D[D > 0], rng.uniform(0.0, 0.3))) if m > 1 else 0.0
    nlab = int(rng.integers(1, m + 1))
    labels = [int(x) for x in rng.integers(0, nlab, size=m)]
    chart = {lab for lab in set(labels) if rng.random() < 0.7} or {labels[0]}
    return QuotientScene(FiniteMetricSpace(D), list(range(m)), labels, chart, r)


def test_two_descriptions_agree_on_random_scenes():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 10:
        scene = _random_scene(rng)
        try:
            members = separated_quotient(scene)
        except QuotientError:
            continue  # a chart closure splits a class
        via_limits = {frozenset(labels_of(scene, N)) for N in members}
        assert len(via_limits) == len(members)
        assert via_limits == set(admissible_sets_by_sequences(scene))
        for S in via_limits:
            assert is_admissible_by_sequences(scene, S)
        checked += 1


def test_scene_json_round_trip():
    scene = line_scene([0.0, 0.5, 1.0], labels=["x", "y", "y"], chart=["x"], resolution=0.1)
    back = QuotientScene.from_json(scene.to_json())
    assert back.to_json() == scene.to_json()


def test_scene_validation():
    with pytest.raises(QuotientError):
        line_scene([0.0, 1.0], labels=["a"])
    with pytest.raises(QuotientError):
        line_scene([0.0, 1.0], chart=["zz"])


def test_chart_separation_surrogate():
    # a and b touch at resolution, but b's closure drags in a far-off class c
    scene = line_scene([0.0, 0.01, 5.0, 5.005], labels=["a", "b", "b", "c"], chart=["a", "b"], resolution=0.01)
    bad = check_chart_separation(scene)
    assert [(a, b) for a, b, _ in bad] == [("a", "b")]
    assert check_chart_separation(line_scene([0.0, 1.0, 2.0], resolution=0.01)) == []


def test_run_scene_payload():
    out = run_scene(line_scene([0.0, 0.5], labels=["a", "b"], resolution=0.01))
    assert [m["labels"] for m in out["members"]] == [["a"], ["b"]]
    assert out["admissible"] == [["a"], ["b"]]
    assert out["chart_separation_violations"] == []
