import numpy as np
import pytest

from hinges.linrel import LinearRelation


def example_relations():
    """The five relations in the limit of diag(1, t): V1, V2, V3, V4, V5."""
    cols = [
        [[1, 0, 0, 0], [0, 1, 0, 0]],  # (x, y; 0, 0)
        [[1, 0, 0, 0], [0, 1, 0, 1]],  # (x, y; 0, y)
        [[1, 0, 0, 0], [0, 0, 0, 1]],  # (x, 0; 0, y)
        [[1, 0, 1, 0], [0, 0, 0, 1]],  # (x, 0; x, y)
        [[0, 0, 1, 0], [0, 0, 0, 1]],  # (0, 0; x, y)
    ]
    return [LinearRelation.from_columns(np.array(c, dtype=complex).T, "complex", 2) for c in cols]


@pytest.fixture
def V():
    return dict(zip(range(1, 6), example_relations()))


def random_relation(rng, n, field="complex", dim_hint=None):
    """A random n-dimensional relation with frequently degenerate blocks."""
    kind = rng.integers(0, 4)
    if field == "complex":
        F = rng.normal(size=(2 * n, n)) + 1j * rng.normal(size=(2 * n, n))
    else:
        F = rng.normal(size=(2 * n, n))
    if kind == 1:  # singular top block: nonzero Indef
        r = rng.integers(0, n)
        F[:n] = F[:n, :r] @ rng.normal(size=(r, n)) if r else 0
    elif kind == 2:  # singular bottom block: nonzero Ker
        r = rng.integers(0, n)
        F[n:] = F[n:, :r] @ rng.normal(size=(r, n)) if r else 0
    elif kind == 3:  # both
        r, s = rng.integers(0, n + 1, size=2)
        F[:n, : n - r] = 0
        F[n:, n - s:] = 0
        if np.linalg.matrix_rank(F) < n:
            F = rng.normal(size=(2 * n, n)).astype(F.dtype)
    return LinearRelation.from_columns(F, field, n)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
