from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from lpstat import DiscreteDist, load_dataset


@pytest.fixture(scope="session")
def fisher():
    return load_dataset("fisher")


@pytest.fixture(scope="session")
def fisher_probs():
    return load_dataset("fisher_probs")


@pytest.fixture(scope="session")
def wais():
    return load_dataset("wais")


def masses_strategy(min_k=2, max_k=12):
    return st.lists(st.floats(0.01, 1.0), min_size=min_k, max_size=max_k).map(
        lambda w: np.asarray(w) / np.sum(w)
    )


@st.composite
def discrete_dists(draw, min_k=2, max_k=12):
    p = draw(masses_strategy(min_k, max_k))
    steps = draw(st.lists(st.floats(0.1, 5.0), min_size=p.size, max_size=p.size))
    atoms = np.cumsum(steps) - 3.0
    return DiscreteDist(atoms, p)


@st.composite
def joint_tables(draw, max_i=10, max_j=10):
    I = draw(st.integers(2, max_i))
    J = draw(st.integers(2, max_j))
    cells = draw(st.lists(st.floats(0.01, 1.0), min_size=I * J, max_size=I * J))
    P = np.asarray(cells).reshape(I, J)
    return P / P.sum()


def exact_scores(masses, m):
    """Gram-Schmidt on raw powers of (Fmid - 1/2) in rational arithmetic.

    Returns float scores normalised to unit variance and signed positive
    at the largest atom.
    """
    p = [Fraction(x).limit_denominator(10**12) for x in masses]
    tot = sum(p)
    p = [x / tot for x in p]
    cum, mid = Fraction(0), []
    for x in p:
        mid.append(cum + x / 2 - Fraction(1, 2))
        cum += x
    ip = lambda a, b: sum(w * s * t for w, s, t in zip(p, a, b))
    basis = [[Fraction(1)] * len(p)]
    for j in range(1, m + 1):
        v = [t**j for t in mid]
        for q in basis:
            c = ip(v, q) / ip(q, q)
            v = [a - c * b for a, b in zip(v, q)]
        basis.append(v)
    out = []
    for v in basis[1:]:
        norm = float(ip(v, v)) ** 0.5
        f = np.array([float(a) for a in v]) / norm
        out.append(f if f[-1] > 0 else -f)
    return np.array(out)


# one line per acceptance criterion, echoed at the end of every run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
