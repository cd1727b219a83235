import itertools

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from flatgeom import Signature, Structure

# oracle checks are exhaustive, so single examples can be slow
settings.register_profile("flatgeom", deadline=None, derandomize=True)
settings.load_profile("flatgeom")


def tetrahedron():
    return Structure.ternary([1, 2, 3, 4], itertools.combinations([1, 2, 3, 4], 3))


def triangle():
    return Structure.ternary([1, 2, 3], [[1, 2, 3]])


def fan():
    # {1,2} with three one-point extensions over it
    return Structure.ternary([1, 2, 3, 4, 5], [[1, 2, 3], [1, 2, 4], [1, 2, 5]])


def isolated(n):
    return Structure.ternary(range(1, n + 1))


@pytest.fixture
def F1():
    return tetrahedron()


@pytest.fixture
def F5():
    return fan()


@pytest.fixture
def tri():
    return triangle()


TWO = Signature.of(("R", 3), ("S", 4))


@st.composite
def structures(draw, max_n=6, sig=None, max_edges=8):
    sig = sig or Signature.of(3)
    n = draw(st.integers(0, max_n))
    rel = {}
    for s in sig.symbols:
        if s.arity > n:
            continue
        subsets = st.frozensets(st.integers(1, n), min_size=s.arity, max_size=s.arity)
        rel[s.name] = draw(st.lists(subsets, max_size=max_edges, unique=True))
    return Structure.build(sig, range(1, n + 1), rel)
