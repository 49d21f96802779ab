import numpy as np
import pytest
from hypothesis import strategies as st

from bundlereach.poly import MultiPoly


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_poly(rng, nvars, max_deg=3, nterms=5, scale=5.0):
    terms = {}
    for _ in range(nterms):
        exps = tuple(int(e) for e in rng.integers(0, max_deg + 1, size=nvars))
        terms[exps] = float(rng.uniform(-scale, scale))
    return MultiPoly(nvars, terms)


@st.composite
def polys(draw, nvars=None, max_deg=3, max_terms=5):
    n = draw(st.integers(1, 3)) if nvars is None else nvars
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        exps = tuple(draw(st.lists(st.integers(0, max_deg), min_size=n, max_size=n)))
        terms[exps] = draw(st.floats(-5, 5, allow_nan=False))
    return MultiPoly(n, terms)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
