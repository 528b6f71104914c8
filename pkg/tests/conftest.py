import numpy as np
import pytest
from hypothesis import strategies as st

from isoloewner.isomonodromy import diagonal_family, random_family

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


@st.composite
def traceless(draw):
    a, b, c = draw(complexes), draw(complexes), draw(complexes)
    return np.array([[a, b], [c, -a]], dtype=complex)


@pytest.fixture
def diag_fam():
    return diagonal_family(2.0)


@pytest.fixture
def fam2():
    return random_family(np.random.default_rng(0), 2)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
