import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hybridmech import mechanisms
from hybridmech.core import Profile

import shared

settings.register_profile(
    "repo", deadline=None, max_examples=150, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

SHIPPED = mechanisms.names()


@pytest.fixture(params=SHIPPED)
def mechanism(request):
    return mechanisms.lookup(request.param)


unit = st.floats(0.0, 1.0, allow_nan=False)
bid = st.floats(0.0, 10.0, allow_nan=False)


@st.composite
def profiles(draw, allow_zero_bid=True):
    """Normalized profiles: a permutation of (1, x, 0) and two bids."""
    x = draw(unit)
    perm = draw(st.permutations([0, 1, 2]))
    values = np.empty(3)
    values[perm] = [1.0, x, 0.0]
    hi = draw(st.floats(1e-3, 10.0))
    lo = draw(st.floats(0.0 if allow_zero_bid else 1e-6, 1.0)) * hi
    w = (hi, lo) if draw(st.booleans()) else (lo, hi)
    return Profile(*values, *w)


@st.composite
def lotteries(draw):
    raw = np.array([draw(st.floats(0.0, 1.0)) for _ in range(3)]) + 1e-9
    return raw / raw.sum()


def pytest_terminal_summary(terminalreporter):
    if not shared.ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(shared.ACCEPTANCE_LINES):
        terminalreporter.write_line(shared.ACCEPTANCE_LINES[k])
