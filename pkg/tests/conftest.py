import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from dqwalk import WalkSpec

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def walks(draw, min_n=1, max_n=10, integer=False):
    n = draw(st.integers(min_n, max_n))
    if integer:
        alphas = draw(st.lists(st.integers(1, 5), min_size=n, max_size=n))
    else:
        alphas = draw(st.lists(st.floats(0.05, 5.0), min_size=n, max_size=n))
    probs = draw(st.lists(st.floats(0.01, 0.99), min_size=n, max_size=n))
    return WalkSpec(np.array(alphas, dtype=float), np.array(probs))


def random_walk(rng, n, integer=False):
    alphas = rng.integers(1, 5, n).astype(float) if integer else rng.uniform(0.1, 3.0, n)
    return WalkSpec(alphas, rng.uniform(0.02, 0.6, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def law_deviation(law, ref, atol=1e-9):
    """Max weight deviation between a law on grid knots and an exact law.

    Every exact atom must sit on a knot (within ``atol``); knots carrying no
    exact atom are compared against weight zero.
    """
    idx = np.searchsorted(law.points, ref.points)
    idx = np.clip(idx, 0, law.points.size - 1)
    left = np.clip(idx - 1, 0, None)
    nearer = np.abs(law.points[left] - ref.points) < np.abs(law.points[idx] - ref.points)
    idx = np.where(nearer, left, idx)
    assert np.max(np.abs(law.points[idx] - ref.points)) <= atol, "exact atom off the grid"
    assert np.unique(idx).size == idx.size, "two exact atoms on one knot"
    expected = np.zeros(law.points.size)
    expected[idx] = ref.weights
    return float(np.max(np.abs(law.weights - expected)))


def pytest_terminal_summary(terminalreporter):
    results = sys.modules.get("test_acceptance")
    if results is None or not results.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results.RESULTS):
        terminalreporter.write_line(results.RESULTS[number])
