import numpy as np
import pytest

from evio.events import EventStream, LabelTrack
from evio.simulator import benchmark_recording


def make_stream(rows, width=8, height=8):
    """rows of (t, x, y, p) with p in {-1, +1}."""
    if not rows:
        return EventStream.empty(width, height)
    t, x, y, p = (np.array(c) for c in zip(*rows))
    return EventStream.from_arrays(t, x, y, p, width, height)


def random_stream(rng, n, width=16, height=12, t_max=100_000):
    return EventStream.from_arrays(
        rng.integers(0, t_max, n), rng.integers(0, width, n), rng.integers(0, height, n),
        rng.choice([-1, 1], n), width, height)


def constant_track(n, x=4.0, y=3.0):
    return LabelTrack(np.full(n, x), np.full(n, y), np.zeros(n, dtype=bool))


@pytest.fixture(scope="session")
def recording():
    return benchmark_recording(42)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
