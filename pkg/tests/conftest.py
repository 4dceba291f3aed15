import numpy as np
import pytest

from trailnav.mask_core import SegClass, SegMask


def band_mask(width=64, height=48, left=24, right=40, fill=SegClass.UNTRAVERSABLE):
    """Grass everywhere except a vertical trail band [left, right)."""
    data = np.full((height, width), int(fill), dtype=np.uint8)
    data[:, left:right] = SegClass.TRAVERSABLE
    return SegMask(data)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
