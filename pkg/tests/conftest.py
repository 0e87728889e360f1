import numpy as np
import pytest


def brute_force_equalize(img):
    """Global HE written out pixel by pixel, independent of histogram_eq."""
    flat = [int(v) for v in np.asarray(img).ravel()]
    n = len(flat)
    counts = {}
    for v in flat:
        counts[v] = counts.get(v, 0) + 1
    lowest = min(counts)
    cdf_min = counts[lowest]
    out = []
    for v in flat:
        cdf = sum(c for u, c in counts.items() if u <= v)
        if n == cdf_min:
            out.append(v)
        else:
            num = 255 * (cdf - cdf_min)
            den = n - cdf_min
            q, r = divmod(num, den)
            out.append(q + (1 if 2 * r >= den else 0))
    return np.array(out, dtype=np.uint8).reshape(np.asarray(img).shape)


def scripted_redistribution(bins, limit):
    """Clip-and-redistribute done one count at a time."""
    bins = [int(b) for b in bins]
    excess = 0
    for i, b in enumerate(bins):
        if b > limit:
            excess += b - limit
            bins[i] = limit
    i = 0
    while excess:
        bins[i % 256] += 1
        excess -= 1
        i += 1
    return bins


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def toy_set():
    """Eight 32x32 images, two classes told apart by where a bright square sits."""
    g = np.random.default_rng(5)
    x = g.uniform(-1.0, -0.6, size=(8, 1, 32, 32))
    y = np.array([0, 1] * 4)
    x[y == 1, :, 4:12, 4:12] += 1.2
    x[y == 0, :, 20:28, 20:28] += 1.2
    return x, y


_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or report.outcome == "failed":
        name = report.nodeid.split("::")[-1]
        if _acceptance.get(name) != "FAIL":
            _acceptance[name] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _acceptance.items():
        terminalreporter.write_line(f"{status}  {name}")
