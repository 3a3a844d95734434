import numpy as np
import pytest

from singdiar.audio import AudioClip
from singdiar.labels import LabelMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_clip(rng, n=8000, sr=8000, id="clip"):
    return AudioClip(rng.uniform(-0.5, 0.5, n) * rng.uniform(0.01, 1.0, n), sr, id)


def labels(rows, frame_duration=0.1, ids=None):
    rows = np.atleast_2d(np.asarray(rows))
    ids = ids or [f"s{i}" for i in range(rows.shape[0])]
    return LabelMatrix(rows, frame_duration, ids)


def random_labels(rng, n, t, p=0.4, frame_duration=0.1, prefix="s"):
    return LabelMatrix(rng.random((n, t)) < p, frame_duration, [f"{prefix}{i}" for i in range(n)])


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; call with (number, title, ok, detail)."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
