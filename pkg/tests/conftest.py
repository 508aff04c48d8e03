import numpy as np
import pytest

from graphinpaint.audio_io import AudioBuffer
from graphinpaint.config import AlgoConfig
from graphinpaint.pipeline import frame_aligned
from graphinpaint.synth import FIXTURES, white_noise

RATE = 44100


def doubled(x, rate=RATE):
    """Hop-aligned copy of ``x`` followed by itself, plus the half length."""
    half = frame_aligned(AudioBuffer(x, rate))
    data = np.concatenate([half.data, half.data], axis=1)
    return half.with_data(data), half.length


@pytest.fixture(scope="session")
def config():
    return AlgoConfig()


@pytest.fixture(scope="session")
def repeated_drums():
    """Eight seconds of drum loop played twice."""
    return doubled(FIXTURES["drum_loop"](8.0, RATE, seed=1))


@pytest.fixture(scope="session")
def noise_buffer():
    """Thirty seconds of seeded white noise."""
    return AudioBuffer(white_noise(30.0, RATE, seed=3), RATE)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
        request.config.stash.setdefault(_VERDICTS, []).append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
