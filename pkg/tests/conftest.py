import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@pytest.fixture
def ramp():
    """64x64 horizontal ramp spanning [0.1, 0.9]."""
    return np.tile(np.linspace(0.1, 0.9, 64), (64, 1))


@pytest.fixture(scope="session")
def small_heads():
    """Heads trained once on a small mixed corpus, shared by pipeline tests."""
    from segd.evidential import train_heads
    from segd.pipeline.corpus import generate_corpus

    entries = generate_corpus(120, seed=7)
    return train_heads([e.training_sample() for e in entries], epochs=300, seed=0)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance PASS/FAIL lines at the end of the run."""
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
