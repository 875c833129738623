import pytest

from nlteleport.channel import OpticalConfig


@pytest.fixture(scope="session")
def cfg():
    """Reference setup: 5 mm crystals, 600 um pump and anti-pump, 50 um modes."""
    return OpticalConfig.default()


@pytest.fixture(scope="session")
def spiral_cfg(cfg):
    """beta = 1.1, alpha = 2.7."""
    return cfg.with_ratios(2.7, 1.1)


# ---------------------------------------------------------------------------
# acceptance reporting
# ---------------------------------------------------------------------------

ACCEPTANCE: dict = {}


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title, self.notes = number, title, []

    def note(self, text: str) -> None:
        self.notes.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        ACCEPTANCE[self.number] = f"criterion {self.number:>2} {status}: {self.title}" + (
            f" [{'; '.join(self.notes)}]" if self.notes else ""
        )
        line = ACCEPTANCE[self.number]
        print(line)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
