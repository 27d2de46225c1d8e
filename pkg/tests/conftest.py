import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rs():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


class CriterionReport:
    """Collects named checks for one acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    @property
    def passed(self):
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        parts = "; ".join(f"{n}={'ok' if ok else 'FAIL'} ({d})" if d else
                          f"{n}={'ok' if ok else 'FAIL'}" for n, ok, d in self.checks)
        return f"criterion {self.number} [{status}] {self.title}: {parts}"

    def assert_all(self):
        failed = [f"{n}: {d}" for n, ok, d in self.checks if not ok]
        assert not failed, "; ".join(failed)


@pytest.fixture
def criterion(request):
    store = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def make(number: int, title: str) -> CriterionReport:
        rep = CriterionReport(number, title)
        store[number] = rep
        return rep

    yield make
    for rep in store.values():
        if rep.checks and not getattr(rep, "_printed", False):
            rep._printed = True
            print("\n" + rep.line())


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        terminalreporter.write_line(store[n].line())
