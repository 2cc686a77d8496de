import os
import time
from functools import lru_cache

import hypothesis
import numpy as np
import pytest

np.seterr(all="ignore")

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance outcomes, printed once at the end of the session
ACCEPTANCE: dict = {}


def record(criterion: int, title: str, ok: bool, seconds: float, budget: float, detail: str = ""):
    ACCEPTANCE[criterion] = (title, ok, seconds, budget, detail)
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {criterion}] {status} {title} ({seconds:.2f}s / budget {budget:g}s) {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, sec, budget, detail = ACCEPTANCE[k]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {k}: {status}  {title}  [{sec:.2f}s, budget {budget:g}s]  {detail}")


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


@pytest.fixture
def timer():
    return Timer
