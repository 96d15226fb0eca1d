from __future__ import annotations

import random

import numpy as np
import pytest

from edgeminer import datasets
from edgeminer.events import EventLog, generate_synthetic

L1 = [["a", "b", "c", "d"], ["a", "c", "b", "d"], ["a", "e", "d"]]

_CRITERIA: list[tuple[str, str, str]] = []


def random_log(seed: int, max_n: int = 12, max_cases: int = 50, max_len: int = 20) -> EventLog:
    """Random first-order log; sparse transition rows so relations vary."""
    rng = random.Random(seed)
    n = rng.randint(1, max_n)
    w = np.array([[rng.random() if rng.random() < 0.6 else 0.0 for _ in range(n)] for _ in range(n)])
    for i in range(n):
        if w[i].sum() == 0:
            w[i, rng.randrange(n)] = 1.0
    return generate_synthetic(
        n, rng.randint(1, max_cases), w, length=(1, max_len), seed=seed, gap_us=(1, 60_000)
    )


@pytest.fixture
def l1_log() -> EventLog:
    return EventLog.from_traces(L1)


@pytest.fixture
def report_criterion(request):
    """Record one acceptance line: ``report_criterion(name, passed, detail)``."""

    def record(name: str, passed: bool | None, detail: str = "") -> None:
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        _CRITERIA.append((status, name, detail))

    return record


def dataset_or_none(key: str):
    return datasets.find(key)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _CRITERIA:
        terminalreporter.write_line(f"[{status}] {name}" + (f" :: {detail}" if detail else ""))
