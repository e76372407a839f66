"""Shared fixtures and the acceptance-criteria summary.

Acceptance tests record every sub-check through the ``acceptance`` fixture.
At the end of the session one line per criterion is printed: PASS when all
of its sub-checks held, FAIL otherwise, followed by the failing sub-checks.
"""

from __future__ import annotations

import sys
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    "C1": "physical process matrices match the symbolic tables",
    "C2": "physical metric rows (150-state procedure) and diamond closed forms",
    "C3": "twirling preserves the average error rate",
    "C4": "diamond solver: duality gap, brute-force agreement, Pauli sum rule",
    "C5": "bit-flip code logical process matrix against the printed closed forms",
    "C6": "Steane perfect-EC leading degrees",
    "C7": "coherent scaling of diamond distance against error rate",
    "C8": "honesty of the constrained approximations",
    "C9": "pseudo-threshold machinery",
}

_RESULTS: dict[str, list[tuple[str, bool, str]]] = defaultdict(list)


class AcceptanceRecorder:
    def check(self, criterion: str, name: str, ok, detail: str = "") -> bool:
        ok = bool(ok)
        _RESULTS[criterion].append((name, ok, detail))
        return ok


@pytest.fixture(scope="session")
def acceptance() -> AcceptanceRecorder:
    return AcceptanceRecorder()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key, title in CRITERIA.items():
        checks = _RESULTS.get(key)
        if not checks:
            tr.write_line(f"{key} NOT RUN  {title}")
            continue
        failed = [c for c in checks if not c[1]]
        status = "PASS" if not failed else "FAIL"
        tr.write_line(f"{key} {status} ({len(checks) - len(failed)}/{len(checks)} sub-checks)  {title}")
        for name, _, detail in failed:
            tr.write_line(f"      failed: {name}: {detail}")
