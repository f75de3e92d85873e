from datetime import datetime, timedelta

import numpy as np
import pytest

from extremo.series import PriceSeries

HALF_HOUR = timedelta(minutes=30)
FIVE_MIN = timedelta(minutes=5)


def make_series(values, start=datetime(2014, 7, 1, 0, 30), step=HALF_HOUR, id="s", missing=None):
    return PriceSeries(id=id, start=start, step=step, values=np.asarray(values, dtype=float), missing=missing)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, rows, header="timestamp,value"):
        path = tmp_path / name
        path.write_text(header + "\n" + "".join(r + "\n" for r in rows), encoding="utf-8")
        return path

    return _write


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _record(number: int, title: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
        _CRITERIA.append(line)
        print(line)
        assert ok, line

    def _skip(number: int, title: str, reason: str):
        line = f"[SKIP] criterion {number}: {title} -- {reason}"
        _CRITERIA.append(line)
        pytest.skip(reason)

    _record.skip = _skip
    return _record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
