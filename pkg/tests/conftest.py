import pytest

from hetmix import _kernels
from hetmix.model import ModelParams

_CRITERIA = []


@pytest.fixture(params=sorted(_kernels.available()))
def backend(request):
    return _kernels.available()[request.param]


@pytest.fixture
def calib():
    return ModelParams(gamma=1 / 7, pi=0.01, r0=(2.5, 2.5), alpha=(0.45, 0.27), h=0.0,
                       n=(0.5, 0.5), seed_fraction=1e-4)


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary hook prints them all."""

    def record(number, title, ok, detail=""):
        # ok=None marks a criterion this machine cannot verify
        _CRITERIA.append((number, title, None if ok is None else bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        status = "UNVERIFIED" if ok is None else ("PASS" if ok else "FAIL")
        line = f"[{number:>2}] {status}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
