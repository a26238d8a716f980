import pytest

from grenander.density_models import PiecewiseConstant, PowerLaw, TruncatedExponential, Uniform

MODELS = [
    Uniform(),
    PowerLaw(0.5),
    PowerLaw(0.6),
    PowerLaw(0.75),
    PowerLaw(0.9),
    TruncatedExponential(2.0),
    TruncatedExponential(0.1),
    PiecewiseConstant((0.2, 0.5), (3.0, 1.0, 0.2)),
]


@pytest.fixture(params=MODELS, ids=str)
def model(request):
    return request.param


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    def _record(criterion: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
