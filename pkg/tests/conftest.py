import pytest

_CRITERIA: list[tuple[str, bool, str]] = []


class CriterionRecorder:
    def __init__(self, name):
        self.name = name

    def __call__(self, passed: bool, detail: str = ""):
        _CRITERIA.append((self.name, bool(passed), detail))
        assert passed, f"{self.name}: {detail}"


@pytest.fixture
def criterion(request):
    return CriterionRecorder(request.node.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
