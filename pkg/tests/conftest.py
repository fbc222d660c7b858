import pytest

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")


@pytest.fixture
def record():
    def _record(num: int, ok: bool, detail: str) -> None:
        ok = bool(ok)
        ACCEPTANCE[num] = (ok, detail)
        print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
        assert ok, detail

    return _record
