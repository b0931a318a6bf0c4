"""Shared test configuration and the acceptance-criterion summary printer."""
from hypothesis import settings

settings.register_profile("default", deadline=None, derandomize=True)
settings.load_profile("default")

# criterion number -> list of (check name, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[n]
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        detail = "; ".join(f"{name}: {'ok' if ok else 'FAILED'} ({d})" for name, ok, d in checks)
        terminalreporter.write_line(f"{status} criterion {n:2d}: {detail}")
