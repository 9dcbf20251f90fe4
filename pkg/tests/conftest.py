import pytest

from peelsurv.peeling import harmonic_function, make_simple_nu, make_synthetic_nu

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def synthetic():
    nu = make_synthetic_nu(0.2)
    return nu, harmonic_function(nu)


@pytest.fixture(scope="session")
def simple():
    nu = make_simple_nu()
    return nu, harmonic_function(nu, 1000)


@pytest.fixture
def record_criterion():
    """Log one PASS/FAIL line for an acceptance criterion and return (ok, line).

    ``checks`` maps a short label to a boolean; the criterion passes only if
    every check holds. The line is printed immediately and repeated in the
    terminal summary so it survives output capture.
    """

    def record(number, title, checks, detail):
        failed = [name for name, ok in checks.items() if not ok]
        verdict = "FAIL" if failed else "PASS"
        line = f"criterion {number} {verdict}  {title}: {detail}"
        if failed:
            line += f"  [failed: {', '.join(failed)}]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return not failed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
