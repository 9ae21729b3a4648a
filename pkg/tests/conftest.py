import pytest

from hardsphere.mercer import KernelParams, quadrature_spectrum


@pytest.fixture(scope="session")
def spectrum_d1():
    return quadrature_spectrum(KernelParams(1, 1.0), 60)


@pytest.fixture(scope="session")
def spectrum_d2():
    return quadrature_spectrum(KernelParams(2, 1.0), 60)


@pytest.fixture
def ac_report(request):
    """Record one PASS/FAIL line per acceptance criterion; lines are echoed in the terminal summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def report(tag: str, passed: bool, detail: str):
        line = f"{tag} {'PASS' if passed else 'FAIL'}: {detail}"
        print(line)
        lines.append(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
