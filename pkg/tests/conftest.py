import numpy as np
import pytest

from sparse_discovery import dynamics


@pytest.fixture(scope="session")
def lorenz_exact():
    return dynamics.integrate(dynamics.lorenz63(), (1.0, 1.0, 1.0), 1e-3, 10_000)


@pytest.fixture(scope="session")
def lorenz_fd(lorenz_exact):
    return dynamics.with_finite_differences(lorenz_exact)


@pytest.fixture(scope="session")
def quad_exact():
    return dynamics.integrate(dynamics.lorenz_quadratic(), (1.0, 1.0, 1.0), 1e-3, 10_000)


def orthonormal_design(rng, T, m):
    q, _ = np.linalg.qr(rng.standard_normal((T, m)))
    return q


# -- acceptance summary -----------------------------------------------------

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    n = dict(report.user_properties).get("criterion")
    if n is None:
        return
    entry = _criteria.setdefault(n, {"failed": [], "passed": [], "xfailed": []})
    name = report.nodeid.split("::")[-1]
    if hasattr(report, "wasxfail"):
        entry["xfailed"].append(name)
    elif report.passed:
        entry["passed"].append(name)
    else:
        entry["failed"].append(name)


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        status = "FAIL" if e["failed"] or not e["passed"] else "PASS"
        line = f"criterion {n}: {status} ({len(e['passed'])} passed"
        if e["failed"]:
            line += f", failed: {', '.join(e['failed'])}"
        if e["xfailed"]:
            line += f"; known limitation xfailed: {', '.join(e['xfailed'])}"
        tr.write_line(line + ")")
