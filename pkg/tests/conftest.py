import time

import numpy as np
import pytest

from monofo.scenarios import build_gene_scenario, build_lti_scenario, certify_scenario, run_scenario

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def _timed_sweep(config):
    t0 = time.perf_counter()
    result = run_scenario(config, run_certification=False)
    result.wall_time = time.perf_counter() - t0
    return result


@pytest.fixture(scope="session")
def lti_sweep():
    """Full default gain sweep on the LTI scenario, computed once."""
    return _timed_sweep(build_lti_scenario())


@pytest.fixture(scope="session")
def gene_sweep():
    return _timed_sweep(build_gene_scenario())


@pytest.fixture(scope="session")
def lti_reports():
    return certify_scenario(build_lti_scenario())


@pytest.fixture(scope="session")
def gene_reports():
    return certify_scenario(build_gene_scenario())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
