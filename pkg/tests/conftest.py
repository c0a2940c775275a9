"""Shared fixtures and the acceptance-suite terminal report."""

import numpy as np
import pytest

from trigzero.experiments import ExperimentConfig, IntervalSpec, run_campaign

# (criterion id, passed, detail) tuples filled in by tests/test_acceptance.py
ACCEPTANCE_RESULTS = []


def record_acceptance(criterion: str, passed: bool, detail: str):
    ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{name}] {verdict} -- {detail}")


@pytest.fixture(scope="session")
def variance_campaign():
    """Shared K in {100, 200, 400} campaign, 10^4 replicates each."""
    cfg = ExperimentConfig(
        K_list=(100, 200, 400),
        replicates=10000,
        interval=IntervalSpec("original", 0.0, np.pi),
        alpha=0.25,
        seed=0,
    )
    return run_campaign(cfg)


@pytest.fixture(scope="session")
def chaos_total():
    from trigzero.chaos_variance import total_variance_constant

    return total_variance_constant(q_max=20, tail=1e4)
