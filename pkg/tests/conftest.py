import pytest

from onlinemil.gridworld import lava_river
from onlinemil.harness import ExperimentConfig, run_experiment

# criterion label -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def lava10():
    return lava_river(10, 10)


@pytest.fixture(scope="session")
def converged_run():
    """A short default run on the 10x10 map; the model has converged by its end."""
    return run_experiment(ExperimentConfig(episodes=12, seed=0))


@pytest.fixture(scope="session")
def converged_program(converged_run):
    return converged_run.hypothesis.dump()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda k: int(k.split(".")[0])):
        ok, detail = ACCEPTANCE[label]
        terminalreporter.write_line("%s %s: %s" % ("PASS" if ok else "FAIL", label, detail))
