import functools
import sys

import pytest
from hypothesis import settings

from hermite_boltzmann.collision_tensor import assemble
from hermite_boltzmann.ipl_kernel import kernel_model

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def tensor(eta, M0):
    return assemble(eta, M0, kernel_model(eta))


@pytest.fixture(scope="session")
def get_tensor():
    return tensor


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "REPORT", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
