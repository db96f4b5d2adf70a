import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "repro", derandomize=True, deadline=None, max_examples=100,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repro")


@pytest.fixture(scope="session")
def scene():
    from orisvlc.scene import Scene
    return Scene()


@pytest.fixture(scope="session")
def ctx(scene):
    from orisvlc.optimizer import SolverContext
    return SolverContext(scene)


@pytest.fixture(scope="session")
def ctx50(ctx, scene):
    return ctx.with_scene(scene.with_fov(np.deg2rad(50)))


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
