import os
import subprocess
import sys
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from seeker import config
from seeker.integrator import simulate_closed_loop

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE = pytest.StashKey[dict]()


@lru_cache(maxsize=None)
def bundled_run(name: str):
    sc = config.load_bundled(name)
    return sc, simulate_closed_loop(sc.field, sc.vehicle, sc.initial, sc.integration, sc.disturbance)


@pytest.fixture(scope="session")
def ring_r02_run():
    return bundled_run("ring_r02")


@pytest.fixture(scope="session")
def ring_r01_run():
    return bundled_run("ring_r01")


@pytest.fixture
def record(request):
    """Log an acceptance criterion outcome for the end-of-session summary."""
    log = request.config.stash.setdefault(ACCEPTANCE, {})

    def _record(number: int, passed: bool, detail: str) -> None:
        log[number] = (bool(passed), detail)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE, None)
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        passed, detail = log[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def run_cli(*args, cwd=None, env=None):
    full_env = dict(os.environ)
    full_env.pop("SEEKER_SIM_OUT", None)
    if env:
        full_env.update(env)
    return subprocess.run([sys.executable, "-m", "seeker.cli", *map(str, args)], cwd=cwd, env=full_env,
                          capture_output=True, text=True, timeout=600)
