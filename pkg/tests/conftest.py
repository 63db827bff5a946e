import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tiltsim import CircleSpec, SimConfig, SimState, VehicleParams, run_simulation

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture(scope="session")
def spec():
    return CircleSpec()


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load) every simulation kernel once per session."""
    for kind in ("fl3", "gait", "fl4"):
        init = SimState().with_extension() if kind == "fl4" else SimState()
        run_simulation(SimConfig(controller=kind, t_end=0.05, initial=init))
        run_simulation(SimConfig(controller=kind, t_end=0.05, initial=init,
                                 control_mode="continuous"))


def random_state(rng, extended=False):
    w = rng.uniform(50, 300, 2)
    s = SimState(*rng.normal(0, 5, 4), w[0], w[1], rng.uniform(-4, 4))
    if extended:
        s = s.with_extension(*rng.normal(0, 20, 2), rng.normal(0, 1))
    return s


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
