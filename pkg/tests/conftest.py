import numpy as np
import pytest

from ccforce.simulator import NoiseProfile, Scene, WorkerModel

ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    """Store one acceptance line; printed together at the end of the session."""
    line = f"[{criterion}] {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def zero_scene():
    return Scene(noise=NoiseProfile.zero(), workers=WorkerModel(flip_rate=0.0, lag_frames=0), duration_s=20.0)


@pytest.fixture(scope="session")
def zero_demo(zero_scene):
    return zero_scene.simulate(seed=11)


@pytest.fixture(scope="session")
def noisy_demo():
    return Scene(duration_s=20.0).simulate(seed=5)


@pytest.fixture(scope="session")
def noisy_demos():
    return Scene(duration_s=20.0).simulate_many(3, base_seed=100)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_demo():
    """Build a minimal demonstration from explicit channels; unspecified channels are zero."""
    from ccforce.types import Demonstration

    def _make(p, p_des=None, f_psm=None, f_gt=None, contact=None, **kw):
        p = np.asarray(p, dtype=float)
        n = len(p)
        return Demonstration(
            id=kw.pop("id", "synthetic"),
            material_profile="silicone",
            sample_rate_hz=100.0,
            t=np.arange(n) / 100.0,
            p=p,
            p_des=p if p_des is None else p_des,
            f_psm=np.zeros((n, 3)) if f_psm is None else f_psm,
            f_gt=f_gt,
            contact_gt=contact,
            **kw,
        )

    return _make
