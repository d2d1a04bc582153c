import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# numpy-heavy examples can blow hypothesis' default per-example deadline on
# slow machines; correctness here never depends on wall time
settings.register_profile(
    "package",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("package")


@pytest.fixture
def rng():
    return np.random.default_rng(20260818)
