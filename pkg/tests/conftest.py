import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rsir.model import DescriptorSet

settings.register_profile(
    "default", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def make_set(
    image_id: str = "img",
    class_label: str = "c",
    n: int = 20,
    d: int = 8,
    seed: int = 0,
    constant_attention: bool = False,
) -> DescriptorSet:
    """Random but valid descriptor set for unit tests."""
    rng = np.random.default_rng(seed)
    attention = np.full(n, 1.0) if constant_attention else rng.uniform(0.0, 5.0, n)
    return DescriptorSet(
        image_id,
        class_label,
        rng.normal(size=(n, d)).astype(np.float32),
        attention.astype(np.float32),
        rng.choice([0.25, 0.5, 1.0, 2.0], size=n).astype(np.float32),
        rng.uniform(size=n).astype(np.float32),
        rng.uniform(size=n).astype(np.float32),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
