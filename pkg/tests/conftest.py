import numpy as np
import pytest

from proxref.sensor import SensorIntrinsics


@pytest.fixture
def intrinsics() -> SensorIntrinsics:
    return SensorIntrinsics(d0_mm=1.0, n=2.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
