import pathlib

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

SYSTEMS = pathlib.Path(__file__).resolve().parent.parent / "demos" / "systems"


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def system_path():
    return lambda name: SYSTEMS / f"{name}.sys"
