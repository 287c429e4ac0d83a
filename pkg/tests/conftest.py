import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # synth / oracles helpers

from leafpipe import imgcore  # noqa: E402


@pytest.fixture
def rand_image():
    """Factory for random images with a seeded generator."""

    def make(h=8, w=8, channels=1, seed=0):
        rs = np.random.RandomState(seed)
        if channels == 1:
            return imgcore.ImageBuffer.from_array(rs.rand(h, w))
        return imgcore.ImageBuffer.from_array(rs.rand(h, w, channels))

    return make
