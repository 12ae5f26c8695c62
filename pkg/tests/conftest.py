import math

import pytest

from terrapulse.media import C_LIGHT

K200 = 2.0 * math.pi * 200e6 / C_LIGHT


@pytest.fixture
def k200():
    return K200
