import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import ALPHA, E_CHARGE, M, Draw  # noqa: E402

from propkit.fields import ParticleParams  # noqa: E402


@pytest.fixture
def particle():
    return ParticleParams(M, E_CHARGE)


@pytest.fixture
def draw(request):
    # a different but reproducible stream per test (str hashing is salted, so sum code points)
    return Draw(sum(map(ord, request.node.name)))


def pytest_report_header(config):
    return f"propkit test ranges: m={M}, e={E_CHARGE}, alpha={ALPHA}"
