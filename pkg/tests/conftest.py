import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import N1_TEXT  # noqa: E402

from tninfer.uai import build_network, parse_model  # noqa: E402


@pytest.fixture
def n1():
    return build_network(parse_model(N1_TEXT))
