import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from weylcalc.symalg import Registry


@pytest.fixture
def reg1():
    """d = 1 registry with the shifted oscillator base and its resolvent."""
    reg = Registry(1)
    reg.register_base("a0", reg.parse("1 + x1^2 + xi1^2"))
    reg.register_base("alam", reg.parse("1 + x1^2 + xi1^2 + lam"))
    return reg


@pytest.fixture
def reg2():
    """d = 2 registry, plain (no bases)."""
    return Registry(2)
