import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from jacobidecay.tridiag import warm_kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_numba_kernels():
    """Compile the numba kernels once so timed tests measure computation."""
    warm_kernels()
    from jacobidecay.solutions import recurrence_extend
    from jacobidecay.models import Constant

    recurrence_extend(Constant(1.0), 0.0, 0.0, 1.0, 4)
