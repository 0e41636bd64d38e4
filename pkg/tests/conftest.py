import numpy as np
import pytest


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger one-time kernel compilation so timed tests measure the
    algorithms, not the JIT."""
    from tetaeval.assignment import solve_max_assignment
    from tetaeval.kernels import iou_matrix_kernel

    iou_matrix_kernel(np.zeros((2, 4)), np.zeros((2, 4)))
    solve_max_assignment(np.ones((3, 3)))
    yield
