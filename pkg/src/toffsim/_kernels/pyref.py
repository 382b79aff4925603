"""Pure-numpy reference implementation of the gate kernel."""

import numpy as np


def apply_dense(vec, u, base, offs):
    """In-place: vec[b+offs] <- u @ vec[b+offs] for every b in base."""
    idx = np.add.outer(base, offs)
    vec[idx] = vec[idx] @ u.T
