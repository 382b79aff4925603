"""Gate-application kernels: compiled extension with a numpy fallback.

The compiled kernel is selected at import when available; set
``TOFFSIM_KERNEL=python`` to force the numpy path (used by the benchmark and
by backend-agreement tests).
"""

import os

import numpy as np

from . import pyref

BACKEND = "python"
_impl = pyref
if os.environ.get("TOFFSIM_KERNEL", "").lower() not in {"python", "numpy", "pyref"}:
    try:
        from . import _gatekern as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

apply_dense = _impl.apply_dense


def target_plan(n_axes, axes):
    """Index tables for applying a matrix to `axes` of an n-axis qubit tensor.

    Axis 0 is the most significant bit of the flattened index.  Returns
    (base, offs): `base` enumerates every setting of the non-target bits,
    `offs` the 2^k offsets of the target-bit patterns in `axes` order.
    """
    k = len(axes)
    tbits = [n_axes - 1 - ax for ax in axes]
    offs = np.zeros(2**k, dtype=np.intp)
    for j in range(2**k):
        v = 0
        for t in range(k):
            if (j >> (k - 1 - t)) & 1:
                v |= 1 << tbits[t]
        offs[j] = v
    rest = sorted(set(range(n_axes)) - set(tbits), reverse=True)
    m = np.arange(2 ** (n_axes - k), dtype=np.intp)
    base = np.zeros_like(m)
    for i, bitpos in enumerate(rest):
        base |= ((m >> (len(rest) - 1 - i)) & 1) << bitpos
    return base, offs
