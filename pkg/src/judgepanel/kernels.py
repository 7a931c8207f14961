"""Hot-loop kernels, compiled when available.

The Cython extension ``judgepanel._ckernels`` is preferred at import time.
Set ``JUDGEPANEL_PURE_PYTHON=1`` to force the pure-Python implementation.
Both expose ``vote_rows`` and ``bin_counts`` with identical semantics.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from . import _pykernels as python_impl

logger = logging.getLogger(__name__)

try:
    from . import _ckernels as compiled_impl
except ImportError:  # extension not built
    compiled_impl = None

if compiled_impl is not None and not os.environ.get("JUDGEPANEL_PURE_PYTHON"):
    _impl = compiled_impl
    BACKEND = "cython"
else:
    _impl = python_impl
    BACKEND = "python"

logger.debug("vote kernels backend: %s", BACKEND)


def vote_rows(votes, severities, threshold: float, projection, impl=None):
    """Resolve every row of an int8 vote grid.

    Returns ``(good, bad, unknown, decision, severity, conflicted, agreement)``
    arrays, one entry per row. ``projection`` maps ladder rank to vote code.
    """
    impl = impl or _impl
    votes = np.ascontiguousarray(votes, dtype=np.int8)
    severities = np.ascontiguousarray(severities, dtype=np.int8)
    if votes.ndim != 2 or votes.shape != severities.shape:
        raise ValueError("votes and severities must be 2-D arrays of equal shape")
    projection = np.ascontiguousarray(projection, dtype=np.int8)
    return impl.vote_rows(votes, severities, float(threshold), projection)


def bin_counts(values, n_bins: int, impl=None) -> np.ndarray:
    """Equal-width histogram over [0, 1]: half-open bins, last bin closed."""
    impl = impl or _impl
    return impl.bin_counts(np.ascontiguousarray(values, dtype=np.float64), int(n_bins))
