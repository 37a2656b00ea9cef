"""Select the compiled kernels when available, the numpy fallback otherwise.

Set ``COSMOBRANCH_PURE_PYTHON=1`` before import to force the fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("COSMOBRANCH_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

active = compiled_backend if compiled_backend is not None else python_backend

BACKEND = active.BACKEND
branch_log_probs = active.branch_log_probs
compositions = active.compositions
composition_table = active.composition_table
grouped_branch_sums = active.grouped_branch_sums
compensated_cumsum = active.compensated_cumsum


def available_backends():
    """Backends importable in this environment, compiled first."""
    return [b for b in (compiled_backend, python_backend) if b is not None]
