"""Hot kernels with a compiled implementation and a pure-Python fallback.

The compiled module is used when it was built and ``DATAMARKET_PURE_PYTHON``
is unset or ``0``.  ``BACKEND`` names the implementation actually loaded.
"""
from __future__ import annotations

import os

from . import _pykernels

_force_py = os.environ.get("DATAMARKET_PURE_PYTHON", "0") not in ("", "0")

if _force_py:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

splitmix64 = _impl.splitmix64
hash64 = _impl.hash64
hash_unit = _impl.hash_unit
refine = _impl.refine
correct_mask = _impl.correct_mask
label_entropy = _impl.label_entropy
subset_chain = _impl.subset_chain

__all__ = [
    "BACKEND",
    "splitmix64",
    "hash64",
    "hash_unit",
    "refine",
    "correct_mask",
    "label_entropy",
    "subset_chain",
]
