"""Kernel backend selection.

The compiled Cython extension is preferred when it built; otherwise the pure
NumPy implementation is used. Set QCOPT_PURE_PYTHON=1 to force the fallback
(used by tests and the kernel benchmark to compare the two).
"""
from __future__ import annotations

import os

from . import _pure

if os.environ.get("QCOPT_PURE_PYTHON"):
    _impl = _pure
else:
    try:
        from . import _compiled as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND: str = _impl.BACKEND
apply_gate = _impl.apply_gate
compose = _impl.compose


def available_backends() -> dict:
    """All importable backends, keyed by name."""
    backends = {"pure": _pure}
    try:
        from . import _compiled

        backends["compiled"] = _compiled
    except ImportError:
        pass
    return backends
