"""Pick the compiled kernels when available; LRLEARN_BACKEND=python forces the fallback."""

from __future__ import annotations

import importlib
import logging
import os

log = logging.getLogger(__name__)


def load(name: str | None = None):
    """Return (module, backend name) for 'cython', 'python' or None (best available)."""
    if name == "python":
        return importlib.import_module("lrlearn._pykernels"), "python"
    try:
        return importlib.import_module("lrlearn._kernels"), "cython"
    except ImportError:
        if name == "cython":
            raise
        log.info("compiled kernels unavailable, using the numpy fallback")
        return importlib.import_module("lrlearn._pykernels"), "python"


_requested = os.environ.get("LRLEARN_BACKEND", "").strip().lower() or None
if _requested not in (None, "python", "cython"):
    raise ValueError(f"LRLEARN_BACKEND must be 'python' or 'cython', got {_requested!r}")
kernels, BACKEND = load(_requested)
