"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the
pure-numpy kernels are the fallback.  ``CUTOFFSIM_BACKEND=python`` or
``=native`` forces the choice (the latter raises if the extension is
missing).  Both backends draw the same counter-based uniforms and
return bit-identical samples.
"""

from __future__ import annotations

import os

from . import pyref

try:
    from . import _native
except ImportError:
    _native = None


def get_backend(name: str | None = None):
    """Return the kernel module selected by ``name`` or the environment."""
    choice = name or os.environ.get("CUTOFFSIM_BACKEND", "")
    if choice == "python":
        return pyref
    if choice == "native":
        if _native is None:
            raise ImportError("native backend requested but not built")
        return _native
    if choice:
        raise ValueError(f"unknown backend {choice!r}")
    return _native if _native is not None else pyref


def available_backends():
    out = {"python": pyref}
    if _native is not None:
        out["native"] = _native
    return out


BACKEND_NAME = get_backend().BACKEND_NAME
