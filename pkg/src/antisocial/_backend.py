"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``ANTISOCIAL_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def _load() -> ModuleType:
    if os.environ.get("ANTISOCIAL_PURE_PYTHON", "") not in ("", "0"):
        return _pykernels
    try:
        from . import _ckernels
    except ImportError:
        return _pykernels
    return _ckernels


kernels: ModuleType = _load()
BACKEND: str = kernels.NAME


def available() -> dict[str, ModuleType]:
    """All importable kernel modules keyed by name (for tests and benchmarks)."""
    out = {_pykernels.NAME: _pykernels}
    try:
        from . import _ckernels

        out[_ckernels.NAME] = _ckernels
    except ImportError:
        pass
    return out
