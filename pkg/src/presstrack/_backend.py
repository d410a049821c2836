"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
twin is loaded.  Set ``PRESSTRACK_PURE=1`` to force the fallback.
"""

import logging
import os

log = logging.getLogger(__name__)

if os.environ.get("PRESSTRACK_PURE", "") not in ("", "0"):
    from . import _purepy as kernels
else:
    try:
        from . import _core as kernels
    except ImportError:  # extension not built
        log.debug("compiled kernels unavailable, using pure-Python fallback")
        from . import _purepy as kernels

BACKEND = kernels.BACKEND

__all__ = ["kernels", "BACKEND"]
