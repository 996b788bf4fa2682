"""Select the compiled kernels when available, else the numpy fallback.

Set ``COHERENT_KERNEL_PURE=1`` to force the fallback.
"""
import logging
import os

log = logging.getLogger(__name__)

if os.environ.get("COHERENT_KERNEL_PURE", "").strip() not in ("", "0"):
    from . import _purepy as _impl
    BACKEND = "python"
else:
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:  # extension not built
        from . import _purepy as _impl
        BACKEND = "python"

log.debug("kernel backend: %s", BACKEND)

cayley_axial_steps = _impl.cayley_axial_steps
rk4_linear2 = _impl.rk4_linear2
