"""Pick the compiled pivot kernel if it was built, else the numpy one.

Set ``MIMFRELAX_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

KERNELS = {"python": _kernel_py}
if _compiled is not None:
    KERNELS["compiled"] = _compiled

if os.environ.get("MIMFRELAX_PURE_PYTHON", "").strip() not in ("", "0") or _compiled is None:
    DEFAULT = "python"
else:
    DEFAULT = "compiled"


def get_kernel(name=None):
    """Module exposing ``run_dual``, ``ftran`` and ``btran`` for backend ``name``."""
    name = name or DEFAULT
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available (have {sorted(KERNELS)})") from None
