"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it was built; otherwise, or
when ``RFPLAN_PURE=1`` is set, the numpy twins in ``_fallback`` are used.
``use_backend`` switches at runtime (tests and the benchmark rely on it).
"""
import os

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

KERNELS = (
    "rings_contain",
    "rings_segments_free",
    "boxes_contain",
    "boxes_segments_free",
    "nearest_index",
    "near_indices",
)

BACKEND = None


def available_backends():
    return ["compiled", "python"] if _core is not None else ["python"]


def use_backend(name):
    """Bind the module-level kernel names to ``"compiled"`` or ``"python"``."""
    global BACKEND
    if name == "compiled":
        if _core is None:
            raise ImportError("rfplan._core is not built; reinstall with Cython available")
        impl = _core
    elif name == "python":
        impl = _fallback
    else:
        raise ValueError(f"unknown backend {name!r}")
    g = globals()
    for fn in KERNELS:
        g[fn] = getattr(impl, fn)
    BACKEND = name


def current_backend():
    return BACKEND


use_backend("python" if _core is None or os.environ.get("RFPLAN_PURE") == "1" else "compiled")