"""Backend dispatch for the ensemble integrators.

Prefers the compiled extension; falls back to the numpy implementation when
the extension is not built. Both backends are bit-identical by construction
(pregenerated noise, matching arithmetic), which `tests/test_kernels.py`
verifies whenever both are importable.
"""

from . import kernels_np

try:
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:  # pure-python install
    _impl = kernels_np
    BACKEND = "numpy"

ou_paths = _impl.ou_paths
white_linear = _impl.white_linear
white_table = _impl.white_table
colored_linear = _impl.colored_linear
colored_table = _impl.colored_table
phase_linear = _impl.phase_linear
phase_table = _impl.phase_table
white2d_table = _impl.white2d_table


def get_backend(name: str = None):
    """Return the kernel module for `name` (None = active backend)."""
    if name is None or name == BACKEND:
        return _impl
    if name == "numpy":
        return kernels_np
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
