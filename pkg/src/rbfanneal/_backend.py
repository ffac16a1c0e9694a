"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the
pure-Python kernels take over.  Set ``RBFANNEAL_BACKEND`` to ``compiled`` or
``python`` to force a choice (forcing ``compiled`` raises if the extension
was not built).
"""

import os

_ENV_VAR = "RBFANNEAL_BACKEND"


def _load():
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice in ("auto", ""):
        try:
            from . import _fastkernels as impl
            return impl, "compiled"
        except ImportError:
            from . import _pykernels as impl
            return impl, "python"
    if choice == "compiled":
        from . import _fastkernels as impl
        return impl, "compiled"
    if choice == "python":
        from . import _pykernels as impl
        return impl, "python"
    raise ImportError(
        f"{_ENV_VAR} must be 'auto', 'compiled' or 'python', not {choice!r}"
    )


_impl, _name = _load()

build_design = _impl.build_design
least_squares = _impl.least_squares


def backend_name():
    """Return which kernel implementation is active: 'compiled' or 'python'."""
    return _name
