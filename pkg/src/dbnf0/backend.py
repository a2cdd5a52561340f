"""Backend selection: compiled sampling kernels with pure-Python fallback.

The compiled extension is preferred when importable. Set ``DBNF0_BACKEND=py``
or ``DBNF0_BACKEND=ext`` to force a backend (``ext`` raises if the extension
is missing). Both backends expose identical kernel functions and produce
bit-identical streams; only speed differs.
"""

import os

from . import _sampling_py

_requested = os.environ.get("DBNF0_BACKEND", "auto").lower()

if _requested not in ("auto", "ext", "py"):
    raise RuntimeError(f"DBNF0_BACKEND must be auto|ext|py, got {_requested!r}")

if _requested == "py":
    kernels = _sampling_py
    BACKEND = "py"
else:
    try:
        from . import _sampling_ext as kernels
        BACKEND = "ext"
    except ImportError:
        if _requested == "ext":
            raise RuntimeError(
                "DBNF0_BACKEND=ext but the compiled extension is not available"
            )
        kernels = _sampling_py
        BACKEND = "py"


def backend_name():
    """Name of the active kernel backend ('ext' or 'py')."""
    return BACKEND
