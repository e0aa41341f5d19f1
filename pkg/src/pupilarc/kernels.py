"""Backend selection for the hot loops.

The compiled extension ``_ckernels`` is used when it was built; otherwise
the numpy/pure-Python twins in ``_pykernels`` are used. Setting
``PUPILARC_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

python_backend = _pykernels
compiled_backend = None

if os.environ.get("PUPILARC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if _impl is compiled_backend else "python"

ellipse_distances = _impl.ellipse_distances
route_edges = _impl.route_edges
thin_chain = _impl.thin_chain
smooth_rows_cols = _impl.smooth_rows_cols
sobel = _impl.sobel
integral_table = _impl.integral_table
haar_best = _impl.haar_best
haar_blocks = _impl.haar_blocks


def available_backends():
    names = {"python": python_backend}
    if compiled_backend is not None:
        names["cython"] = compiled_backend
    return names
