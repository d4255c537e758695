"""Backend selection for the transfer-matrix kernel.

The compiled extension is used when it imports; set
``LEAKYCAVITY_PURE_PYTHON=1`` to force the NumPy implementation.
"""
import os

from . import _magnus_py

python_magnus4 = _magnus_py.magnus4_transfer

try:
    from ._magnus import magnus4_transfer as compiled_magnus4
except ImportError:  # extension not built
    compiled_magnus4 = None

if compiled_magnus4 is not None and os.environ.get("LEAKYCAVITY_PURE_PYTHON", "") != "1":
    magnus4_transfer = compiled_magnus4
    BACKEND = "cython"
else:
    magnus4_transfer = python_magnus4
    BACKEND = "python"
