"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public functions dispatch on :func:`strokeseg.backend.use_numba`.
"""

from .conv import conv3x3_same, maxpool2x2
from .interp import bilinear_resize
from .labeling import label_components
from .clustering import lloyd

__all__ = [
    "conv3x3_same",
    "maxpool2x2",
    "bilinear_resize",
    "label_components",
    "lloyd",
]
