"""Hot kernels. The compiled extension is used when it imports; set
LEVYK_KERNELS=python to force the numpy fallback."""

import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("LEVYK_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels


def _threads():
    from ..exponent import workers
    return workers()


def cosine_sum(rho, w, x):
    """sum_k w[k] cos(rho[k] x[j]) for every x[j]."""
    import numpy as np
    return _impl.cosine_sum(np.ascontiguousarray(rho, dtype=float),
                            np.ascontiguousarray(w, dtype=float),
                            np.ascontiguousarray(x, dtype=float), _threads())


def versine_sum(s, w, x):
    """sum_k w[k] (1 - cos(s[k] x[j])) for every x[j]."""
    import numpy as np
    return _impl.versine_sum(np.ascontiguousarray(s, dtype=float),
                             np.ascontiguousarray(w, dtype=float),
                             np.ascontiguousarray(x, dtype=float), _threads())


def versine_grid(s, w, drho, n):
    """sum_k w[k] (1 - cos(j drho s[k])) for j = 0..n-1."""
    import numpy as np
    return _impl.versine_grid(np.ascontiguousarray(s, dtype=float),
                              np.ascontiguousarray(w, dtype=float),
                              float(drho), int(n), _threads())


def direct_convolve(a, b, lo=0, hi=None):
    """Window [lo, hi) of the full linear convolution of a and b."""
    import numpy as np
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    if hi is None:
        hi = a.size + b.size - 1
    return _impl.direct_convolve(a, b, int(lo), int(hi), _threads())


def same_convolve(a, b):
    """Centred convolution: output aligned with ``a`` (b of odd length,
    centred on its middle entry)."""
    c = (len(b) - 1) // 2
    return direct_convolve(a, b, c, c + len(a))
