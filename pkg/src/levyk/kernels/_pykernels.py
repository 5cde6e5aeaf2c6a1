"""Pure numpy versions of the compiled kernels."""

import numpy as np

_CHUNK = 1 << 22


def cosine_sum(rho, w, x, threads=1):
    """out[j] = sum_k w[k] cos(rho[k] x[j])."""
    rho = np.ascontiguousarray(rho, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    out = np.empty(x.size)
    step = max(1, _CHUNK // max(rho.size, 1))
    for j in range(0, x.size, step):
        out[j:j + step] = np.cos(np.outer(x[j:j + step], rho)) @ w
    return out


def versine_sum(s, w, x, threads=1):
    """out[j] = sum_k w[k] (1 - cos(s[k] x[j])), computed as 2 sin^2."""
    s = np.ascontiguousarray(s, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    out = np.empty(x.size)
    step = max(1, _CHUNK // max(s.size, 1))
    for j in range(0, x.size, step):
        out[j:j + step] = 2.0 * np.sin(0.5 * np.outer(x[j:j + step], s)) ** 2 @ w
    return out


def direct_convolve(a, b, lo, hi, threads=1):
    """Entries lo..hi-1 of the full linear convolution of a and b."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    nz = np.flatnonzero(a)
    if nz.size == 0:
        return np.zeros(max(hi - lo, 0))
    a0, a1 = int(nz[0]), int(nz[-1]) + 1
    full = np.convolve(a[a0:a1], b)
    out = np.zeros(max(hi - lo, 0))
    # entry n of the trimmed product sits at index n - a0
    s0, s1 = max(lo, a0), min(hi, a0 + full.size)
    if s1 > s0:
        out[s0 - lo:s1 - lo] = full[s0 - a0:s1 - a0]
    return out


def versine_grid(s, w, drho, n, threads=1):
    """out[k] = sum_j w[j] (1 - cos(k drho s[j])), k = 0..n-1."""
    return versine_sum(s, w, drho * np.arange(n), threads)
