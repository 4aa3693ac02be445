"""Reference autocorrelation values for tests/test_series.cpp.

Tensor-product quadrature of the 4D integral representation of the normalized
autocorrelation (Gauss-Legendre in both radii, periodic trapezoid in both
angles), vectorized numpy, repeated at two resolutions to show convergence.
"""
import sys

import numpy as np


def rss(rabs, phi, w, nr, vmax, m):
    x, wt = np.polynomial.legendre.leggauss(nr)
    v = (x + 1) * vmax / 2
    wt = wt * vmax / 2
    q = 2 * np.pi * np.arange(m) / m
    h = 2 * np.pi / m
    F = np.exp(1j * w * np.outer(v, np.cos(q)))
    f1 = F * np.exp(1j * q)
    f2 = F * np.exp(-1j * q)
    d = q[:, None] - q[None, :]
    tot = 0j
    for a in range(nr):
        xx = rabs * v[a] * v / 2  # (nr,)
        K = np.exp(-(v[a] ** 2 + v[:, None, None] ** 2) / 4 - xx[:, None, None] * np.cos(d[None] + phi))
        val = np.einsum("bij,i,bj->b", K, f1[a], f2) * h * h
        tot += wt[a] * np.sum(wt * val)
    return -tot / (2 * np.pi) ** 2


if __name__ == "__main__":
    for r, w in [(0.5, 0.5), (0.5, 1.0), (0.3, 1.2)]:
        lo = rss(r, 0.0, w, 64, 14.0, 96)
        hi = rss(r, 0.0, w, 96, 16.0, 128)
        print(f"r={r} w={w}: {hi.real:.15f} {hi.imag:.3e}  (coarse diff {abs(hi - lo):.2e})")
    sys.stdout.flush()
