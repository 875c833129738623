# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pair-sum contraction (see ``_pairsum_py`` for the reference version)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sin, cos

cnp.import_array()


cdef inline double _pm(double x, int approx, double gamma) nogil:
    if approx == 0:
        if x == 0.0:
            return 1.0
        return sin(x) / x
    return exp(-gamma * x * x)


def contract_pair(const double complex[:, ::1] weights, const double[::1] q,
                  double gauss_coef, double c_pump, double c_x, double c_c,
                  double half_L, int approx, double gamma, int radius):
    cdef Py_ssize_t n = weights.shape[0]
    cdef double dq = q[1] - q[0]
    out_arr = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double[::1] q2 = np.asarray(q) ** 2
    cdef Py_ssize_t ox, oy, cx, cy, xi, xj, lo_x, hi_x, lo_y, hi_y
    cdef double s2, g, base, dk, pm
    cdef double complex w
    cdef int r = radius
    if r > n - 1:
        r = <int>(n - 1)
    with nogil:
        for ox in range(-r, r + 1):
            lo_x = ox if ox > 0 else 0
            hi_x = n - 1 + ox if ox < 0 else n - 1
            for oy in range(-r, r + 1):
                s2 = (ox * ox + oy * oy) * dq * dq
                g = exp(-gauss_coef * s2)
                if g < 1e-300:
                    continue
                base = -c_pump * s2
                lo_y = oy if oy > 0 else 0
                hi_y = n - 1 + oy if oy < 0 else n - 1
                for cx in range(lo_x, hi_x + 1):
                    xi = n - 1 - cx + ox
                    for cy in range(lo_y, hi_y + 1):
                        xj = n - 1 - cy + oy
                        w = weights[xi, xj]
                        if w == 0:
                            continue
                        if half_L == 0.0:
                            pm = 1.0
                        else:
                            dk = base + c_x * (q2[xi] + q2[xj]) + c_c * (q2[cx] + q2[cy])
                            pm = _pm(half_L * dk, approx, gamma)
                        out[cx, cy] = out[cx, cy] + w * (g * pm)
    return out_arr
