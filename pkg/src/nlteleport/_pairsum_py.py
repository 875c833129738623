"""Pure-numpy pair-sum contraction.

Computes, for every grid point q_c,

    out[c] = sum_x weights[x] * exp(-gauss_coef |q_x + q_c|^2) * PM(half_L * dkz(q_x, q_c))

with dkz = -c_pump |q_x + q_c|^2 + c_x |q_x|^2 + c_c |q_c|^2.  On the
symmetric cell-centred grid q_x + q_c equals (o_x, o_y) * dq whenever
x = n - 1 - c + o, so the sum runs over integer offsets o inside a window
of half-width ``radius`` where the Gaussian factor is non-negligible.
"""
from __future__ import annotations

import numpy as np


def _pm(x: np.ndarray, approx: int, gamma: float) -> np.ndarray:
    if approx == 0:
        return np.sinc(x / np.pi)
    return np.exp(-gamma * x * x)


def contract_pair(weights, q, gauss_coef, c_pump, c_x, c_c, half_L, approx, gamma, radius):
    weights = np.ascontiguousarray(weights, dtype=np.complex128)
    q = np.asarray(q, dtype=np.float64)
    n = weights.shape[0]
    dq = q[1] - q[0]
    r = min(int(radius), n - 1)
    q2 = q * q
    flipped = weights[::-1, ::-1]
    q2_flip = q2[::-1]
    out = np.zeros((n, n), dtype=np.complex128)
    for ox in range(-r, r + 1):
        cx = slice(max(ox, 0), n - 1 + min(ox, 0) + 1)
        kx = slice(cx.start - ox, cx.stop - ox)
        for oy in range(-r, r + 1):
            s2 = (ox * ox + oy * oy) * dq * dq
            g = np.exp(-gauss_coef * s2)
            if g < 1e-300:
                continue
            cy = slice(max(oy, 0), n - 1 + min(oy, 0) + 1)
            ky = slice(cy.start - oy, cy.stop - oy)
            w = flipped[kx, ky]
            if half_L == 0.0:
                out[cx, cy] += g * w
                continue
            dk = (-c_pump * s2
                  + c_x * (q2_flip[kx][:, None] + q2_flip[ky][None, :])
                  + c_c * (q2[cx][:, None] + q2[cy][None, :]))
            out[cx, cy] += w * (g * _pm(half_L * dk, approx, gamma))
    return out
