"""Fractional-OAM dimensionality witness.

A probe ``U_n(theta)`` is sent through a diagonal channel
``T = sum_l lambda_l |l><l|`` mixed with white noise; the detection
probability against ``U_n(0)`` is

    P_n(theta) = p |sum_l lambda_l <U_n(0)_l | U_n(theta)_l>|^2 + (1 - p) / d^2 * I_n,

with ``I_n = (sum_{l in S} |c_l|^2)^2`` the overlap of both probes with the
d-dimensional identity on the channel support S.  Visibilities between
theta = 0 and theta = pi / n are fitted for purity p and dimension K.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .metrics import visibility
from .modes import MomentumGrid, fractional_probe, oam_cross

#: Odd probe orders used when none are given.
DEFAULT_N_LIST = (1, 3, 5, 7, 9, 11, 13)
#: Visibilities below this are treated as the pure-noise (indeterminate) level.
INDETERMINATE_V = 1e-9


def centered_support(d: int) -> tuple[int, ...]:
    """``d`` consecutive OAM indices centred on zero (extra index on the positive side)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    lo = -((d - 1) // 2)
    return tuple(range(lo, lo + d))


@dataclass(frozen=True)
class DiagonalChannel:
    """Schmidt amplitudes ``lambda_l`` (sum of squares is one)."""

    lambdas: Mapping[int, float]

    def __post_init__(self):
        lam = {int(k): float(v) for k, v in dict(self.lambdas).items()}
        if not lam or any(v < 0 or not np.isfinite(v) for v in lam.values()):
            raise ValueError("lambdas must be non-empty, finite and non-negative")
        s = sum(v * v for v in lam.values())
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"sum of lambda^2 is {s}, expected 1")
        object.__setattr__(self, "lambdas", dict(sorted(lam.items())))

    def __hash__(self):
        return hash(tuple(self.lambdas.items()))

    @classmethod
    def flat(cls, d: int) -> "DiagonalChannel":
        return cls({l: 1.0 / math.sqrt(d) for l in centered_support(d)})

    @classmethod
    def from_intensities(cls, weights: Mapping[int, float]) -> "DiagonalChannel":
        """Amplitudes ``sqrt(P_l / sum P)`` from intensity weights (e.g. a crosstalk diagonal)."""
        total = float(sum(weights.values()))
        if total <= 0:
            raise ValueError("intensity weights sum to zero")
        return cls({l: math.sqrt(max(w, 0.0) / total) for l, w in weights.items()})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.lambdas)


def _check_n(n_index: int) -> int:
    if isinstance(n_index, bool) or int(n_index) != n_index or n_index < 1 or n_index % 2 == 0:
        raise ValueError(f"probe order must be a positive odd integer, got {n_index!r}")
    return int(n_index)


_PROBE_WAIST = 1.0
_PROBE_GRID = MomentumGrid.for_waist(_PROBE_WAIST, n=64)


@lru_cache(maxsize=512)
def probe_overlaps(n_index: int, theta: float, ells: tuple[int, ...]) -> tuple[complex, ...]:
    """``<U_n(0)_l | U_n(theta)_l>`` for each l in ``ells``."""
    n_index = _check_n(n_index)
    theta = float(np.mod(theta, 2 * np.pi))
    u0 = fractional_probe(n_index, 0.0, _PROBE_GRID, _PROBE_WAIST)
    ut = u0 if theta == 0.0 else fractional_probe(n_index, theta, _PROBE_GRID, _PROBE_WAIST)
    x = oam_cross(u0, ut, ells)
    return tuple(x[l] for l in ells)


def probe_probability(chan: DiagonalChannel, n_index: int, theta: float, p_noise: float, d: int) -> float:
    """Detection probability ``P_n(theta)`` for purity ``p_noise`` and noise dimension ``d``."""
    if not 0.0 <= p_noise <= 1.0:
        raise ValueError("p_noise must lie in [0, 1]")
    if d < 1:
        raise ValueError("d must be >= 1")
    ells = chan.support
    lam = np.array([chan.lambdas[l] for l in ells])
    x = np.array(probe_overlaps(n_index, theta, ells))
    w0 = np.real(np.array(probe_overlaps(n_index, 0.0, ells)))
    coherent = abs(np.sum(lam * x)) ** 2
    identity = float(np.sum(w0)) ** 2
    return float(max(p_noise * coherent + (1.0 - p_noise) / d**2 * identity, 0.0))


def probe_visibilities(chan: DiagonalChannel, n_list: Iterable[int], p_noise: float, d: int) -> list[float]:
    out = []
    for n in n_list:
        n = _check_n(n)
        p0 = probe_probability(chan, n, 0.0, p_noise, d)
        p1 = probe_probability(chan, n, np.pi / n, p_noise, d)
        out.append(visibility(p0, p1) if p0 + p1 > 0 else 0.0)
    return out


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProbeFit:
    n_list: list
    visibilities: list
    p_hat: float
    K_hat: float
    residual: float
    indeterminate: bool = False

    def rows(self) -> list[tuple]:
        return [(n, v, self.p_hat, self.K_hat, self.residual) for n, v in zip(self.n_list, self.visibilities)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "V_n", "p_fit", "K_fit", "residual"])
        for row in self.rows():
            w.writerow([row[0], *[repr(float(x)) for x in row[1:]]])
        return buf.getvalue()


@lru_cache(maxsize=256)
def _flat_terms(d: int, n_list: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Coherent and identity parts of P_n(0), P_n(pi/n) for the flat d-mode channel."""
    chan = DiagonalChannel.flat(d)
    c0, c1, i0, i1 = [], [], [], []
    for n in n_list:
        c0.append(probe_probability(chan, n, 0.0, 1.0, d))
        c1.append(probe_probability(chan, n, np.pi / n, 1.0, d))
        ident = probe_probability(chan, n, 0.0, 0.0, d)
        i0.append(ident)
        i1.append(ident)
    return np.array(c0), np.array(c1), np.array(i0), np.array(i1)


def _flat_visibility(p: np.ndarray, d: int, n_list: tuple[int, ...]) -> np.ndarray:
    """V_n for the flat model, shape (len(p), len(n_list))."""
    c0, c1, i0, i1 = _flat_terms(d, n_list)
    p = np.asarray(p, dtype=float)[:, None]
    a = p * c0 + (1 - p) * i0
    b = p * c1 + (1 - p) * i1
    s = a + b
    return np.where(s > 0, np.abs(a - b) / np.where(s > 0, s, 1.0), 0.0)


def model_visibility(p, K: float, n_list: Sequence[int]) -> np.ndarray:
    """Flat-channel visibilities at purity ``p`` and (possibly fractional) dimension ``K``."""
    n_list = tuple(int(n) for n in n_list)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    lo = int(math.floor(K))
    frac = K - lo
    v = _flat_visibility(p, lo, n_list)
    if frac > 0:
        v = (1 - frac) * v + frac * _flat_visibility(p, lo + 1, n_list)
    return v


def fit_purity_dimension(visibilities: Sequence[tuple[int, float]], k_step: float = 0.25, p_step: float = 0.01) -> ProbeFit:
    """Least-squares (p, K) from (n, V_n) pairs: grid search, then local refinement.

    Ties on the grid are broken toward smaller K, then larger p.
    """
    pts = sorted((int(n), float(v)) for n, v in visibilities)
    if len(pts) < 2:
        raise ValueError("need at least two visibility points")
    n_list = tuple(_check_n(n) for n, _ in pts)
    v_obs = np.array([v for _, v in pts])
    if np.all(np.abs(v_obs) <= INDETERMINATE_V):
        return ProbeFit(list(n_list), list(v_obs), 0.0, 1.0, 0.0, indeterminate=True)

    p_grid = np.round(np.arange(0.0, 1.0 + p_step / 2, p_step), 12)
    k_max = 2.0 * max(n_list)
    k_grid = np.arange(1.0, k_max + k_step / 2, k_step)
    resid = np.empty((k_grid.size, p_grid.size))
    for i, K in enumerate(k_grid):
        resid[i] = np.sum((model_visibility(p_grid, float(K), n_list) - v_obs[None, :]) ** 2, axis=1)
    best = resid.min()
    tie = np.argwhere(resid <= best * (1 + 1e-12) + 1e-300)
    # smallest K first, then largest p
    i, j = min(tie, key=lambda ij: (ij[0], -ij[1]))
    p0, k0, r0 = float(p_grid[j]), float(k_grid[i]), float(resid[i, j])

    def objective(x):
        p = min(max(x[0], 0.0), 1.0)
        K = min(max(x[1], 1.0), k_max)
        return float(np.sum((model_visibility(p, K, n_list)[0] - v_obs) ** 2))

    res = minimize(objective, x0=[p0, k0], method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-14, "initial_simplex": [[p0, k0], [p0 - p_step, k0], [p0, k0 - k_step]]})
    p_hat, k_hat, r_hat = p0, k0, r0
    if res.fun < r0:
        p_hat = min(max(float(res.x[0]), 0.0), 1.0)
        k_hat = min(max(float(res.x[1]), 1.0), k_max)
        r_hat = objective([p_hat, k_hat])
    return ProbeFit(list(n_list), list(v_obs), p_hat, k_hat, r_hat)
