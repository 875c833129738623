"""Schmidt-number capacity of the channel and (alpha, beta) design scans."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .channel import OpticalConfig, crosstalk_matrix, kernel_thin, thin_width
from .modes import HG, LG, PhaseVortex, mode_size_factor

Basis = Literal["vortex", "lg", "hg"]

#: OAM indices scanned by default.
DEFAULT_ELLS = tuple(range(-5, 6))


def schmidt_from_spectrum(P_diag: Sequence[float]) -> float:
    """``1 / sum(P^2)`` after normalising ``P`` to unit sum."""
    p = np.asarray(P_diag, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("spectrum must be a non-empty 1D sequence")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("spectrum entries must be finite and non-negative")
    total = p.sum()
    if total <= 0:
        raise ValueError("spectrum is all zero")
    p = p / total
    return float(1.0 / np.sum(p * p))


def schmidt_from_kernel(cfg: OpticalConfig) -> float:
    """Schmidt number of the thin kernel windowed by the two ``w_0`` envelopes.

    The amplitude exp(-a|q_B - q_A|^2 - u|q_B|^2 - u|q_A|^2) with u = w_0^2 / 4 is a
    two-mode Gaussian in each Cartesian axis.  Writing it as
    exp(-A x^2 - A y^2 + 2 B x y) with A = a + u, B = a, one axis has Schmidt number
    1 / sqrt(1 - B^2 / A^2); the two axes multiply.
    """
    a = thin_width(cfg)
    u = cfg.w_0**2 / 4.0
    A = a + u
    k1 = 1.0 / math.sqrt(1.0 - (a / A) ** 2)
    return float(k1 * k1)


def kappa_estimate(cfg: OpticalConfig) -> float:
    """Order-of-magnitude capacity from the phase-matching bandwidth."""
    if cfg.L_p != cfg.L_D:
        raise ValueError("kappa estimate needs equal crystal lengths")
    L = cfg.L_p
    if L <= 0:
        raise ValueError("kappa estimate needs a non-zero crystal length")
    num = cfg.n_A * cfg.n_B * cfg.w_D**2 * cfg.w_p**2
    den = (cfg.w_D**2 + cfg.w_p**2) * (cfg.n_A * cfg.lambda_B + cfg.n_B * cfg.lambda_A) * L
    return float(num / den)


def alpha_threshold(beta: float, ell: int, n_ratio: float = 1.0) -> float:
    """Smallest ``alpha`` keeping mode ``ell`` inside the channel bandwidth."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return float(n_ratio * math.sqrt(beta + 1.0) * mode_size_factor(ell))


def basis_modes(basis: Basis, waist: float, ells: Iterable[int] = DEFAULT_ELLS, hg_order: int = 4) -> list:
    """Mode list for a capacity evaluation.

    ``vortex`` and ``lg`` use the OAM indices ``ells`` (LG with p = 0); ``hg`` uses
    all (n, m) with n, m <= ``hg_order``.
    """
    if basis == "vortex":
        return [PhaseVortex(l, waist) for l in ells]
    if basis == "lg":
        return [LG(l, 0, waist) for l in ells]
    if basis == "hg":
        return [HG(n, m, waist) for n in range(hg_order + 1) for m in range(hg_order + 1)]
    raise ValueError(f"unknown basis {basis!r}")


def modal_spectrum(cfg: OpticalConfig, basis: Basis = "vortex", ells: Iterable[int] = DEFAULT_ELLS) -> np.ndarray:
    """Crosstalk diagonal of the thin kernel over ``basis``."""
    modes = basis_modes(basis, cfg.w_0, ells)
    return crosstalk_matrix(kernel_thin(cfg), modes, modes).diagonal()


def modal_capacity(cfg: OpticalConfig, basis: Basis = "vortex", ells: Iterable[int] = DEFAULT_ELLS) -> float:
    return schmidt_from_spectrum(modal_spectrum(cfg, basis, ells))


@dataclass(frozen=True, eq=False)
class CapacityScan:
    alphas: list
    betas: list
    K: np.ndarray  # shape (len(betas), len(alphas))
    basis: str = "vortex"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["beta\\alpha", *[repr(float(a)) for a in self.alphas]])
        for b, row in zip(self.betas, self.K):
            w.writerow([repr(float(b)), *[repr(float(k)) for k in row]])
        return buf.getvalue()

    def columns(self) -> dict:
        return {
            "beta": [float(b) for b in self.betas],
            **{repr(float(a)): [float(v) for v in self.K[:, j]] for j, a in enumerate(self.alphas)},
        }


def capacity_scan(
    cfg: OpticalConfig,
    alphas: Sequence[float],
    betas: Sequence[float],
    basis: Basis = "vortex",
    ells: Iterable[int] = DEFAULT_ELLS,
    workers: int = 1,
) -> CapacityScan:
    """Modal Schmidt number over a grid of ``alpha = w_p / w_0`` and ``beta = w_p / w_D``."""
    alphas = [float(a) for a in alphas]
    betas = [float(b) for b in betas]
    if not alphas or not betas:
        raise ValueError("alpha and beta ranges must be non-empty")
    ells = tuple(ells)
    cells = [(i, j) for i in range(len(betas)) for j in range(len(alphas))]

    def task(ij):
        i, j = ij
        return modal_capacity(cfg.with_ratios(alphas[j], betas[i]), basis, ells)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(task, cells))
    else:
        values = [task(c) for c in cells]
    K = np.empty((len(betas), len(alphas)))
    for (i, j), v in zip(cells, values):
        K[i, j] = v
    return CapacityScan(alphas, betas, K, basis)
