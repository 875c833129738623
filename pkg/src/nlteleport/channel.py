"""SPDC/SFG two-photon amplitudes and the teleportation channel kernel.

The channel kernel is the partial overlap of the sum-frequency and
down-conversion amplitudes over the shared photon C,

    T(q_B, q_A) = (2 pi)^-2  int d^2 q_C  f_SFG(q_A, q_C)^* f_SPDC(q_B, q_C),

which in the thin-crystal limit becomes a Gaussian of q_B - q_A.  Modes are
mapped through it by :func:`kernel_element`.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Literal, Sequence, Union

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import ive

from . import _kernels
from .errors import GridMismatchError, GridTooCoarseError, ToleranceNotMetError
from .modes import (
    AngularSpectrum,
    MomentumGrid,
    ModeSpec,
    PolarCoefficients,
    _default_nr,
    format_mode,
    mode_spectrum,
    polar_coefficients,
)

Role = Literal["SPDC", "SFG"]
Approx = Literal["sinc", "gaussian"]

TWO_PI = 2.0 * np.pi
#: Pump Gaussian values below exp(-GAUSS_CUT) are dropped from quadrature sums.
GAUSS_CUT = 40.0
#: Thin-crystal diagnostic threshold on lambda_p L / w^2.
THIN_LIMIT = 0.1
#: Default relative tolerance of the quadrature kernel.
DEFAULT_TOLERANCE = 1e-6


@dataclass(frozen=True, kw_only=True)
class OpticalConfig:
    """Physical parameters of the SPDC source and SFG detector (SI units)."""

    lambda_p: float = 532e-9
    lambda_A: float = 1565e-9
    lambda_B: float = 1565e-9
    lambda_C: float = 808e-9
    n_p: float
    n_A: float
    n_B: float
    n_C: float
    L_p: float = 5e-3
    L_D: float = 5e-3
    Lambda_pp: float = 9.675e-6
    w_p: float = 600e-6
    w_D: float = 600e-6
    w_0: float = 50e-6
    gamma_sinc: float = 1.0 / 6.0

    def __post_init__(self):
        for name in ("lambda_p", "lambda_A", "lambda_B", "lambda_C", "Lambda_pp", "w_p", "w_D", "w_0", "gamma_sinc"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        for name in ("L_p", "L_D"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be non-negative, got {v}")
        for name in ("n_p", "n_A", "n_B", "n_C"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 1):
                raise ValueError(f"{name} must be >= 1, got {v}")
        for idler in ("lambda_A", "lambda_B"):
            mismatch = abs(1 / self.lambda_p - 1 / getattr(self, idler) - 1 / self.lambda_C) * self.lambda_p
            if mismatch > 5e-3:
                raise ValueError(f"energy conservation violated by {mismatch:.2%} ({idler})")

    @classmethod
    def default(cls, n: float = 1.8, **overrides) -> "OpticalConfig":
        """Reference configuration with all refractive indices equal to ``n``."""
        return cls(**{"n_p": n, "n_A": n, "n_B": n, "n_C": n, **overrides})

    @property
    def alpha(self) -> float:
        return self.w_p / self.w_0

    @property
    def beta(self) -> float:
        return self.w_p / self.w_D

    def with_ratios(self, alpha: float, beta: float) -> "OpticalConfig":
        """Same pump, with ``w_0 = w_p / alpha`` and ``w_D = w_p / beta``."""
        return replace(self, w_0=self.w_p / alpha, w_D=self.w_p / beta)

    def coeff(self, which: str) -> float:
        """Paraxial coefficient ``lambda / (4 pi n)`` of beam ``which`` in {p, A, B, C}."""
        return getattr(self, f"lambda_{which}") / (4.0 * np.pi * getattr(self, f"n_{which}"))

    def role_params(self, role: Role) -> tuple[float, float, str]:
        """(waist, crystal length, idler label) for a process."""
        role = _role(role)
        if role == "SPDC":
            return self.w_p, self.L_p, "B"
        return self.w_D, self.L_D, "A"


def _role(role: str) -> str:
    r = str(role).upper()
    if r not in ("SPDC", "SFG"):
        raise ValueError(f"role must be SPDC or SFG, got {role!r}")
    return r


def _approx(approx: str) -> int:
    if approx == "sinc":
        return 0
    if approx == "gaussian":
        return 1
    raise ValueError(f"approx must be 'sinc' or 'gaussian', got {approx!r}")


def _sq(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.sum(q * q, axis=-1)


def delta_kz(q1, q2, cfg: OpticalConfig, role: Role) -> np.ndarray:
    """Longitudinal phase mismatch for momenta ``q1`` (idler B or A) and ``q2`` (photon C).

    ``q1`` and ``q2`` are arrays whose last axis holds (q_x, q_y).
    """
    _, _, idler = cfg.role_params(role)
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    return -cfg.coeff("p") * _sq(q1 + q2) + cfg.coeff(idler) * _sq(q1) + cfg.coeff("C") * _sq(q2)


def phase_matching(x, approx: Approx, gamma: float) -> np.ndarray:
    """PM(x) with x = L dkz / 2: ``sinc(x)`` or ``exp(-gamma x^2)``."""
    x = np.asarray(x, dtype=float)
    if _approx(approx) == 0:
        return np.sinc(x / np.pi)
    return np.exp(-gamma * x * x)


def pair_normalization(cfg: OpticalConfig, role: Role, approx: Approx = "sinc") -> float:
    """Constant N making ``int |f|^2 d^2q_X d^2q_C = 1`` in the separable thin-crystal estimate.

    With s = q_X + q_C the pump factor integrates to 2 pi / w^2 and, neglecting
    the pump term in dkz, the phase-matching factor to pi * int |PM|^2 d(v^2)
    with coefficient c = c_X + c_C.  A zero-length crystal has no finite norm;
    N = 1 is returned in that case.
    """
    w, L, idler = cfg.role_params(role)
    if L == 0:
        return 1.0
    c = cfg.coeff(idler) + cfg.coeff("C")
    if _approx(approx) == 0:
        j = np.pi**2 / (L * c)
    else:
        j = (np.pi / (L * c)) * math.sqrt(np.pi / (2.0 * cfg.gamma_sinc))
    return 1.0 / math.sqrt(TWO_PI / w**2 * j)


def pair_amplitude(qX, qC, cfg: OpticalConfig, role: Role, approx: Approx = "sinc") -> np.ndarray:
    """Two-photon amplitude ``N exp(-w^2 |qX + qC|^2 / 4) PM(L dkz / 2)``."""
    w, L, _ = cfg.role_params(role)
    qX = np.asarray(qX, dtype=float)
    qC = np.asarray(qC, dtype=float)
    gauss = np.exp(-(w**2) * _sq(qX + qC) / 4.0)
    pm = phase_matching(0.5 * L * delta_kz(qX, qC, cfg, role), approx, cfg.gamma_sinc)
    return pair_normalization(cfg, role, approx) * gauss * pm


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedThin:
    """Thin-crystal kernel ``amplitude * exp(-width_a |q_B - q_A|^2)``."""

    amplitude: float
    width_a: float

    def __call__(self, dq) -> np.ndarray:
        """Kernel at momentum difference(s) ``dq`` (vectors on the last axis)."""
        return self.amplitude * np.exp(-self.width_a * _sq(dq))

    def delta_weight(self) -> float:
        """Integral of the kernel over the plane; the identity-channel scale."""
        return self.amplitude * np.pi / self.width_a


@dataclass(frozen=True)
class Quadrature:
    """Finite-crystal kernel evaluated by nested quadrature on ``grid``."""

    config: OpticalConfig
    grid: MomentumGrid
    tolerance: float = DEFAULT_TOLERANCE
    approx: str = "sinc"
    max_n: int = 256

    def thin_bound(self) -> float:
        """Upper bound on any normalised kernel element (|PM| <= 1)."""
        return kernel_thin(self.config, self.approx).delta_weight()


ChannelKernel = Union[ClosedThin, Quadrature]


def thin_width(cfg: OpticalConfig) -> float:
    return cfg.w_D**2 * cfg.w_p**2 / (4.0 * (cfg.w_D**2 + cfg.w_p**2))


def kernel_thin(cfg: OpticalConfig, approx: Approx = "sinc") -> ClosedThin:
    """Closed-form thin-crystal kernel."""
    amp = (
        pair_normalization(cfg, "SPDC", approx)
        * pair_normalization(cfg, "SFG", approx)
        / (np.pi * (cfg.w_D**2 + cfg.w_p**2))
    )
    return ClosedThin(amp, thin_width(cfg))


def kernel_quadrature(
    cfg: OpticalConfig,
    grid: MomentumGrid | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    approx: Approx = "sinc",
    max_n: int = 256,
) -> Quadrature:
    if grid is None:
        grid = MomentumGrid.for_waist(cfg.w_0, n=64)
    _approx(approx)
    return Quadrature(cfg, grid, tolerance, approx, max_n)


# ---------------------------------------------------------------------------
# kernel elements
# ---------------------------------------------------------------------------


def _fft_element(kernel: ClosedThin, proj: AngularSpectrum, inp: AngularSpectrum) -> complex:
    g = proj.grid
    k = np.arange(-(g.n - 1), g.n) * g.dq
    kern = kernel.amplitude * np.exp(-kernel.width_a * (k[:, None] ** 2 + k[None, :] ** 2))
    conv = fftconvolve(inp.samples, kern, mode="same") * g.dq**2
    return complex(np.vdot(proj.samples, conv) * g.dq**2)


def _bessel_matrix(width_a: float, r: np.ndarray, wr: np.ndarray, m: int) -> np.ndarray:
    """Angular harmonic ``m`` of the Gaussian kernel, with radial quadrature weights folded in."""
    rr = r * wr
    z = 2.0 * width_a * np.outer(r, r)
    return np.exp(-width_a * (r[:, None] - r[None, :]) ** 2) * ive(abs(m), z) * np.outer(rr, rr)


@lru_cache(maxsize=32)
def _bessel_matrix_cached(width_a: float, r_max: float, n_r: int, m: int) -> np.ndarray:
    from .modes import radial_nodes

    r, wr = radial_nodes(r_max, n_r)
    out = _bessel_matrix(width_a, r, wr, m)
    out.setflags(write=False)
    return out


#: Azimuthal samples used by the polar kernel path.
POLAR_NPHI = 256


def _polar_nr(width_a: float, r_max: float, order: int) -> int:
    return int(min(4096, max(_default_nr(order), math.ceil(4.0 * r_max * math.sqrt(width_a)))))


def _polar_contract(kernel: ClosedThin, pp: PolarCoefficients, pi: PolarCoefficients, r_max: float) -> complex:
    power_p = pp.harmonic_power()
    power_i = pi.harmonic_power()
    live = np.nonzero((power_p > 1e-30 * power_p.sum()) & (power_i > 1e-30 * power_i.sum()))[0]
    n_r = pp.r.size
    total = 0j
    for k in live:
        m = int(pp.m[k])
        if n_r <= 1024:
            bm = _bessel_matrix_cached(kernel.width_a, r_max, n_r, m)
        else:
            bm = _bessel_matrix(kernel.width_a, pp.r, pp.weights, m)
        total += np.conj(pp.A[:, k]) @ (bm @ pi.A[:, k])
    return complex(kernel.amplitude * TWO_PI**2 * total)


def _polar_pair(kernel: ClosedThin, proj: AngularSpectrum, inp: AngularSpectrum, n_phi: int = POLAR_NPHI):
    fp, rp, op = proj.evaluator()
    fi, ri, oi = inp.evaluator()
    r_max = max(rp, ri)
    n_r = _polar_nr(kernel.width_a, r_max, max(op, oi))
    return polar_coefficients(fp, r_max, n_r, n_phi), polar_coefficients(fi, r_max, n_r, n_phi), r_max


def _contract(cfg: OpticalConfig, grid: MomentumGrid, proj: np.ndarray, inp: np.ndarray, approx: str) -> complex:
    """Quadrature element on ``grid`` from raw samples (see module docstring)."""
    q = grid.q
    dq = grid.dq
    code = _approx(approx)
    out = []
    for role, weights in (("SFG", inp * dq**2), ("SPDC", np.conj(proj) * dq**2)):
        w, L, idler = cfg.role_params(role)
        radius = int(math.ceil(2.0 * math.sqrt(GAUSS_CUT) / (w * dq)))
        part = _kernels.contract_pair(
            np.ascontiguousarray(weights, dtype=np.complex128),
            np.ascontiguousarray(q),
            w**2 / 4.0,
            cfg.coeff("p"),
            cfg.coeff(idler),
            cfg.coeff("C"),
            0.5 * L,
            code,
            cfg.gamma_sinc,
            radius,
        )
        out.append(np.asarray(part) * pair_normalization(cfg, role, approx))
    g, h = out
    return complex(np.sum(g * h) * dq**2 / TWO_PI**2)


def _resampled(spec, grid: MomentumGrid) -> np.ndarray | None:
    try:
        return mode_spectrum(spec, grid).samples
    except GridTooCoarseError:
        return None


def _quadrature_element(kernel: Quadrature, proj: AngularSpectrum, inp: AngularSpectrum) -> complex:
    cfg, grid = kernel.config, proj.grid
    value = _contract(cfg, grid, proj.samples, inp.samples, kernel.approx)
    if proj.source is None or inp.source is None or kernel.tolerance <= 0:
        return value
    scale = kernel.thin_bound()

    coarse = MomentumGrid(grid.n // 2, grid.q_max) if grid.n >= 64 else None
    if coarse is not None:
        a, b = _resampled(proj.source, coarse), _resampled(inp.source, coarse)
        if a is not None and b is not None:
            est = abs(value - _contract(cfg, coarse, a, b, kernel.approx)) / scale
            if est <= kernel.tolerance:
                return value
    # refine until two successive grids agree
    n = grid.n
    est = float("inf")
    while 2 * n <= kernel.max_n:
        n *= 2
        fine = MomentumGrid(n, grid.q_max)
        refined = _contract(
            cfg, fine, mode_spectrum(proj.source, fine).samples, mode_spectrum(inp.source, fine).samples, kernel.approx
        )
        est = abs(refined - value) / scale
        value = refined
        if est <= kernel.tolerance:
            return value
    raise ToleranceNotMetError(
        f"quadrature kernel element did not reach tolerance {kernel.tolerance:g} (estimate {est:.3g})",
        est,
        kernel.tolerance,
    )


def kernel_element(
    kernel: ChannelKernel,
    proj: AngularSpectrum,
    inp: AngularSpectrum,
    method: Literal["auto", "polar", "fft"] = "auto",
) -> complex:
    """Matrix element ``<proj| T |inp>``.

    For :class:`ClosedThin` kernels ``method`` selects the convolution route:
    ``"polar"`` diagonalises the rotation-invariant kernel over azimuthal
    harmonics (needs analytic sources, exact OAM selection rule), ``"fft"``
    convolves the Cartesian samples.  ``"auto"`` prefers polar.
    """
    if proj.grid != inp.grid:
        raise GridMismatchError(f"{proj.grid} vs {inp.grid}")
    if isinstance(kernel, Quadrature):
        return _quadrature_element(kernel, proj, inp)
    if method == "fft" or (method == "auto" and (proj.source is None or inp.source is None)):
        return _fft_element(kernel, proj, inp)
    if method not in ("auto", "polar"):
        raise ValueError(f"unknown method {method!r}")
    pp, pi, r_max = _polar_pair(kernel, proj, inp)
    return _polar_contract(kernel, pp, pi, r_max)


# ---------------------------------------------------------------------------
# crosstalk
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CrosstalkMatrix:
    """``P[i, j] = |<detected_i| T |prepared_j>|^2``."""

    prepared: list
    detected: list
    P: np.ndarray
    normalization: str = "raw"

    def diagonal(self) -> np.ndarray:
        return np.diag(self.P).copy()


def default_grid(modes: Sequence[ModeSpec], n: int = 128) -> MomentumGrid:
    return MomentumGrid.for_waist(min(m.waist_min() for m in modes), n=n)


def channel_matrix(
    kernel: ChannelKernel,
    detected: Sequence[ModeSpec],
    prepared: Sequence[ModeSpec],
    grid: MomentumGrid | None = None,
    method: str = "auto",
    workers: int = 1,
) -> np.ndarray:
    """Complex amplitudes ``M[i, j] = <detected_i| T |prepared_j>``."""
    if not detected or not prepared:
        raise ValueError("mode lists must be non-empty")
    if grid is None:
        grid = kernel.grid if isinstance(kernel, Quadrature) else default_grid([*detected, *prepared])
    det = [mode_spectrum(s, grid) for s in detected]
    prep = [mode_spectrum(s, grid) for s in prepared]
    pairs = [(i, j) for i in range(len(det)) for j in range(len(prep))]

    if isinstance(kernel, ClosedThin) and method in ("auto", "polar"):
        # share the per-mode harmonic analysis across all pairs
        evals = [s.evaluator() for s in det + prep]
        r_max = max(e[1] for e in evals)
        n_r = _polar_nr(kernel.width_a, r_max, max(e[2] for e in evals))
        coeffs = [polar_coefficients(e[0], r_max, n_r, POLAR_NPHI) for e in evals]
        cd, cp = coeffs[: len(det)], coeffs[len(det):]

        def task(ij):
            return _polar_contract(kernel, cd[ij[0]], cp[ij[1]], r_max)
    else:
        def task(ij):
            return kernel_element(kernel, det[ij[0]], prep[ij[1]], method=method)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(task, pairs))
    else:
        values = [task(ij) for ij in pairs]
    out = np.zeros((len(det), len(prep)), dtype=complex)
    for (i, j), v in zip(pairs, values):
        out[i, j] = v
    return out


def crosstalk_matrix(
    kernel: ChannelKernel,
    prepared: Sequence[ModeSpec],
    detected: Sequence[ModeSpec],
    normalization: Literal["raw", "column"] = "raw",
    grid: MomentumGrid | None = None,
    method: str = "auto",
    workers: int = 1,
) -> CrosstalkMatrix:
    """Detection probabilities for each prepared mode; ``"column"`` normalises per prepared mode."""
    if normalization not in ("raw", "column"):
        raise ValueError(f"normalization must be 'raw' or 'column', got {normalization!r}")
    amps = channel_matrix(kernel, detected, prepared, grid=grid, method=method, workers=workers)
    P = np.abs(amps) ** 2
    if normalization == "column":
        sums = P.sum(axis=0)
        if np.any(sums == 0):
            raise ValueError("a prepared mode has no detected probability; cannot normalise")
        P = P / sums[None, :]
    return CrosstalkMatrix([format_mode(s) for s in prepared], [format_mode(s) for s in detected], P, normalization)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThinCrystalRatio:
    spdc: float
    sfg: float
    flagged: bool


def thin_crystal_ratio(cfg: OpticalConfig) -> ThinCrystalRatio:
    """``lambda_p L / w^2`` for source and detector; flagged above 0.1."""
    spdc = cfg.lambda_p * cfg.L_p / cfg.w_p**2
    sfg = cfg.lambda_p * cfg.L_D / cfg.w_D**2
    return ThinCrystalRatio(spdc, sfg, bool(max(spdc, sfg) > THIN_LIMIT))
