"""Transverse spatial modes in the momentum representation.

Every mode is a complex field over the transverse wave vector q = (q_x, q_y).
Mode descriptions (:class:`LG`, :class:`HG`, :class:`Gauss`,
:class:`PhaseVortex`, :class:`FracOAM`, :class:`Superposition`) are immutable
and callable as ``spec(r, phi)``, returning the continuously normalised field
at polar momentum coordinates.  :func:`mode_spectrum` samples one onto a
:class:`MomentumGrid`.

Waist convention: a mode of position-space waist ``w`` has momentum-space
width ``W = 2 / w``, so a Gaussian is ``exp(-w**2 |q|**2 / 4)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Union

import numpy as np
from scipy import special
from scipy.ndimage import map_coordinates

from .errors import GridMismatchError, GridTooCoarseError, ModeSpecSyntaxError

TWO_PI = 2.0 * np.pi

#: Default samples per axis.
DEFAULT_N = 128
#: Default half-window in units of 1 / w_min.  At 9 / w a Gaussian is exp(-81/4) ~ 1.6e-9.
QMAX_FACTOR = 9.0
#: Largest admissible Gaussian amplitude (relative to peak) at the window edge.
EDGE_DECAY = 1e-8
#: Default number of azimuthal samples for OAM analysis.
DEFAULT_NPHI = 1024
#: Tolerated norm defect of a freshly sampled mode before it is rejected.
CAPTURE_TOL = 0.01


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentumGrid:
    """Square, cell-centred momentum grid ``q_i = -q_max + (i + 1/2) dq``.

    The grid is symmetric (``q[n-1-i] == -q[i]``) and never contains the
    origin, so the azimuth is defined at every sample.
    """

    n: int
    q_max: float

    def __post_init__(self):
        n = int(self.n)
        if n != self.n or n < 32 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 32, got {self.n}")
        if not (np.isfinite(self.q_max) and self.q_max > 0):
            raise ValueError(f"q_max must be positive, got {self.q_max}")

    @classmethod
    def for_waist(cls, w_min: float, n: int = DEFAULT_N, q_max: float | None = None) -> "MomentumGrid":
        """Grid whose window covers a Gaussian of waist ``w_min`` to below 1e-8."""
        if q_max is None:
            q_max = QMAX_FACTOR / w_min
        grid = cls(n, q_max)
        grid.check_waist(w_min)
        return grid

    @property
    def dq(self) -> float:
        return 2.0 * self.q_max / self.n

    @property
    def q(self) -> np.ndarray:
        return -self.q_max + (np.arange(self.n) + 0.5) * self.dq

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        q = self.q
        return np.meshgrid(q, q, indexing="ij")

    def polar(self) -> tuple[np.ndarray, np.ndarray]:
        qx, qy = self.mesh()
        return np.hypot(qx, qy), np.arctan2(qy, qx)

    def check_waist(self, waist: float) -> None:
        edge = math.exp(-(waist * self.q_max) ** 2 / 4.0)
        if edge > EDGE_DECAY:
            raise GridTooCoarseError(
                f"Gaussian of waist {waist:.4g} m is {edge:.2e} of peak at q_max; need <= {EDGE_DECAY:g}"
            )


# ---------------------------------------------------------------------------
# mode descriptions
# ---------------------------------------------------------------------------


def _check_waist(w: float) -> float:
    w = float(w)
    if not (np.isfinite(w) and w > 0):
        raise ValueError(f"waist must be positive, got {w}")
    return w


def _check_index(value, name: str, nonneg: bool = False) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if nonneg and value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


def _gauss(r, waist):
    big_w = 2.0 / waist
    return math.sqrt(2.0 / np.pi) / big_w * np.exp(-(r / big_w) ** 2)


def _extent(waist: float, order: int) -> float:
    """Radius beyond which a Gaussian-envelope mode of given order is negligible."""
    return (2.0 / waist) * (math.sqrt(2 * order + 1) + 5.0)


@dataclass(frozen=True)
class LG:
    """Laguerre-Gauss mode with azimuthal index ``ell`` and radial index ``p``."""

    ell: int
    p: int
    waist: float

    def __post_init__(self):
        object.__setattr__(self, "ell", _check_index(self.ell, "ell"))
        object.__setattr__(self, "p", _check_index(self.p, "p", nonneg=True))
        object.__setattr__(self, "waist", _check_waist(self.waist))

    def __call__(self, r, phi):
        a = abs(self.ell)
        big_w = 2.0 / self.waist
        x = 2.0 * (np.asarray(r) / big_w) ** 2
        log_c = 0.5 * (math.log(2.0 / np.pi) + math.lgamma(self.p + 1) - math.lgamma(self.p + a + 1))
        radial = math.exp(log_c) / big_w * x ** (a / 2.0) * special.eval_genlaguerre(self.p, a, x) * np.exp(-x / 2.0)
        return radial * np.exp(1j * self.ell * np.asarray(phi))

    def order(self) -> int:
        return 2 * self.p + abs(self.ell)

    def waist_min(self) -> float:
        return self.waist

    def extent(self) -> float:
        return _extent(self.waist, self.order())


def _hermite_function(n: int, x, big_w: float):
    log_c = 0.25 * math.log(2.0 / np.pi) - 0.5 * (n * math.log(2.0) + math.lgamma(n + 1) + math.log(big_w))
    return math.exp(log_c) * special.eval_hermite(n, math.sqrt(2.0) * x / big_w) * np.exp(-(x / big_w) ** 2)


@dataclass(frozen=True)
class HG:
    """Hermite-Gauss mode with indices ``n`` (along q_x) and ``m`` (along q_y)."""

    n: int
    m: int
    waist: float

    def __post_init__(self):
        object.__setattr__(self, "n", _check_index(self.n, "n", nonneg=True))
        object.__setattr__(self, "m", _check_index(self.m, "m", nonneg=True))
        object.__setattr__(self, "waist", _check_waist(self.waist))

    def __call__(self, r, phi):
        r = np.asarray(r)
        phi = np.asarray(phi)
        big_w = 2.0 / self.waist
        qx = r * np.cos(phi)
        qy = r * np.sin(phi)
        return (_hermite_function(self.n, qx, big_w) * _hermite_function(self.m, qy, big_w)).astype(complex)

    def order(self) -> int:
        return self.n + self.m

    def waist_min(self) -> float:
        return self.waist

    def extent(self) -> float:
        return _extent(self.waist, self.order())


@dataclass(frozen=True)
class Gauss:
    """Fundamental Gaussian."""

    waist: float

    def __post_init__(self):
        object.__setattr__(self, "waist", _check_waist(self.waist))

    def __call__(self, r, phi):
        return np.broadcast_to(_gauss(np.asarray(r), self.waist), np.broadcast(r, phi).shape).astype(complex)

    def order(self) -> int:
        return 0

    def waist_min(self) -> float:
        return self.waist

    def extent(self) -> float:
        return _extent(self.waist, 0)


@dataclass(frozen=True)
class PhaseVortex:
    """Phase-only vortex encoding: Gaussian envelope times ``exp(i ell phi)``."""

    ell: int
    waist: float

    def __post_init__(self):
        object.__setattr__(self, "ell", _check_index(self.ell, "ell"))
        object.__setattr__(self, "waist", _check_waist(self.waist))

    def __call__(self, r, phi):
        return _gauss(np.asarray(r), self.waist) * np.exp(1j * self.ell * np.asarray(phi))

    def order(self) -> int:
        return 0

    def waist_min(self) -> float:
        return self.waist

    def extent(self) -> float:
        return _extent(self.waist, 0)


def step_phase(phi, M: float, offset: float):
    """Fractional step phase ``M * ((phi - offset) mod 2 pi)``."""
    return M * np.mod(np.asarray(phi) - offset, TWO_PI)


@dataclass(frozen=True)
class FracOAM:
    """Fractional vortex of charge ``M`` whose phase step sits at azimuth ``offset``."""

    M: float
    offset: float
    waist: float

    def __post_init__(self):
        if not np.isfinite(self.M):
            raise ValueError("charge must be finite")
        object.__setattr__(self, "M", float(self.M))
        object.__setattr__(self, "offset", float(np.mod(self.offset, TWO_PI)))
        object.__setattr__(self, "waist", _check_waist(self.waist))

    def __call__(self, r, phi):
        return _gauss(np.asarray(r), self.waist) * np.exp(1j * step_phase(phi, self.M, self.offset))

    def order(self) -> int:
        return 0

    def waist_min(self) -> float:
        return self.waist

    def extent(self) -> float:
        return _extent(self.waist, 0)


@dataclass(frozen=True)
class Superposition:
    """Coherent sum of modes.

    Coefficients are rescaled to unit Euclidean norm.  When the terms are not
    orthonormal the field is additionally divided by its continuous norm so
    ``spec(r, phi)`` is always normalised.
    """

    terms: tuple

    def __post_init__(self):
        terms = tuple((complex(c), s) for c, s in self.terms)
        if not terms:
            raise ValueError("superposition needs at least one term")
        norm = math.sqrt(sum(abs(c) ** 2 for c, _ in terms))
        if norm == 0:
            raise ValueError("superposition coefficients are all zero")
        object.__setattr__(self, "terms", tuple((c / norm, s) for c, s in terms))

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    def raw(self, r, phi):
        out = 0
        for c, s in self.terms:
            out = out + c * s(r, phi)
        return out

    def __call__(self, r, phi):
        return self.raw(r, phi) / _superposition_norm(self)

    def order(self) -> int:
        return max(s.order() for _, s in self.terms)

    def waist_min(self) -> float:
        return min(s.waist_min() for _, s in self.terms)

    def extent(self) -> float:
        return max(s.extent() for _, s in self.terms)


ModeSpec = Union[LG, HG, Gauss, PhaseVortex, FracOAM, Superposition]


@dataclass(frozen=True)
class _Rotated:
    base: object
    angle: float

    def __call__(self, r, phi):
        return self.base(r, np.asarray(phi) + self.angle)

    def order(self) -> int:
        return self.base.order()

    def waist_min(self) -> float:
        return self.base.waist_min()

    def extent(self) -> float:
        return self.base.extent()


# ---------------------------------------------------------------------------
# polar quadrature
# ---------------------------------------------------------------------------


def radial_nodes(r_max: float, n_r: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, r_max]."""
    x, w = _leggauss(int(n_r))
    return (x + 1.0) * (r_max / 2.0), w * (r_max / 2.0)


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def phi_nodes(n_phi: int) -> np.ndarray:
    """Midpoint azimuths ``2 pi (j + 1/2) / n_phi``."""
    return TWO_PI * (np.arange(n_phi) + 0.5) / n_phi


@dataclass(frozen=True, eq=False)
class PolarCoefficients:
    """Azimuthal harmonics ``A[i, k]`` of a field at radial nodes ``r[i]``.

    ``field(r_i, phi) ~ sum_k A[i, k] exp(i m[k] phi)``.
    """

    r: np.ndarray
    weights: np.ndarray
    m: np.ndarray
    A: np.ndarray

    def harmonic_power(self) -> np.ndarray:
        """Power carried by each harmonic, ``2 pi int |A_m(r)|^2 r dr``."""
        return TWO_PI * np.einsum("i,ik->k", self.weights * self.r, np.abs(self.A) ** 2)

    def column(self, ell: int) -> np.ndarray:
        idx = np.nonzero(self.m == ell)[0]
        if idx.size == 0:
            return np.zeros_like(self.r, dtype=complex)
        return self.A[:, idx[0]]


def polar_coefficients(field: Callable, r_max: float, n_r: int, n_phi: int = DEFAULT_NPHI) -> PolarCoefficients:
    r, wr = radial_nodes(r_max, n_r)
    phi = phi_nodes(n_phi)
    values = np.broadcast_to(field(r[:, None], phi[None, :]), (r.size, phi.size))
    m = np.rint(np.fft.fftfreq(n_phi, 1.0 / n_phi)).astype(int)
    A = np.fft.fft(values, axis=1) / n_phi
    A *= np.exp(-1j * np.pi * m / n_phi)[None, :]
    return PolarCoefficients(r, wr, m, A)


def _default_nr(order: int) -> int:
    return int(min(512, max(96, 16 * (order + 2))))


@lru_cache(maxsize=256)
def _superposition_norm(sup: Superposition) -> float:
    r_max = sup.extent()
    pc = polar_coefficients(sup.raw, r_max, _default_nr(sup.order()), n_phi=4096)
    return math.sqrt(pc.harmonic_power().sum())


# ---------------------------------------------------------------------------
# sampled spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AngularSpectrum:
    """A complex field sampled on a :class:`MomentumGrid`.

    ``source`` optionally carries the analytic description the samples were
    drawn from; azimuthal analysis and kernel contraction use it to avoid
    interpolation.
    """

    grid: MomentumGrid
    samples: np.ndarray
    normalized: bool = True
    source: object = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.complex128)
        if samples.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"samples must be {self.grid.n}x{self.grid.n}, got {samples.shape}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.normalized and abs(self.norm2() - 1.0) > 1e-9:
            raise ValueError(f"spectrum flagged normalized but has norm^2 {self.norm2():.12g}")

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.grid.dq**2)

    def normalize(self) -> "AngularSpectrum":
        return AngularSpectrum(self.grid, self.samples / math.sqrt(self.norm2()), True, self.source)

    def evaluator(self) -> tuple[Callable, float, int]:
        """(field, radial extent, order hint) for polar analysis."""
        if self.source is not None:
            scale = math.sqrt(self.norm2()) if not self.normalized else 1.0
            src = self.source
            f = src if scale == 1.0 else (lambda r, phi: scale * src(r, phi))
            return f, min(src.extent(), self.grid.q_max * math.sqrt(2.0)), src.order()
        return _interpolator(self), self.grid.q_max - self.grid.dq / 2.0, self.grid.n // 8


def _interpolator(f: AngularSpectrum) -> Callable:
    g = f.grid
    re = np.ascontiguousarray(f.samples.real)
    im = np.ascontiguousarray(f.samples.imag)

    def field(r, phi):
        r, phi = np.broadcast_arrays(r, phi)
        ix = (r * np.cos(phi) + g.q_max) / g.dq - 0.5
        iy = (r * np.sin(phi) + g.q_max) / g.dq - 0.5
        coords = np.stack([ix.ravel(), iy.ravel()])
        out = map_coordinates(re, coords, order=3, mode="constant") + 1j * map_coordinates(
            im, coords, order=3, mode="constant"
        )
        return out.reshape(r.shape)

    return field


def mode_spectrum(spec: ModeSpec, grid: MomentumGrid) -> AngularSpectrum:
    """Sample ``spec`` on ``grid`` and normalise the samples.

    Raises :class:`GridTooCoarseError` when the window does not cover the
    smallest waist or when the sampled norm misses by 1% or more.
    """
    grid.check_waist(spec.waist_min())
    r, phi = grid.polar()
    values = np.asarray(spec(r, phi), dtype=complex)
    captured = float(np.sum(np.abs(values) ** 2) * grid.dq**2)
    if not abs(captured - 1.0) < CAPTURE_TOL:
        raise GridTooCoarseError(f"sampled norm {captured:.4f} for {spec!r}; enlarge or refine the grid")
    return AngularSpectrum(grid, values / math.sqrt(captured), True, spec)


def inner_product(a: AngularSpectrum, b: AngularSpectrum) -> complex:
    """Discrete L2 inner product ``sum conj(a) b dq^2``."""
    if a.grid != b.grid:
        raise GridMismatchError(f"{a.grid} vs {b.grid}")
    return complex(np.vdot(a.samples, b.samples) * a.grid.dq**2)


def mode_overlap(a, b, n_phi: int = DEFAULT_NPHI) -> complex:
    """``<a|b>`` of two analytic modes by polar quadrature.

    Unlike :func:`inner_product` this is free of the square-grid aliasing
    that couples vortices whose charges differ by a multiple of four.
    """
    r_max = max(a.extent(), b.extent())
    n_r = _default_nr(max(a.order(), b.order()))
    pa = polar_coefficients(a, r_max, n_r, n_phi)
    pb = polar_coefficients(b, r_max, n_r, n_phi)
    return complex(TWO_PI * np.einsum("i,ik,ik->", pa.weights * pa.r, pa.A.conj(), pb.A))


def rotate(f: AngularSpectrum, chi: float) -> AngularSpectrum:
    """Return ``f(r, phi + chi)``; an ``exp(i ell phi)`` component gains ``exp(i ell chi)``."""
    if f.source is not None:
        src = _Rotated(f.source, float(chi))
        r, phi = f.grid.polar()
        values = np.asarray(src(r, phi), dtype=complex)
        if f.normalized:
            values = values / math.sqrt(np.sum(np.abs(values) ** 2) * f.grid.dq**2)
        return AngularSpectrum(f.grid, values, f.normalized, src)
    r, phi = f.grid.polar()
    values = _interpolator(f)(r, phi + chi)
    out = AngularSpectrum(f.grid, values, False)
    return out.normalize() if f.normalized else out


def mode_size_factor(ell: int) -> float:
    """Beam-size growth ``sqrt(|ell| + 1)`` of an OAM mode relative to the fundamental."""
    return math.sqrt(abs(int(ell)) + 1.0)


def fractional_probe_spec(n_index: int, theta: float, waist: float) -> Superposition:
    if isinstance(n_index, bool) or int(n_index) != n_index or n_index < 1 or n_index % 2 == 0:
        raise ValueError(f"probe index must be a positive odd integer, got {n_index!r}")
    n_index = int(n_index)
    M = n_index / 2.0
    terms = tuple((1.0, FracOAM(M, (TWO_PI * k / n_index + theta) % TWO_PI, waist)) for k in range(n_index))
    return Superposition(terms)


def fractional_probe(n_index: int, theta: float, grid: MomentumGrid, waist: float) -> AngularSpectrum:
    """Normalised superposition of ``n_index`` rotated fractional vortices of charge ``n_index / 2``."""
    if not (0.0 <= theta < TWO_PI):
        raise ValueError(f"theta must lie in [0, 2 pi), got {theta}")
    spec = fractional_probe_spec(n_index, theta, waist)
    if n_index == 1:
        spec = spec.terms[0][1]
    return mode_spectrum(spec, grid)


def _polar_of(f: AngularSpectrum, n_phi: int, n_r: int | None = None) -> PolarCoefficients:
    field, r_max, order = f.evaluator()
    return polar_coefficients(field, r_max, n_r or _default_nr(order), n_phi)


def oam_decompose(f: AngularSpectrum, ell_range: Iterable[int], n_phi: int = DEFAULT_NPHI) -> dict[int, float]:
    """Power per OAM index, from azimuthal FFTs on a polar quadrature grid.

    Powers are fractions of the spectrum's total norm, so they sum to at most
    ``||f||^2``.
    """
    pc = _polar_of(f, n_phi)
    power = pc.harmonic_power()
    scale = f.norm2() / power.sum()
    out = {}
    for ell in ell_range:
        ell = int(ell)
        out[ell] = float(power[pc.m == ell].sum() * scale)
    return out


def oam_cross(f: AngularSpectrum, g: AngularSpectrum, ell_range: Iterable[int], n_phi: int = DEFAULT_NPHI) -> dict[int, complex]:
    """Per-ell inner products ``<f_ell | g_ell>`` of the azimuthal components."""
    ff, rf, of = f.evaluator()
    gf, rg, og = g.evaluator()
    r_max = max(rf, rg)
    n_r = _default_nr(max(of, og))
    pf = polar_coefficients(ff, r_max, n_r, n_phi)
    pg = polar_coefficients(gf, r_max, n_r, n_phi)
    sf = math.sqrt(f.norm2() / pf.harmonic_power().sum())
    sg = math.sqrt(g.norm2() / pg.harmonic_power().sum())
    wr = TWO_PI * pf.weights * pf.r
    out = {}
    for ell in ell_range:
        ell = int(ell)
        out[ell] = complex(np.sum(wr * np.conj(pf.column(ell)) * pg.column(ell)) * sf * sg)
    return out


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

_FAMILIES = ("lg", "hg", "gauss", "vortex", "frac", "sup")


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _fmt_complex(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return _fmt(c.real)
    if c.real == 0:
        return _fmt(c.imag) + "i"
    return _fmt(c.real) + ("+" if c.imag >= 0 else "-") + _fmt(abs(c.imag)) + "i"


def _parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "")
    if not t:
        raise ModeSpecSyntaxError("empty coefficient")
    if t.endswith("i"):
        t = t[:-1] + "j"
        if t in ("j", "+j", "-j"):
            t = t.replace("j", "1j")
        elif t[-2] in "+-":
            t = t[:-1] + "1j"
    try:
        return complex(t)
    except ValueError as exc:
        raise ModeSpecSyntaxError(f"bad coefficient {text!r}") from exc


def _split_top(text: str, sep: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ModeSpecSyntaxError(f"unbalanced parentheses in {text!r}")
        elif ch == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    if depth != 0:
        raise ModeSpecSyntaxError(f"unbalanced parentheses in {text!r}")
    parts.append(text[start:])
    return parts


def parse_mode(text: str, waist: float | None = None) -> ModeSpec:
    """Parse the mode text form (grammar in :mod:`nlteleport.cli`).

    ``waist`` supplies the default waist in metres; ``w0_um=`` overrides it.
    """
    text = text.strip()
    family, _, rest = text.partition(":")
    family = family.strip().lower()
    if family not in _FAMILIES:
        raise ModeSpecSyntaxError(f"unknown mode family {family!r}")
    if family == "sup":
        terms = []
        for chunk in _split_top(rest.strip(), "+"):
            chunk = chunk.strip()
            if not (chunk.startswith("(") and chunk.endswith(")")):
                raise ModeSpecSyntaxError(f"superposition term must be '(coef,mode)': {chunk!r}")
            coef, sep, inner = chunk[1:-1].partition(",")
            if not sep:
                raise ModeSpecSyntaxError(f"superposition term missing mode: {chunk!r}")
            terms.append((_parse_complex(coef), parse_mode(inner, waist)))
        return Superposition(tuple(terms))

    params: dict[str, str] = {}
    if rest.strip():
        for item in rest.split(","):
            key, sep, val = item.partition("=")
            if not sep:
                raise ModeSpecSyntaxError(f"expected key=value, got {item!r}")
            params[key.strip()] = val.strip()
    if "w0_um" in params:
        w = float(params.pop("w0_um")) * 1e-6
    elif waist is not None:
        w = waist
    else:
        raise ModeSpecSyntaxError(f"no waist for {text!r}; pass w0_um=")

    def take(key, conv, default=None):
        if key in params:
            try:
                return conv(params.pop(key))
            except ValueError as exc:
                raise ModeSpecSyntaxError(f"bad value for {key}: {exc}") from exc
        if default is None:
            raise ModeSpecSyntaxError(f"{family} needs {key}=")
        return default

    try:
        if family == "lg":
            spec = LG(take("ell", int), take("p", int, 0), w)
        elif family == "hg":
            spec = HG(take("n", int), take("m", int), w)
        elif family == "gauss":
            spec = Gauss(w)
        elif family == "vortex":
            spec = PhaseVortex(take("ell", int), w)
        else:
            spec = FracOAM(take("M", float), take("offset", float, 0.0), w)
    except ModeSpecSyntaxError:
        raise
    except ValueError as exc:
        raise ModeSpecSyntaxError(str(exc)) from exc
    if params:
        raise ModeSpecSyntaxError(f"unexpected keys {sorted(params)} for {family}")
    return spec


def format_mode(spec: ModeSpec, waist: float | None = None) -> str:
    """Canonical text form; the waist is written only when it differs from ``waist``."""

    def w(s):
        return "" if waist is not None and s.waist == waist else f",w0_um={_fmt(s.waist * 1e6)}"

    if isinstance(spec, LG):
        return f"lg:ell={spec.ell},p={spec.p}{w(spec)}"
    if isinstance(spec, HG):
        return f"hg:n={spec.n},m={spec.m}{w(spec)}"
    if isinstance(spec, Gauss):
        tail = w(spec)
        return "gauss" + (":" + tail[1:] if tail else "")
    if isinstance(spec, PhaseVortex):
        return f"vortex:ell={spec.ell}{w(spec)}"
    if isinstance(spec, FracOAM):
        return f"frac:M={_fmt(spec.M)},offset={_fmt(spec.offset)}{w(spec)}"
    if isinstance(spec, Superposition):
        return "sup:" + "+".join(f"({_fmt_complex(c)},{format_mode(s, waist)})" for c, s in spec.terms)
    raise TypeError(f"not a mode: {spec!r}")
