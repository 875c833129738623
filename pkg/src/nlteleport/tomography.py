"""Projector sets, simulated projection counts and density-matrix reconstruction."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import ConvergenceError

ML_TOL = 1e-10
ML_MAX_ITER = 10_000
#: Weight of the maximally mixed state in the max-likelihood starting point.
ML_START_MIX = 1e-8


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite d x d matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-12:
            raise ValueError(f"trace {np.trace(m).real!r} != 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def isotropic(cls, psi, p: float) -> "DensityMatrix":
        """``p |psi><psi| + (1 - p) I / d``."""
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        d = psi.size
        return cls(p * np.outer(psi, psi.conj()) + (1 - p) * np.eye(d) / d)

    def to_csv(self) -> str:
        """Real part rows, a blank line, then imaginary part rows."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.matrix.real:
            w.writerow([repr(float(x)) for x in row])
        buf.write("\n")
        for row in self.matrix.imag:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def trace_distance(a, b) -> float:
    a = np.asarray(getattr(a, "matrix", a))
    b = np.asarray(getattr(b, "matrix", b))
    return float(0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum())


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------

#: Inter-modal phases (theta_1, theta_2, theta_3) of the four-dimensional basis
#: (1, e^{i theta_1}, e^{i theta_2}, e^{i theta_3}) / 2 used for OAM ell = -3, -1, 1, 3.
OAM4_PHASES = (
    (-np.pi / 2, -np.pi, -np.pi / 2),
    (-np.pi / 2, 0.0, np.pi / 2),
    (np.pi / 2, np.pi, np.pi / 2),
    (np.pi / 2, 0.0, -np.pi / 2),
)


def _phase_basis(phases) -> list[np.ndarray]:
    return [np.concatenate([[1.0], np.exp(1j * np.asarray(t))]) / 2.0 for t in phases]


def mub_bases(d: int) -> list[list[np.ndarray]]:
    """Complete set of d + 1 mutually unbiased bases for d in {2, 3, 4}."""
    eye = [np.eye(d, dtype=complex)[k] for k in range(d)]
    if d == 2:
        s = 1 / np.sqrt(2)
        return [
            eye,
            [np.array([s, s]), np.array([s, -s])],
            [np.array([s, 1j * s]), np.array([s, -1j * s])],
        ]
    if d == 3:
        w = np.exp(2j * np.pi / 3)
        bases = [eye]
        for t in range(3):
            # Fourier basis dressed with the quadratic phase w^(t j^2)
            basis = []
            for k in range(3):
                v = np.array([w ** (t * j * j + k * j) for j in range(3)]) / np.sqrt(3)
                basis.append(v)
            bases.append(basis)
        return bases
    if d == 4:
        rows = [
            [(1, 1, 1, 1), (1, -1, 1, -1), (1, -1, -1, 1), (1, 1, -1, -1)],
            [(1, -1, -1j, -1j), (1, 1, -1j, 1j), (1, 1, 1j, -1j), (1, -1, 1j, 1j)],
            [(1, -1j, -1j, -1), (1, 1j, 1j, -1), (1, -1j, 1j, 1), (1, 1j, -1j, 1)],
        ]
        bases = [eye] + [[np.array(v, dtype=complex) / 2 for v in b] for b in rows]
        bases.append(_phase_basis(OAM4_PHASES))
        return bases
    raise ValueError(f"complete MUB sets are provided for d in (2, 3, 4), got {d}")


def projector_set(d: int, scheme: Literal["mub-complete", "pairwise-overcomplete"] = "mub-complete") -> list[np.ndarray]:
    """Informationally complete list of pure projector states."""
    if scheme == "mub-complete":
        return [v for basis in mub_bases(d) for v in basis]
    if scheme == "pairwise-overcomplete":
        if d < 2:
            raise ValueError("d must be >= 2")
        out = [np.eye(d, dtype=complex)[k] for k in range(d)]
        s = 1 / np.sqrt(2)
        for j in range(d):
            for k in range(j + 1, d):
                for phase in (1, -1, 1j, -1j):
                    v = np.zeros(d, dtype=complex)
                    v[j], v[k] = s, s * phase
                    out.append(v)
        return out
    raise ValueError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# counts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionRecord:
    projector: tuple  # amplitudes of the projector state
    counts: float
    duration: float = 1.0

    def __post_init__(self):
        if self.counts < 0:
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "projector", tuple(complex(c) for c in self.projector))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.projector, dtype=complex)


def simulate_counts(
    rho,
    projectors: Sequence[np.ndarray],
    total_counts: float,
    accidental_rate: float = 0.0,
    seed: int | None = None,
    poisson: bool = False,
    duration: float = 1.0,
) -> list[ProjectionRecord]:
    """Expected counts ``total_counts <m|rho|m> + accidental_rate * duration`` per projector.

    With ``poisson=True`` counts are drawn from a Poisson distribution seeded by ``seed``.
    """
    if total_counts <= 0:
        raise ValueError("total_counts must be positive")
    r = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    rng = np.random.default_rng(seed) if poisson else None
    out = []
    for m in projectors:
        m = np.asarray(m, dtype=complex)
        mean = total_counts * max(float(np.real(np.vdot(m, r @ m))), 0.0) + accidental_rate * duration
        counts = float(rng.poisson(mean)) if rng is not None else mean
        out.append(ProjectionRecord(tuple(m), counts, duration))
    return out


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------


def _hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal basis of d x d Hermitian matrices, shape (d^2, d, d)."""
    out = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1
        out.append(e)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = 1 / np.sqrt(2)
            out.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[j, k], e[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            out.append(e)
    return np.array(out)


def _project_psd(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValueError("reconstruction has no positive part")
    w = w / w.sum()
    out = (v * w) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def _normalized(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.conj().T)
    return m / np.trace(m).real


def _linear(vectors: np.ndarray, counts: np.ndarray, d: int) -> np.ndarray:
    basis = _hermitian_basis(d)
    # <m| B_k |m> is real for Hermitian B_k
    A = np.real(np.einsum("pi,kij,pj->pk", vectors.conj(), basis, vectors))
    if np.linalg.matrix_rank(A) < d * d:
        raise ValueError("projector set is not informationally complete")
    coef, *_ = np.linalg.lstsq(A, counts, rcond=None)
    return _project_psd(np.einsum("k,kij->ij", coef, basis))


def _max_likelihood(
    vectors: np.ndarray, counts: np.ndarray, d: int, tol: float, max_iter: int, start: np.ndarray | None = None
) -> tuple[np.ndarray, int, float]:
    """R rho R iteration.

    Eigenvalues heading to zero shrink only sublinearly, while small ones
    that should grow do so geometrically, so a start close to the answer
    with a tiny full-rank admixture converges fastest.
    """
    proj = np.einsum("pi,pj->pij", vectors, vectors.conj())
    freqs = counts / counts.sum()
    eye = np.eye(d, dtype=complex) / d
    rho = eye if start is None else (1 - ML_START_MIX) * start + ML_START_MIX * eye
    residual = np.inf
    for it in range(1, max_iter + 1):
        probs = np.real(np.einsum("pi,ij,pj->p", vectors.conj(), rho, vectors))
        probs = probs / probs.sum()
        ratio = np.where(probs > 1e-300, freqs / np.where(probs > 1e-300, probs, 1.0), 0.0)
        R = np.einsum("p,pij->ij", ratio, proj)
        new = _normalized(R @ rho @ R)
        residual = float(np.max(np.abs(new - rho)))
        rho = new
        if residual < tol:
            return rho, it, residual
    raise ConvergenceError(
        f"max-likelihood did not converge in {max_iter} iterations (residual {residual:.3g})", max_iter, residual
    )


def reconstruct(
    records: Sequence[ProjectionRecord],
    d: int,
    method: Literal["linear-inversion", "max-likelihood"] = "max-likelihood",
    tol: float = ML_TOL,
    max_iter: int = ML_MAX_ITER,
) -> DensityMatrix:
    """Density matrix from projection counts (rates are counts / duration)."""
    if not records:
        raise ValueError("no records")
    vectors = np.array([r.vector for r in records])
    if vectors.shape[1] != d:
        raise ValueError(f"projector dimension {vectors.shape[1]} != {d}")
    counts = np.array([r.counts / r.duration for r in records])
    if counts.sum() <= 0:
        raise ValueError("all counts are zero")
    if method == "linear-inversion":
        rho = _linear(vectors, counts, d)
    elif method == "max-likelihood":
        start = _linear(vectors, counts, d)
        rho, _, _ = _max_likelihood(vectors, counts, d, tol, max_iter, start)
        rho = _project_psd(rho)
    else:
        raise ValueError(f"unknown method {method!r}")
    return DensityMatrix(rho)

