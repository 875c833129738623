"""Fidelity, classical bound, Haar Monte Carlo, similarity and visibility."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

NORM_TOL = 1e-12
#: Haar samples per independently seeded chunk.
MC_CHUNK = 10_000


def state_vector(amplitudes, normalize: bool = False) -> np.ndarray:
    """Validate (or normalise) a pure state of dimension >= 2."""
    v = np.asarray(amplitudes, dtype=complex).ravel()
    if v.size < 2:
        raise ValueError("state dimension must be at least 2")
    n = np.linalg.norm(v)
    if normalize:
        if n == 0:
            raise ValueError("zero vector")
        return v / n
    if abs(n - 1.0) > NORM_TOL:
        raise ValueError(f"state not normalised (norm {n!r})")
    return v


def fidelity_pure(a, b) -> float:
    """``|<a|b>|^2``."""
    a = state_vector(a)
    b = state_vector(b)
    if a.size != b.size:
        raise ValueError(f"dimension mismatch {a.size} vs {b.size}")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def fidelity_mixed(rho, target) -> float:
    """``<psi| rho |psi>`` for a density matrix (array or :class:`DensityMatrix`)."""
    r = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    psi = state_vector(target)
    if r.shape != (psi.size, psi.size):
        raise ValueError(f"dimension mismatch {r.shape} vs {psi.size}")
    if np.max(np.abs(r - r.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(r) - 1.0) > 1e-9:
        raise ValueError("density matrix trace is not 1")
    f = float(np.real(np.vdot(psi, r @ psi)))
    return min(1.0, max(0.0, f))


def classical_bound(d: int) -> float:
    """Best average fidelity of measure-and-prepare transfer of a d-level state."""
    if int(d) != d or d < 2:
        raise ValueError("d must be an integer >= 2")
    return 2.0 / (d + 1.0)


@dataclass(frozen=True)
class MCResult:
    mean: float
    stderr: float
    samples: int


def haar_states(rng: np.random.Generator, d: int, size: int) -> np.ndarray:
    """``size`` Haar-random pure states as rows (normalised complex Gaussians)."""
    z = rng.standard_normal((size, d)) + 1j * rng.standard_normal((size, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _mc_chunk(seed: np.random.SeedSequence, d: int, size: int, strategy: str) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    psi = haar_states(rng, d, size)
    probs = np.abs(psi) ** 2
    if strategy == "optimal-projective":
        # measure in the computational basis and re-prepare the observed basis state
        u = rng.random(size)
        outcome = (np.cumsum(probs, axis=1) < u[:, None]).sum(axis=1)
        outcome = np.minimum(outcome, d - 1)
        fid = probs[np.arange(size), outcome]
    else:
        fid = probs[:, 0]
    return float(fid.sum()), float((fid * fid).sum())


def haar_mc_classical_fidelity(
    d: int,
    strategy: Literal["optimal-projective", "fixed-guess"] = "optimal-projective",
    samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> MCResult:
    """Average fidelity of a classical strategy over Haar-random inputs.

    Samples are drawn in fixed-size chunks whose seeds are spawned from
    ``seed`` by chunk index, so the result does not depend on ``workers``.
    """
    if strategy not in ("optimal-projective", "fixed-guess"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if samples < 10_000:
        raise ValueError("use at least 1e4 samples")
    if d < 2:
        raise ValueError("d must be >= 2")
    n_chunks = -(-samples // MC_CHUNK)
    sizes = [MC_CHUNK] * (n_chunks - 1) + [samples - MC_CHUNK * (n_chunks - 1)]
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)
    jobs = list(zip(seeds, sizes))

    def run(job):
        return _mc_chunk(job[0], d, job[1], strategy)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0) * samples / (samples - 1)
    return MCResult(mean, math.sqrt(var / samples), samples)


def similarity(c_exp: Sequence[float], c_th: Sequence[float]) -> float:
    """``1 - sum|c_exp - c_th| / (sum c_exp + sum c_th)``."""
    a = np.asarray(c_exp, dtype=float)
    b = np.asarray(c_th, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch {a.shape} vs {b.shape}")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("coefficients must be non-negative")
    total = a.sum() + b.sum()
    if total == 0:
        raise ValueError("both coefficient vectors are zero")
    return float(1.0 - np.abs(a - b).sum() / total)


def visibility(p_max: float, p_min: float) -> float:
    """Fringe visibility ``|p_max - p_min| / (p_max + p_min)``."""
    if p_max < 0 or p_min < 0:
        raise ValueError("probabilities must be non-negative")
    if p_max + p_min == 0:
        raise ValueError("visibility undefined when both probabilities are zero")
    return float(abs(p_max - p_min) / (p_max + p_min))
