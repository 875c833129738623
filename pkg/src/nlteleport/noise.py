"""Accidental-coincidence backgrounds, Procrustean flattening and conversion efficiency."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import constants


@dataclass(frozen=True)
class CoincidenceRecord:
    """Counts in the coincidence window and in an equally wide offset window."""

    signal_counts: float
    background_counts: float
    window_ns: float = 0.5
    label: str = ""
    offset_ns: float | None = None

    def __post_init__(self):
        if self.signal_counts < 0 or self.background_counts < 0:
            raise ValueError("counts must be non-negative")
        if not self.window_ns > 0:
            raise ValueError("window width must be positive")


@dataclass(frozen=True)
class Subtracted:
    counts: float
    clamped: bool


def background_subtract(rec: CoincidenceRecord) -> Subtracted:
    """``max(signal - background, 0)``; ``clamped`` reports whether the floor was hit."""
    diff = rec.signal_counts - rec.background_counts
    return Subtracted(max(diff, 0.0), diff < 0)


def records_to_csv(records: Sequence[CoincidenceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["projector_label", "signal", "background", "window_ns"])
    for r in records:
        w.writerow([r.label, repr(float(r.signal_counts)), repr(float(r.background_counts)), repr(float(r.window_ns))])
    return buf.getvalue()


def records_from_csv(text: str) -> list[CoincidenceRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        extra = row.get("offset_ns")
        out.append(
            CoincidenceRecord(
                float(row["signal"]),
                float(row["background"]),
                float(row["window_ns"]),
                row["projector_label"],
                float(extra) if extra not in (None, "") else None,
            )
        )
    return out


@dataclass(frozen=True)
class ProcrusteanWeights:
    weights: np.ndarray
    throughput: float


def procrustean_weights(diag: Sequence[float]) -> ProcrusteanWeights:
    """Intensity attenuations ``t_j = min(diag) / diag_j`` that flatten ``diag``."""
    d = np.asarray(diag, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("diagonal must be a non-empty 1D sequence")
    if np.any(~np.isfinite(d)) or np.any(d <= 0):
        raise ValueError("all diagonal entries must be positive to flatten")
    t = d.min() / d
    return ProcrusteanWeights(t, float(np.sum(t * d) / np.sum(d)))


def apply_weights(diag: Sequence[float], w: ProcrusteanWeights) -> np.ndarray:
    """Filtered spectrum ``t_j * diag_j``."""
    return np.asarray(diag, dtype=float) * w.weights


@dataclass(frozen=True)
class EfficiencyParams:
    chi2: float  # m / V
    flux_per_area: float  # photons / s / m^2
    omegas: tuple  # (omega_p, omega_B, omega_C) in rad / s
    indices: tuple  # (n_p, n_B, n_C)

    def __post_init__(self):
        vals = [self.chi2, self.flux_per_area, *self.omegas, *self.indices]
        if len(self.omegas) != 3 or len(self.indices) != 3:
            raise ValueError("need three frequencies and three indices")
        if any(not (np.isfinite(v) and v > 0) for v in vals):
            raise ValueError("efficiency parameters must be positive")

    @classmethod
    def from_beam(cls, chi2: float, power_w: float, waist_m: float, wavelengths_m: Sequence[float], indices: Sequence[float]):
        """Photon flux density of a CW Gaussian pump of given power and waist."""
        lp = wavelengths_m[0]
        photon_rate = power_w * lp / (constants.h * constants.c)
        area = math.pi * waist_m**2
        omegas = tuple(2 * math.pi * constants.c / lam for lam in wavelengths_m)
        return cls(chi2, photon_rate / area, omegas, tuple(indices))


def conversion_sigma(p: EfficiencyParams, length: float | None = None) -> float:
    """``chi2 sqrt(hbar w_p w_B w_C F0 / (8 eps0 c^3 n_p n_B n_C A_p))``, with F0/A_p the flux density.

    The expression carries units of inverse metres (a gain per unit crystal
    length).  Passing the crystal ``length`` returns the dimensionless
    single-pass amplitude.
    """
    wp, wb, wc = p.omegas
    npump, nb, nc = p.indices
    inner = constants.hbar * wp * wb * wc * p.flux_per_area / (8 * constants.epsilon_0 * constants.c**3 * npump * nb * nc)
    sigma = p.chi2 * math.sqrt(inner)
    if length is not None:
        if not length > 0:
            raise ValueError("crystal length must be positive")
        sigma *= length
    return float(sigma)
