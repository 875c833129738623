"""End-to-end teleportation runs and per-figure tables."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence, Union

import numpy as np

from . import capacity as cap
from .channel import ChannelKernel, OpticalConfig, channel_matrix, crosstalk_matrix, default_grid, kernel_thin
from .metrics import similarity, visibility
from .modes import HG, PhaseVortex, Superposition, mode_overlap
from .noise import CoincidenceRecord, background_subtract, procrustean_weights
from .probe import DEFAULT_N_LIST, DiagonalChannel, fit_purity_dimension, probe_visibilities
from .tables import Table
from .tomography import OAM4_PHASES

# ---------------------------------------------------------------------------
# named states
# ---------------------------------------------------------------------------

#: Gram-matrix tolerance for the basis check
ORTHO_TOL = 1e-6

#: Teleported test states as (coefficient, label) lists; labels are ("oam", ell) or ("hg", n, m).
NAMED_STATES: dict[str, list] = {
    "phi1": [(1, ("oam", 0)), (1, ("oam", -1))],
    "phi2": [(1, ("oam", -1)), (1, ("oam", 1))],
    "phi3": [(1, ("oam", 0)), (-1, ("oam", 1))],
    "phi4": [(1, ("oam", -2)), (1, ("oam", 0)), (1, ("oam", 2))],
    "phi5": [(1, ("oam", -3)), (-1j, ("oam", -1)), (1, ("oam", 1)), (1j, ("oam", 3))],
    "gamma1": [(1, ("hg", 1, 0)), (1, ("hg", 1, 1)), (1, ("hg", 0, 1))],
    "gamma2": [(1, ("hg", 0, 0)), (1, ("hg", 1, 0)), (1, ("hg", 1, 1)), (1, ("hg", 0, 1))],
    "gamma3": [(1, ("hg", n, m)) for n, m in ((0, 0), (2, 0), (0, 2), (2, 2), (4, 0), (0, 4), (4, 2), (2, 4), (4, 4))],
}


def label_mode(label: tuple, waist: float):
    if label[0] == "oam":
        return PhaseVortex(label[1], waist)
    if label[0] == "hg":
        return HG(label[1], label[2], waist)
    raise ValueError(f"unknown label {label!r}")


def named_state(name: str, waist: float) -> tuple[Superposition, list, np.ndarray]:
    """(input mode, basis modes, prepared amplitude vector) for a named state."""
    terms = NAMED_STATES[name]
    basis = [label_mode(lab, waist) for _, lab in terms]
    coef = np.array([complex(c) for c, _ in terms])
    coef = coef / np.linalg.norm(coef)
    return Superposition(tuple(zip(coef, basis))), basis, coef


# ---------------------------------------------------------------------------
# teleportation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TeleportResult:
    prepared: np.ndarray  # |<b_j|in>|^2
    detected: np.ndarray  # normalised detected intensities (with floor)
    similarity: float
    fidelity: float  # coherent output vs input, noiseless
    fidelity_noisy: float  # including the accidental floor as white noise
    throughput: float  # Procrustean filter throughput (1 when not filtering)


def teleport_state(
    cfg: OpticalConfig,
    input_mode,
    basis: Sequence,
    noise: float = 0.0,
    flatten: bool = True,
    kernel: ChannelKernel | None = None,
) -> TeleportResult:
    """Send ``input_mode`` through the channel and read it out in ``basis``.

    ``noise`` is a uniform accidental floor per basis projection, as a
    fraction of the mean detected intensity.  With ``flatten`` the detection
    side applies Procrustean weights computed from the basis diagonal.
    """
    basis = list(basis)
    if kernel is None:
        kernel = kernel_thin(cfg)
    grid = kernel.grid if hasattr(kernel, "grid") else default_grid([*basis, input_mode])
    gram = np.array([[mode_overlap(a, b) for b in basis] for a in basis])
    if np.max(np.abs(gram - np.eye(len(basis)))) > ORTHO_TOL:
        raise ValueError("basis modes are not orthonormal on the grid")
    c_in = np.array([mode_overlap(b, input_mode) for b in basis])
    prepared = np.abs(c_in) ** 2
    prepared = prepared / prepared.sum()

    amps = channel_matrix(kernel, basis, [*basis, input_mode], grid=grid)
    diag = np.abs(np.diag(amps[:, : len(basis)])) ** 2
    out = amps[:, -1]
    throughput = 1.0
    if flatten:
        w = procrustean_weights(diag)
        out = out * np.sqrt(w.weights)
        throughput = w.throughput
    intens = np.abs(out) ** 2
    floor = noise * intens.sum() / len(basis)
    detected = (intens + floor) / (intens + floor).sum()

    psi_out = out / np.linalg.norm(out)
    psi_in = c_in / np.linalg.norm(c_in)
    fid = float(abs(np.vdot(psi_in, psi_out)) ** 2)
    eps = len(basis) * floor / (intens.sum() + len(basis) * floor)
    fid_noisy = (1 - eps) * fid + eps / len(basis)
    return TeleportResult(prepared, detected, similarity(detected, prepared), fid, fid_noisy, throughput)


# ---------------------------------------------------------------------------
# fringes
# ---------------------------------------------------------------------------


def channel_lambdas(cfg: OpticalConfig, ells: Iterable[int] = cap.DEFAULT_ELLS) -> DiagonalChannel:
    """Diagonal channel whose intensities are the vortex crosstalk diagonal."""
    ells = tuple(ells)
    diag = cap.modal_spectrum(cfg, "vortex", ells)
    return DiagonalChannel.from_intensities(dict(zip(ells, diag)))


def visibility_curve(
    channel: Union[OpticalConfig, DiagonalChannel],
    ell: int,
    thetas: Sequence[float],
    convention: Literal["rotation", "phase"] = "rotation",
    floor: float = 0.0,
) -> list[tuple[float, float]]:
    """Detection probability of ``|ell> + |-ell>`` against an analyser ``|ell> + e^{i theta}|-ell>``.

    In the ``rotation`` convention the abscissa is the analyser rotation
    angle chi and the inter-modal phase is ``2 ell chi``; in the ``phase``
    convention it is the phase itself.  ``floor`` adds a uniform accidental
    probability.
    """
    if ell == 0:
        raise ValueError("ell must be non-zero")
    if convention not in ("rotation", "phase"):
        raise ValueError(f"unknown convention {convention!r}")
    if isinstance(channel, OpticalConfig):
        channel = channel_lambdas(channel, range(-abs(ell), abs(ell) + 1))
    lam_p = channel.lambdas.get(ell, 0.0)
    lam_m = channel.lambdas.get(-ell, 0.0)
    out = []
    for t in thetas:
        phase = 2 * ell * t if convention == "rotation" else t
        amp = (lam_p + np.exp(-1j * phase) * lam_m) / 2.0
        out.append((float(t), float(abs(amp) ** 2 + floor)))
    return out


def floor_for_visibility(curve: Sequence[tuple[float, float]], target: float) -> float:
    """Uniform accidental floor that lowers the curve's visibility to ``target``."""
    probs = [p for _, p in curve]
    pmax, pmin = max(probs), min(probs)
    if not 0 < target <= visibility(pmax, pmin):
        raise ValueError("target visibility must lie in (0, current visibility]")
    return ((pmax - pmin) / target - (pmax + pmin)) / 2.0


def curve_visibility(curve: Sequence[tuple[float, float]]) -> float:
    probs = [p for _, p in curve]
    return visibility(max(probs), min(probs))


# ---------------------------------------------------------------------------
# figure tables
# ---------------------------------------------------------------------------

#: (beta, alpha) settings of the three measured spiral bandwidths.
SPIRAL_SETTINGS = ((4.1, 2.7), (1.1, 2.7), (1.1, 4.1))


def fig1b(cfg: OpticalConfig, alphas=None, betas=None) -> Table:
    alphas = alphas if alphas is not None else [float(a) for a in range(1, 13)]
    betas = betas if betas is not None else [0.5, 1.0, 1.5, 2.0, 3.0, 4.1]
    scan = cap.capacity_scan(cfg, alphas, betas)
    t = Table(["alpha", "beta", "K", "alpha_0", "alpha_5"])
    for i, b in enumerate(scan.betas):
        for j, a in enumerate(scan.alphas):
            t.add(a, b, scan.K[i, j], cap.alpha_threshold(b, 0), cap.alpha_threshold(b, 5))
    return t


def fig1cde(cfg: OpticalConfig) -> Table:
    t = Table(["panel", "beta", "alpha", "ell", "P", "K"])
    for panel, (b, a) in zip("cde", SPIRAL_SETTINGS):
        diag = cap.modal_spectrum(cfg.with_ratios(a, b))
        p = diag / diag.sum()
        K = cap.schmidt_from_spectrum(p)
        for ell, v in zip(cap.DEFAULT_ELLS, p):
            t.add(panel, b, a, ell, v, K)
    return t


def fig2(cfg: OpticalConfig, n_list=DEFAULT_N_LIST, purity: float = 1.0) -> Table:
    chan = channel_lambdas(cfg)
    d = len(chan.support)
    v = probe_visibilities(chan, n_list, purity, d)
    fit = fit_purity_dimension(list(zip(n_list, v)))
    t = Table(["n", "V_n", "p_fit", "K_fit", "residual"])
    for row in fit.rows():
        t.add(*row)
    return t


def fig3a(cfg: OpticalConfig, ells=(1, 2, 3), n_points: int = 73, raw_visibility: float = 0.85) -> Table:
    """Model fringe plus a raw fringe whose uniform floor gives ``raw_visibility``.

    The subtracted column removes the floor as estimated from an offset
    window, so it reproduces the model fringe.
    """
    t = Table(["ell", "chi", "P", "P_raw", "P_subtracted"])
    chan = channel_lambdas(cfg, range(-max(ells), max(ells) + 1))
    for ell in ells:
        chis = np.linspace(0.0, np.pi / ell, n_points)
        clean = visibility_curve(chan, ell, chis)
        floor = floor_for_visibility(clean, raw_visibility)
        for chi, p in clean:
            sub = background_subtract(CoincidenceRecord(p + floor, floor)).counts
            t.add(ell, chi, p, p + floor, sub)
    return t


def fig3c(cfg: OpticalConfig) -> Table:
    """Detection probabilities of the four-dimensional OAM basis through the flattened channel."""
    w0 = cfg.w_0
    ells = (-3, -1, 1, 3)
    basis = [PhaseVortex(l, w0) for l in ells]
    states = []
    for phases in OAM4_PHASES:
        coef = np.concatenate([[1.0], np.exp(1j * np.asarray(phases))]) / 2.0
        states.append(Superposition(tuple(zip(coef, basis))))
    kernel = kernel_thin(cfg)
    diag = crosstalk_matrix(kernel, basis, basis).diagonal()
    weights = procrustean_weights(diag).weights
    # flatten on the basis amplitudes: attenuate each OAM component before detection
    amps = channel_matrix(kernel, basis, basis)
    filt = np.diag(np.sqrt(weights)) @ amps
    vecs = [np.concatenate([[1.0], np.exp(1j * np.asarray(ph))]) / 2.0 for ph in OAM4_PHASES]
    t = Table(["prepared", "detected", "P"])
    for j, vj in enumerate(vecs):
        out = filt @ vj
        probs = np.array([abs(np.vdot(vi, out)) ** 2 for vi in vecs])
        probs = probs / probs.sum()
        for i in range(4):
            t.add(j, i, probs[i])
    return t


def _teleport_rows(cfg: OpticalConfig, names: Sequence[str], t: Table) -> None:
    for name in names:
        mode, basis, coef = named_state(name, cfg.w_0)
        res = teleport_state(cfg, mode, basis)
        for lab, pre, det in zip(NAMED_STATES[name], res.prepared, res.detected):
            t.add(name, ":".join(str(x) for x in lab[1]), pre, det)


def fig4(cfg: OpticalConfig) -> Table:
    t = Table(["state", "mode", "prepared", "teleported"])
    _teleport_rows(cfg, ["gamma1", "gamma3"], t)
    return t


def fig5(cfg: OpticalConfig) -> Table:
    t = Table(["state", "dimension", "similarity", "fidelity"])
    for name in NAMED_STATES:
        mode, basis, _ = named_state(name, cfg.w_0)
        res = teleport_state(cfg, mode, basis)
        t.add(name, len(basis), res.similarity, res.fidelity)
    return t


FIGURES = {
    "fig1b": fig1b,
    "fig1cde": fig1cde,
    "fig2": fig2,
    "fig3a": fig3a,
    "fig3c": fig3c,
    "fig4": fig4,
    "fig5": fig5,
}


def write_figures(cfg: OpticalConfig, outdir: str | Path, as_json: bool = False, only: Iterable[str] | None = None) -> dict[str, Path]:
    outdir = Path(outdir)
    paths = {}
    for name in only or FIGURES:
        table = FIGURES[name](cfg)
        paths[name] = table.write(outdir / f"{name}.{'json' if as_json else 'csv'}", as_json)
    return paths
