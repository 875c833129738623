import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlteleport import _kernels, _pairsum_py
from nlteleport.channel import (
    ClosedThin,
    OpticalConfig,
    Quadrature,
    channel_matrix,
    crosstalk_matrix,
    delta_kz,
    kernel_element,
    kernel_quadrature,
    kernel_thin,
    pair_amplitude,
    pair_normalization,
    phase_matching,
    thin_crystal_ratio,
    thin_width,
)
from nlteleport.errors import ToleranceNotMetError
from nlteleport.modes import LG, Gauss, MomentumGrid, PhaseVortex, mode_spectrum


def test_delta_kz_by_hand(cfg):
    q1 = np.array([1.0e4, -2.0e4])
    q2 = np.array([3.0e4, 5.0e3])
    s = q1 + q2
    cp = cfg.lambda_p / (4 * math.pi * cfg.n_p)
    cb = cfg.lambda_B / (4 * math.pi * cfg.n_B)
    cc = cfg.lambda_C / (4 * math.pi * cfg.n_C)
    expected = -cp * (s @ s) + cb * (q1 @ q1) + cc * (q2 @ q2)
    assert delta_kz(q1, q2, cfg, "SPDC") == pytest.approx(expected, rel=1e-14)


def test_delta_kz_vanishes_at_origin(cfg):
    assert delta_kz([0.0, 0.0], [0.0, 0.0], cfg, "SFG") == 0.0


def test_phase_matching_shapes():
    assert phase_matching(0.0, "sinc", 0.2) == 1.0
    assert phase_matching(math.pi, "sinc", 0.2) == pytest.approx(0.0, abs=1e-15)
    assert phase_matching(2.0, "gaussian", 0.25) == pytest.approx(math.exp(-1.0))
    with pytest.raises(ValueError):
        phase_matching(1.0, "lorentz", 0.2)


def test_default_gamma_matches_sinc_curvature(cfg):
    # sinc(x) = 1 - x^2/6 + O(x^4), so the Gaussian exponent agrees to fourth order
    x = np.array([1e-3, 3e-3, 1e-2])
    diff = np.abs(phase_matching(x, "sinc", 0) - phase_matching(x, "gaussian", cfg.gamma_sinc))
    assert np.all(diff < x**4)


def test_zero_length_normalisation_is_one(cfg):
    thin = OpticalConfig.default(L_p=0.0, L_D=0.0)
    assert pair_normalization(thin, "SPDC") == 1.0
    assert pair_amplitude([0, 0], [0, 0], thin, "SFG") == 1.0


def test_pair_amplitude_peaks_at_zero(cfg):
    peak = pair_amplitude([0.0, 0.0], [0.0, 0.0], cfg, "SPDC")
    off = pair_amplitude([3e3, 0.0], [0.0, 1e3], cfg, "SPDC")
    assert peak == pytest.approx(pair_normalization(cfg, "SPDC"))
    assert abs(off) < peak


def test_thin_kernel_parameters(cfg):
    k = kernel_thin(cfg)
    a = cfg.w_D**2 * cfg.w_p**2 / (4 * (cfg.w_D**2 + cfg.w_p**2))
    assert k.width_a == a == thin_width(cfg)
    amp = pair_normalization(cfg, "SPDC") * pair_normalization(cfg, "SFG") / (math.pi * (cfg.w_D**2 + cfg.w_p**2))
    assert k.amplitude == pytest.approx(amp, rel=1e-15)
    assert k.delta_weight() == pytest.approx(amp * math.pi / a)
    assert k(np.zeros(2)) == pytest.approx(amp)


@pytest.mark.parametrize("method", ["polar", "fft"])
def test_gaussian_element_closed_form(method):
    # <G|T|G> for a normalised Gaussian of waist w: amp * pi w^2 / (2 s (s + 2a)), s = w^2 / 4
    w = 80e-6
    k = ClosedThin(1.0, (150e-6) ** 2)
    grid = MomentumGrid.for_waist(w, n=128)
    g = mode_spectrum(Gauss(w), grid)
    s = w**2 / 4
    expected = math.pi * w**2 / (2 * s * (s + 2 * k.width_a))
    assert kernel_element(k, g, g, method=method) == pytest.approx(expected, rel=1e-6)


def test_polar_and_fft_agree_on_lg(spiral_cfg):
    k = kernel_thin(spiral_cfg)
    grid = MomentumGrid.for_waist(spiral_cfg.w_0, n=128)
    a = mode_spectrum(LG(1, 1, spiral_cfg.w_0), grid)
    b = mode_spectrum(LG(1, 0, spiral_cfg.w_0), grid)
    polar = kernel_element(k, a, b, method="polar")
    fft = kernel_element(k, a, b, method="fft")
    assert abs(polar - fft) < 1e-6 * k.delta_weight()


def test_vortex_selection_rule_is_exact(spiral_cfg):
    modes = [PhaseVortex(l, spiral_cfg.w_0) for l in range(-5, 6)]
    P = crosstalk_matrix(kernel_thin(spiral_cfg), modes, modes).P
    off = P - np.diag(np.diag(P))
    assert off.max() <= 1e-6 * P.max()


def test_crosstalk_is_symmetric_in_ell(spiral_cfg):
    modes = [PhaseVortex(l, spiral_cfg.w_0) for l in range(-3, 4)]
    d = crosstalk_matrix(kernel_thin(spiral_cfg), modes, modes).diagonal()
    assert np.allclose(d, d[::-1], rtol=1e-10)
    assert np.all(np.diff(d[3:]) < 0)


def test_column_normalisation(spiral_cfg):
    modes = [LG(l, p, spiral_cfg.w_0) for l in (-1, 0, 1) for p in (0, 1)]
    m = crosstalk_matrix(kernel_thin(spiral_cfg), modes, modes, normalization="column")
    assert np.allclose(m.P.sum(axis=0), 1.0)
    with pytest.raises(ValueError):
        crosstalk_matrix(kernel_thin(spiral_cfg), modes, modes, normalization="rows")


def test_workers_do_not_change_results(spiral_cfg):
    modes = [LG(l, 0, spiral_cfg.w_0) for l in (-1, 0, 1)]
    k = kernel_thin(spiral_cfg)
    a = channel_matrix(k, modes, modes)
    b = channel_matrix(k, modes, modes, workers=3)
    assert np.array_equal(a, b)


def test_quadrature_reproduces_thin_limit():
    cfg = OpticalConfig.default(L_p=1e-6, L_D=1e-6, w_p=200e-6, w_D=200e-6, w_0=100e-6)
    grid = MomentumGrid.for_waist(cfg.w_0, n=64)
    a = mode_spectrum(LG(1, 0, cfg.w_0), grid)
    thin = kernel_element(kernel_thin(cfg), a, a)
    quad = kernel_element(kernel_quadrature(cfg, grid), a, a)
    assert abs(quad - thin) <= 1e-3 * abs(thin)


def test_quadrature_reports_unreachable_tolerance():
    cfg = OpticalConfig.default(L_p=1e-6, L_D=1e-6, w_p=200e-6, w_D=200e-6, w_0=100e-6)
    grid = MomentumGrid.for_waist(cfg.w_0, n=64)
    k = Quadrature(cfg, grid, tolerance=1e-30, max_n=64)
    a = mode_spectrum(LG(0, 0, cfg.w_0), grid)
    with pytest.raises(ToleranceNotMetError) as info:
        kernel_element(k, a, a)
    assert info.value.tolerance == 1e-30


def test_long_crystal_element_bounded_by_thin(cfg):
    # |PM| <= 1, so a finite crystal cannot exceed the thin-crystal identity scale
    small = OpticalConfig.default(w_p=200e-6, w_D=200e-6, w_0=100e-6, L_p=2e-3, L_D=2e-3)
    grid = MomentumGrid.for_waist(small.w_0, n=64)
    a = mode_spectrum(Gauss(small.w_0), grid)
    k = kernel_quadrature(small, grid, tolerance=0)
    assert abs(kernel_element(k, a, a)) <= k.thin_bound()


def test_config_validation():
    with pytest.raises(TypeError):
        OpticalConfig()  # indices are required
    with pytest.raises(ValueError, match="energy"):
        OpticalConfig.default(lambda_C=900e-9)
    with pytest.raises(ValueError):
        OpticalConfig.default(w_0=-1.0)
    with pytest.raises(ValueError):
        OpticalConfig.default(n=0.5)


def test_ratios(cfg):
    c = cfg.with_ratios(4.0, 2.0)
    assert c.alpha == pytest.approx(4.0)
    assert c.beta == pytest.approx(2.0)


def test_thin_crystal_ratio_flag(cfg):
    r = thin_crystal_ratio(cfg)
    assert r.spdc == pytest.approx(cfg.lambda_p * cfg.L_p / cfg.w_p**2)
    assert not r.flagged
    assert thin_crystal_ratio(OpticalConfig.default(w_p=20e-6, w_D=20e-6, w_0=5e-6)).flagged


# ---------------------------------------------------------------------------
# compiled kernel against the fallback
# ---------------------------------------------------------------------------


@given(st.integers(0, 2**31 - 1), st.sampled_from([0, 1]), st.integers(1, 9))
@settings(max_examples=15, deadline=None)
def test_compiled_matches_fallback(seed, approx, radius):
    compiled = pytest.importorskip("nlteleport._pairsum")
    rng = np.random.default_rng(seed)
    n = 16
    w = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q = (np.arange(n) - n / 2 + 0.5) * 1e4
    args = (w, q, 2e-9, 3e-8, 2e-8, 4e-8, 1e-3, approx, 0.2, radius)
    a = compiled.contract_pair(*args)
    b = _pairsum_py.contract_pair(*args)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * np.abs(b).max())


def test_backend_reported():
    assert _kernels.BACKEND in ("cython", "python")


def test_environment_forces_fallback():
    env = dict(os.environ, NLTELEPORT_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import nlteleport; print(nlteleport.BACKEND)"], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"
