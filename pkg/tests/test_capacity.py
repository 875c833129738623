import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlteleport import capacity as cap
from nlteleport.channel import OpticalConfig, thin_width


@given(st.integers(1, 40), st.floats(1e-3, 1e3))
def test_flat_spectrum_gives_dimension(d, scale):
    assert cap.schmidt_from_spectrum(np.full(d, scale)) == pytest.approx(d, rel=1e-12)


def test_single_mode():
    assert cap.schmidt_from_spectrum([1, 0, 0]) == 1.0


@given(st.lists(st.floats(0, 10), min_size=1, max_size=20).filter(lambda v: sum(v) > 1e-6))
def test_schmidt_bounds(p):
    k = cap.schmidt_from_spectrum(p)
    assert 1.0 - 1e-12 <= k <= len(p) + 1e-9


@pytest.mark.parametrize("bad", [[], [-1, 2], [0, 0], [np.nan, 1]])
def test_schmidt_rejects_bad_spectra(bad):
    with pytest.raises(ValueError):
        cap.schmidt_from_spectrum(bad)


def _svd_schmidt_1d(A, B, n=600):
    # exp(-A x^2 - A y^2 + 2 B x y) on a grid wide enough for the narrowest direction
    L = 10 / math.sqrt(A - B)
    x = np.linspace(-L, L, n)
    f = np.exp(-A * x[:, None] ** 2 - A * x[None, :] ** 2 + 2 * B * np.outer(x, x))
    s = np.linalg.svd(f, compute_uv=False) ** 2
    s /= s.sum()
    return 1 / np.sum(s * s)


@pytest.mark.parametrize("alpha,beta", [(2.7, 1.1), (4.1, 1.1), (6.0, 2.0)])
def test_kernel_schmidt_matches_svd(cfg, alpha, beta):
    c = cfg.with_ratios(alpha, beta)
    a, u = thin_width(c), c.w_0**2 / 4
    expected = _svd_schmidt_1d(a + u, a) ** 2
    assert cap.schmidt_from_kernel(c) == pytest.approx(expected, rel=1e-6)


def test_kernel_schmidt_separable_limit(cfg):
    assert cap.schmidt_from_kernel(cfg.with_ratios(0.01, 1.0)) == pytest.approx(1.0, abs=1e-3)


def test_kernel_schmidt_grows_with_alpha(cfg):
    ks = [cap.schmidt_from_kernel(cfg.with_ratios(a, 1.0)) for a in (1, 2, 4, 8, 16)]
    assert all(x < y for x, y in zip(ks, ks[1:]))
    assert cap.schmidt_from_kernel(cfg) >= 10


def test_kappa_scaling(cfg):
    k = cap.kappa_estimate(cfg)
    wide = OpticalConfig.default(w_p=2 * cfg.w_p, w_D=2 * cfg.w_D)
    short = OpticalConfig.default(L_p=cfg.L_p / 2, L_D=cfg.L_D / 2)
    # homogeneous of degree two in the waists
    assert cap.kappa_estimate(wide) == pytest.approx(4 * k)
    assert cap.kappa_estimate(short) == pytest.approx(2 * k)


def test_kappa_needs_a_crystal():
    with pytest.raises(ValueError):
        cap.kappa_estimate(OpticalConfig.default(L_p=0.0, L_D=0.0))
    with pytest.raises(ValueError):
        cap.kappa_estimate(OpticalConfig.default(L_p=1e-3, L_D=2e-3))


def test_kappa_against_modal_capacity(cfg):
    ratio = cap.kappa_estimate(cfg) / cap.modal_capacity(cfg)
    assert 1 / 3 <= ratio <= 3


@pytest.mark.parametrize(
    "beta,ell,expected", [(0.0, 0, 1.0), (1.0, 0, math.sqrt(2)), (1.0, 5, math.sqrt(2) * math.sqrt(6))]
)
def test_alpha_threshold(beta, ell, expected):
    assert cap.alpha_threshold(beta, ell) == pytest.approx(expected)


def test_alpha_threshold_scales_with_index_ratio():
    assert cap.alpha_threshold(1.0, 2, n_ratio=1.1) == pytest.approx(1.1 * cap.alpha_threshold(1.0, 2))


def test_basis_modes():
    assert len(cap.basis_modes("vortex", 1e-4)) == 11
    assert len(cap.basis_modes("hg", 1e-4, hg_order=2)) == 9
    with pytest.raises(ValueError):
        cap.basis_modes("bessel", 1e-4)


def test_scan_monotone_in_alpha(cfg):
    scan = cap.capacity_scan(cfg, [1, 2, 3, 4, 5, 6], [0.5, 1, 2])
    assert scan.K.shape == (3, 6)
    assert np.all(np.diff(scan.K, axis=1) > 0)


def test_experimental_settings_ordering(cfg):
    k = [cap.modal_capacity(cfg.with_ratios(a, b)) for b, a in [(4.1, 2.7), (1.1, 2.7), (1.1, 4.1)]]
    assert k[0] < k[1] < k[2]


def test_one_cell_scan_is_modal_capacity(spiral_cfg, cfg):
    scan = cap.capacity_scan(cfg, [2.7], [1.1])
    assert scan.K[0, 0] == pytest.approx(cap.modal_capacity(spiral_cfg), rel=1e-12)


def test_scan_csv_layout(cfg):
    scan = cap.capacity_scan(cfg, [1.0, 2.0], [1.0])
    lines = scan.to_csv().splitlines()
    assert lines[0] == "beta\\alpha,1.0,2.0"
    assert lines[1].startswith("1.0,")
    assert len(lines) == 2
    assert scan.columns()["beta"] == [1.0]


def test_scan_parallel_is_deterministic(cfg):
    a = cap.capacity_scan(cfg, [1, 3], [1, 2])
    b = cap.capacity_scan(cfg, [1, 3], [1, 2], workers=4)
    assert np.array_equal(a.K, b.K)


@pytest.mark.xfail(strict=True, reason="modal sum over 11 vortices and the windowed-kernel Schmidt number differ by about 24% here")
def test_modal_and_kernel_capacity_agree_within_five_percent(cfg):
    c = cfg.with_ratios(4.1, 1.1)
    assert cap.modal_capacity(c) == pytest.approx(cap.schmidt_from_kernel(c), rel=0.05)
