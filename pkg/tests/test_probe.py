
import numpy as np
import pytest

from nlteleport.probe import (
    DiagonalChannel,
    centered_support,
    fit_purity_dimension,
    model_visibility,
    probe_overlaps,
    probe_probability,
    probe_visibilities,
)


def test_centered_support():
    assert centered_support(1) == (0,)
    assert centered_support(3) == (-1, 0, 1)
    assert centered_support(4) == (-1, 0, 1, 2)


def test_channel_validation():
    with pytest.raises(ValueError):
        DiagonalChannel({0: 0.5})
    with pytest.raises(ValueError):
        DiagonalChannel({})
    ch = DiagonalChannel.from_intensities({-1: 1.0, 0: 2.0, 1: 1.0})
    assert sum(v * v for v in ch.lambdas.values()) == pytest.approx(1.0)
    assert ch.support == (-1, 0, 1)


@pytest.mark.parametrize("n", [0, 2, -3, 1.5])
def test_probe_order_must_be_odd(n):
    with pytest.raises(ValueError):
        probe_overlaps(n, 0.0, (0,))


def test_probe_overlaps_at_zero_angle_are_powers():
    ells = tuple(range(-6, 7))
    x = probe_overlaps(3, 0.0, ells)
    assert all(abs(v.imag) < 1e-9 and v.real >= -1e-12 for v in x)
    assert sum(v.real for v in x) <= 1.0 + 1e-9
    assert max(v.real for l, v in zip(ells, x) if l % 3) < 1e-4


def test_visibility_one_for_small_support():
    ch = DiagonalChannel.flat(9)
    v = probe_visibilities(ch, [1, 3], 1.0, 9)
    assert v[0] == pytest.approx(1.0, abs=1e-3)
    assert v[1] == pytest.approx(1.0, abs=1e-2)


def test_single_support_component_gives_no_fringe():
    # a 3-dim centred support holds only l = 0 among the multiples of 3
    assert probe_visibilities(DiagonalChannel.flat(3), [3], 1.0, 3)[0] < 1e-3


def test_noise_lowers_visibility():
    ch = DiagonalChannel.flat(5)
    pure = probe_visibilities(ch, [1], 1.0, 5)[0]
    noisy = probe_visibilities(ch, [1], 0.5, 5)[0]
    assert noisy < pure


def test_probability_checks():
    ch = DiagonalChannel.flat(3)
    with pytest.raises(ValueError):
        probe_probability(ch, 1, 0.0, 1.5, 3)
    with pytest.raises(ValueError):
        probe_probability(ch, 1, 0.0, 0.5, 0)


def test_model_matches_forward_model_for_flat_channel():
    v_model = model_visibility(0.8, 7, [1, 3, 5])
    v_fwd = probe_visibilities(DiagonalChannel.flat(7), [1, 3, 5], 0.8, 7)
    assert np.allclose(v_model, v_fwd, atol=1e-3)


@pytest.mark.parametrize("p,d", [(1.0, 10), (0.9, 5), (0.7, 3)])
def test_round_trip(p, d):
    n_list = [1, 3, 5, 7, 9, 11, 13]
    v = probe_visibilities(DiagonalChannel.flat(d), n_list, p, d)
    fit = fit_purity_dimension(list(zip(n_list, v)))
    assert abs(fit.K_hat - d) <= 1
    assert abs(fit.p_hat - p) <= 0.05
    assert not fit.indeterminate


def test_pure_noise_is_indeterminate():
    fit = fit_purity_dimension([(1, 0.0), (3, 0.0), (5, 0.0)])
    assert fit.indeterminate


def test_fit_needs_two_points():
    with pytest.raises(ValueError):
        fit_purity_dimension([(1, 0.9)])


def test_fit_csv():
    fit = fit_purity_dimension([(1, 0.9), (3, 0.5), (5, 0.1)])
    lines = fit.to_csv().splitlines()
    assert lines[0] == "n,V_n,p_fit,K_fit,residual"
    assert len(lines) == 4
