import itertools
import math

import numpy as np
import pytest

from nlteleport.errors import ConvergenceError
from nlteleport.metrics import fidelity_mixed
from nlteleport.tomography import (
    OAM4_PHASES,
    DensityMatrix,
    ProjectionRecord,
    mub_bases,
    projector_set,
    reconstruct,
    simulate_counts,
    trace_distance,
)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_mubs_are_orthonormal_and_unbiased(d):
    bases = mub_bases(d)
    assert len(bases) == d + 1
    for b in bases:
        m = np.array(b)
        assert np.allclose(m.conj() @ m.T, np.eye(d), atol=1e-12)
    for b1, b2 in itertools.combinations(bases, 2):
        for u in b1:
            for v in b2:
                assert abs(np.vdot(u, v)) ** 2 == pytest.approx(1 / d, abs=1e-12)


def test_oam_basis_is_one_of_the_mubs():
    vecs = [np.concatenate([[1], np.exp(1j * np.array(t))]) / 2 for t in OAM4_PHASES]
    assert any(np.allclose(np.array(b), np.array(vecs)) for b in mub_bases(4))


def test_unsupported_dimension():
    with pytest.raises(ValueError):
        mub_bases(5)


@pytest.mark.parametrize("scheme", ["mub-complete", "pairwise-overcomplete"])
@pytest.mark.parametrize("method", ["max-likelihood", "linear-inversion"])
def test_noiseless_pure_round_trip(scheme, method):
    psi = np.array([1, 1, 1]) / math.sqrt(3)
    recs = simulate_counts(DensityMatrix.pure(psi), projector_set(3, scheme), 1e6)
    rho = reconstruct(recs, 3, method)
    assert fidelity_mixed(rho, psi) >= 0.999


def test_isotropic_state_fidelity():
    psi = np.array([1, 1, 1]) / math.sqrt(3)
    recs = simulate_counts(DensityMatrix.isotropic(psi, 0.7), projector_set(3), 1e6)
    assert fidelity_mixed(reconstruct(recs, 3), psi) == pytest.approx(0.8, abs=1e-6)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("rank", ["pure", "full"])
@pytest.mark.parametrize("method", ["max-likelihood", "linear-inversion"])
def test_round_trip_trace_distance(d, rank, method):
    rng = np.random.default_rng(d)
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    a = z[:, :1] if rank == "pure" else z
    m = a @ a.conj().T
    rho = DensityMatrix(0.5 * (m + m.conj().T) / np.trace(m).real)
    out = reconstruct(simulate_counts(rho, projector_set(d), 1e5), d, method)
    assert trace_distance(out, rho) <= 1e-6


def test_noisy_reconstruction_is_positive():
    rho = DensityMatrix.pure(np.ones(4) / 2)
    for seed in range(5):
        recs = simulate_counts(rho, projector_set(4), 300, accidental_rate=40, seed=seed, poisson=True)
        assert np.linalg.eigvalsh(reconstruct(recs, 4).matrix).min() >= -1e-10


def test_qubit_mixed_state_recovered():
    rho = DensityMatrix(np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]]))
    recs = simulate_counts(rho, projector_set(2), 1e5)
    assert trace_distance(reconstruct(recs, 2), rho) < 1e-6


def test_accidentals_reduce_fidelity():
    psi = np.array([1, 0, 1]) / math.sqrt(2)
    clean = simulate_counts(DensityMatrix.pure(psi), projector_set(3), 1e4)
    noisy = simulate_counts(DensityMatrix.pure(psi), projector_set(3), 1e4, accidental_rate=500)
    assert fidelity_mixed(reconstruct(noisy, 3), psi) < fidelity_mixed(reconstruct(clean, 3), psi)


def test_poisson_counts_are_seeded():
    rho = DensityMatrix.pure([1, 1j])
    a = simulate_counts(rho, projector_set(2), 1e3, seed=5, poisson=True)
    b = simulate_counts(rho, projector_set(2), 1e3, seed=5, poisson=True)
    c = simulate_counts(rho, projector_set(2), 1e3, seed=6, poisson=True)
    assert [r.counts for r in a] == [r.counts for r in b]
    assert [r.counts for r in a] != [r.counts for r in c]
    assert all(float(r.counts).is_integer() for r in a)


def test_rates_use_durations():
    psi = np.array([1, 1]) / math.sqrt(2)
    recs = simulate_counts(DensityMatrix.pure(psi), projector_set(2), 1e4)
    stretched = [ProjectionRecord(r.projector, r.counts * (k + 1), duration=k + 1) for k, r in enumerate(recs)]
    assert fidelity_mixed(reconstruct(stretched, 2), psi) == pytest.approx(1.0, abs=1e-6)


def test_incomplete_projectors_rejected():
    recs = simulate_counts(DensityMatrix.pure([1, 0, 0]), [np.eye(3)[k] for k in range(3)], 100)
    with pytest.raises(ValueError, match="complete"):
        reconstruct(recs, 3)


def test_iteration_cap_raises():
    psi = np.array([1, 2, 3]) / math.sqrt(14)
    recs = simulate_counts(DensityMatrix.isotropic(psi, 0.6), projector_set(3), 200, seed=3, poisson=True)
    with pytest.raises(ConvergenceError) as info:
        reconstruct(recs, 3, max_iter=1)
    assert info.value.iterations == 1
    assert info.value.residual > 1e-10


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1.2, 0], [0, -0.2]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.5j], [0.5j, 0.5]]))


def test_density_matrix_csv():
    rho = DensityMatrix.pure([1, 1j])
    text = rho.to_csv()
    re, im = text.split("\n\n")
    assert re.splitlines() == ["0.4999999999999999,0.0", "0.0,0.4999999999999999"] or len(re.splitlines()) == 2
    rows = [list(map(float, line.split(","))) for line in im.strip().splitlines()]
    assert np.allclose(np.array(rows), rho.matrix.imag)


def test_record_validation():
    with pytest.raises(ValueError):
        ProjectionRecord((1, 0), -1.0)
