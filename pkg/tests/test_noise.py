
import pytest
from hypothesis import given, strategies as st

from nlteleport.capacity import schmidt_from_spectrum
from nlteleport.noise import (
    CoincidenceRecord,
    EfficiencyParams,
    apply_weights,
    background_subtract,
    conversion_sigma,
    procrustean_weights,
    records_from_csv,
    records_to_csv,
)


def test_background_subtraction():
    assert background_subtract(CoincidenceRecord(120, 20)).counts == 100
    s = background_subtract(CoincidenceRecord(10, 25))
    assert s.counts == 0 and s.clamped


def test_record_validation():
    with pytest.raises(ValueError):
        CoincidenceRecord(-1, 0)
    with pytest.raises(ValueError):
        CoincidenceRecord(1, 0, window_ns=0)


def test_record_csv_round_trip():
    recs = [CoincidenceRecord(12.5, 3.0, 0.5, "l=1"), CoincidenceRecord(7, 0, 1.0, "l=-1")]
    text = records_to_csv(recs)
    assert text.splitlines()[0] == "projector_label,signal,background,window_ns"
    assert records_from_csv(text) == recs


@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=30))
def test_procrustean_flattens(diag):
    w = procrustean_weights(diag)
    flat = apply_weights(diag, w)
    assert flat.max() / flat.min() <= 1 + 1e-12
    assert schmidt_from_spectrum(flat) == pytest.approx(len(diag), rel=1e-12)
    assert 0 < w.throughput <= 1


def test_procrustean_rejects_zero_entries():
    with pytest.raises(ValueError):
        procrustean_weights([1.0, 0.0])
    with pytest.raises(ValueError):
        procrustean_weights([])


def test_throughput_value():
    w = procrustean_weights([1.0, 3.0])
    assert w.throughput == pytest.approx(0.5)


@pytest.fixture
def beam():
    return EfficiencyParams.from_beam(1.2e-11, 1.5, 600e-6, (532e-9, 1565e-9, 808e-9), (1.8, 1.8, 1.8))


def test_sigma_scaling(beam):
    s = conversion_sigma(beam)
    brighter = EfficiencyParams(beam.chi2, 4 * beam.flux_per_area, beam.omegas, beam.indices)
    assert conversion_sigma(brighter) == pytest.approx(2 * s)
    assert conversion_sigma(beam, length=5e-3) == pytest.approx(5e-3 * s)


def test_sigma_magnitude(beam):
    # per-metre gain of order 0.2 for a watt-level pump
    assert 0.1 < conversion_sigma(beam) < 0.5


def test_efficiency_validation(beam):
    with pytest.raises(ValueError):
        EfficiencyParams(-1.0, 1.0, (1, 1, 1), (1, 1, 1))
    with pytest.raises(ValueError):
        EfficiencyParams(1.0, 1.0, (1, 1), (1, 1, 1))
    with pytest.raises(ValueError):
        conversion_sigma(beam, length=0.0)
