import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riga.integrators import PulseSet, TimeGrid
from riga.spectra import nyquist_margin, pulse_spectrum, spectral_energy


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_sim=st.integers(1, 300), mode=st.sampled_from(["smooth", "piecewise"]))
def test_parseval(seed, n_sim, mode):
    rng = np.random.default_rng(seed)
    grid = TimeGrid(1.0, n_sim)
    length = n_sim + 1 if mode == "smooth" else n_sim
    pulses = PulseSet(mode, rng.normal(size=(3, length)))
    spec = pulse_spectrum(pulses, grid)
    energy = spectral_energy(spec).sum(axis=1)
    expect = length * np.sum(pulses.values**2, axis=1)
    np.testing.assert_allclose(energy, expect, rtol=1e-8)


def test_single_tone_peak():
    grid = TimeGrid(10.0, 1000)
    t = grid.times[:-1]
    pulses = PulseSet("piecewise", np.sin(2 * np.pi * 3.0 * t)[None, :])
    spec = pulse_spectrum(pulses, grid)
    assert spec.frequencies[np.argmax(spec.magnitudes[0])] == pytest.approx(3.0)
    assert spec.nyquist == pytest.approx(50.0)
    assert spec.mean.shape == spec.frequencies.shape


def test_nyquist_margin_flags_high_frequencies():
    grid = TimeGrid(1.0, 100)
    t = grid.times[:-1]
    low = PulseSet("piecewise", np.sin(2 * np.pi * 2 * t)[None, :])
    high = PulseSet("piecewise", np.sin(2 * np.pi * 45 * t)[None, :])
    assert not nyquist_margin(pulse_spectrum(low, grid)).flagged
    rep = nyquist_margin(pulse_spectrum(high, grid))
    assert rep.flagged and rep.fraction_above > 0.9 and rep.cutoff == pytest.approx(25.0)
    with pytest.raises(ValueError):
        nyquist_margin(pulse_spectrum(low, grid), fraction=1.5)


def test_zero_pulse_not_flagged():
    grid = TimeGrid(1.0, 10)
    rep = nyquist_margin(pulse_spectrum(PulseSet.zeros(2, grid), grid))
    assert not rep.flagged and rep.fraction_above == 0.0
