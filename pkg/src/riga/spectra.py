"""Pulse spectra and bandwidth checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from riga.integrators import PulseSet, TimeGrid

__all__ = ["Spectrum", "pulse_spectrum", "spectral_energy", "nyquist_margin", "NyquistReport"]


@dataclass(frozen=True)
class Spectrum:
    """One-sided DFT magnitudes of every channel.

    ``magnitudes`` has shape ``(m, L // 2 + 1)`` for ``L`` samples per
    channel; ``mean`` is the channel average.
    """

    frequencies: np.ndarray
    magnitudes: np.ndarray
    nyquist: float
    n_samples: int

    @property
    def mean(self) -> np.ndarray:
        return self.magnitudes.mean(axis=0)


def pulse_spectrum(pulses: PulseSet, grid: TimeGrid) -> Spectrum:
    """Magnitude of the real FFT of each channel, sampled every ``delta``."""
    v = pulses.values
    mags = np.abs(np.fft.rfft(v, axis=1))
    freqs = np.fft.rfftfreq(v.shape[1], grid.delta)
    return Spectrum(freqs, mags, 0.5 / grid.delta, v.shape[1])


def spectral_energy(spec: Spectrum) -> np.ndarray:
    """Per-bin energy of the full two-sided spectrum, folded onto the one-sided bins.

    Summed over bins this equals ``L * sum(u**2)`` (Parseval).
    """
    w = np.full(spec.magnitudes.shape[1], 2.0)
    w[0] = 1.0
    if spec.n_samples % 2 == 0:
        w[-1] = 1.0
    return spec.magnitudes**2 * w


@dataclass(frozen=True)
class NyquistReport:
    flagged: bool
    fraction_above: float
    cutoff: float


def nyquist_margin(spec: Spectrum, fraction: float = 0.5, threshold: float = 0.01) -> NyquistReport:
    """Flag spectra with more than ``threshold`` of their energy above ``fraction * nyquist``."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    energy = spectral_energy(spec).sum(axis=0)
    total = energy.sum()
    cutoff = fraction * spec.nyquist
    above = float(energy[spec.frequencies > cutoff].sum() / total) if total > 0 else 0.0
    return NyquistReport(above > threshold, above, cutoff)
