"""EMG conditioning: band-pass, demean, rectify, low-pass envelope.

All filters are Butterworth, applied forward-backward for zero phase, with
reflect padding of ``3 * order`` samples to suppress startup transients on
short trials. The full chain is deterministic and channelwise independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .types import N_CHANNELS


class FilterDesignError(ValueError):
    """Requested corner frequencies are invalid for the sampling rate."""


class SignalTooShortError(ValueError):
    """Input shorter than the zero-phase edge padding allows."""


@dataclass(frozen=True)
class FilterSpec:
    """Corner frequencies (Hz) and order of the conditioning chain."""

    band_low: float = 20.0
    band_high: float = 300.0
    envelope_cutoff: float = 50.0
    order: int = 4

    def __post_init__(self):
        if self.order < 2 or self.order % 2:
            raise FilterDesignError(f"order must be a positive even integer, got {self.order}")
        if not 0 < self.band_low < self.band_high:
            raise FilterDesignError(
                f"need 0 < band_low < band_high, got ({self.band_low}, {self.band_high})"
            )
        if self.envelope_cutoff <= 0:
            raise FilterDesignError("envelope cutoff must be positive")

    def validate_rate(self, rate_hz: float) -> None:
        nyquist = rate_hz / 2.0
        if self.band_high >= nyquist:
            raise FilterDesignError(
                f"band_high {self.band_high} Hz >= Nyquist {nyquist} Hz"
            )
        if self.envelope_cutoff >= nyquist:
            raise FilterDesignError(
                f"envelope cutoff {self.envelope_cutoff} Hz >= Nyquist {nyquist} Hz"
            )


def _zero_phase(sos: np.ndarray, x: np.ndarray, order: int) -> np.ndarray:
    padlen = 3 * order
    if x.shape[-1] <= padlen:
        raise SignalTooShortError(
            f"signal length {x.shape[-1]} <= edge padding {padlen}"
        )
    return signal.sosfiltfilt(sos, x, axis=-1, padtype="even", padlen=padlen)


def bandpass(x: np.ndarray, rate_hz: float, spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """Zero-phase band-pass along the last axis."""
    spec.validate_rate(rate_hz)
    sos = signal.butter(
        spec.order, [spec.band_low, spec.band_high], btype="bandpass",
        output="sos", fs=rate_hz,
    )
    return _zero_phase(sos, np.asarray(x, dtype=float), spec.order)


def demean(x: np.ndarray) -> np.ndarray:
    """Remove the per-channel mean (last axis)."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("cannot demean an empty signal")
    return x - x.mean(axis=-1, keepdims=True)


def rectify(x: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(x, dtype=float))


def envelope(x: np.ndarray, rate_hz: float, spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """Zero-phase low-pass of an already-rectified signal.

    Tiny negative excursions from filter ringing are clamped to 0 so the
    output stays valid for downstream non-negative factorization.
    """
    spec.validate_rate(rate_hz)
    sos = signal.butter(
        spec.order, spec.envelope_cutoff, btype="lowpass", output="sos", fs=rate_hz
    )
    out = _zero_phase(sos, np.asarray(x, dtype=float), spec.order)
    return np.maximum(out, 0.0)


def bandpass_gain(spec: FilterSpec, rate_hz: float, freq_hz: float) -> float:
    """Magnitude response of the zero-phase band-pass at one frequency.

    Forward-backward filtering squares the single-pass magnitude; useful as
    an analytic oracle for attenuation checks.
    """
    sos = signal.butter(
        spec.order, [spec.band_low, spec.band_high], btype="bandpass",
        output="sos", fs=rate_hz,
    )
    _, h = signal.sosfreqz(sos, worN=[freq_hz], fs=rate_hz)
    return float(np.abs(h[0]) ** 2)


def preprocess(raw_emg: np.ndarray, rate_hz: float, spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """Full conditioning chain for a (14, n) EMG block.

    Order: band-pass, demean, rectify, low-pass envelope. Channels are
    processed independently; output has the input's shape.
    """
    raw_emg = np.asarray(raw_emg, dtype=float)
    if raw_emg.ndim != 2 or raw_emg.shape[0] != N_CHANNELS:
        raise ValueError(f"expected ({N_CHANNELS}, n) EMG matrix, got {raw_emg.shape}")
    x = bandpass(raw_emg, rate_hz, spec)
    x = demean(x)
    x = rectify(x)
    return envelope(x, rate_hz, spec)
