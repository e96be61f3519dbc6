"""AWGN channel calibrated in Eb/N0, plus the receiver front-end ADC model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, Waveform

__all__ = ["ChannelConfig", "AdcConfig", "measure_eb", "awgn_apply", "adc_quantize"]


@dataclass(frozen=True)
class ChannelConfig:
    """Channel impairments. ebn0_db = +inf is the noiseless sentinel."""

    ebn0_db: float = math.inf
    carrier_phase_offset_rad: float = 0.0
    carrier_freq_offset_hz: float = 0.0
    gain: float = 1.0
    rng: RngStream = field(default_factory=lambda: RngStream(0, 0))

    def __post_init__(self):
        if not (self.gain > 0):
            raise ValueError(f"gain must be > 0, got {self.gain}")
        if math.isnan(self.ebn0_db) or self.ebn0_db == -math.inf:
            raise ValueError(f"ebn0_db must be finite or +inf, got {self.ebn0_db}")

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.ebn0_db)


@dataclass(frozen=True)
class AdcConfig:
    """Uniform midrise quantizer with saturation at +/- full_scale."""

    n_bits: int = 8
    full_scale: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if not (1 <= self.n_bits <= 24):
            raise ValueError(f"n_bits must be in [1, 24], got {self.n_bits}")
        if not (self.full_scale > 0):
            raise ValueError(f"full_scale must be > 0, got {self.full_scale}")


def measure_eb(waveform: Waveform, n_bits_carried: int) -> float:
    """Empirical energy per transmitted bit: (sum s^2 / fs) / n_bits.

    Measured rather than computed analytically so Eb/N0 calibration stays
    correct for any line code / pulse shape combination.
    """
    if n_bits_carried <= 0:
        raise ValueError(f"n_bits_carried must be > 0, got {n_bits_carried}")
    s = waveform.samples
    energy = float(np.dot(s, s)) / waveform.sample_rate_hz
    return energy / n_bits_carried


def awgn_apply(
    waveform: Waveform,
    cfg: ChannelConfig,
    eb: float,
    rng: np.random.Generator | None = None,
) -> Waveform:
    """Scale by the flat channel gain and add white Gaussian noise.

    Noise variance is sigma^2 = (N0/2) * fs with N0 = gain^2 * eb / 10^(ebn0/10),
    i.e. the discrete-time equivalent of a two-sided N0/2 noise floor at the
    requested Eb/N0. Draws come from cfg.rng unless a live generator is
    passed (used by sweeps to keep batches independent).
    """
    s = waveform.samples
    if cfg.noiseless:
        return Waveform(cfg.gain * s, waveform.sample_rate_hz)
    if not (math.isfinite(eb) and eb > 0):
        raise ValueError(f"eb must be finite and > 0, got {eb}")
    if s.size == 0:
        return Waveform(s, waveform.sample_rate_hz)
    n0 = (cfg.gain**2) * eb / (10.0 ** (cfg.ebn0_db / 10.0))
    sigma = math.sqrt(n0 * waveform.sample_rate_hz / 2.0)
    gen = rng if rng is not None else cfg.rng.generator()
    noise = gen.normal(0.0, sigma, s.size)
    return Waveform(cfg.gain * s + noise, waveform.sample_rate_hz)


def adc_quantize(waveform: Waveform, cfg: AdcConfig) -> Waveform:
    """Uniform midrise quantization with saturation.

    step = 2 * full_scale / 2^n_bits; code = clamp(floor(x / step)); output
    value = (code + 0.5) * step. There is no zero output level and inputs
    beyond +/- full_scale saturate to the edge codes.
    """
    s = waveform.samples
    step = 2.0 * cfg.full_scale / (2**cfg.n_bits)
    top = 2 ** (cfg.n_bits - 1)
    codes = np.clip(np.floor(s / step), -top, top - 1)
    return Waveform((codes + 0.5) * step, waveform.sample_rate_hz)
