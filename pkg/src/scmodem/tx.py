"""Transmitter chain: line coding, pulse shaping, and passband BPSK modulation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import BitStream, SymbolStream, Waveform

__all__ = [
    "LineCodeScheme",
    "PulseKind",
    "PulseShape",
    "ModulatorConfig",
    "line_encode",
    "line_decode",
    "nominal_levels",
    "ami_alternation_violations",
    "make_rc_taps",
    "make_rrc_taps",
    "shape_taps",
    "pulse_shape",
    "nco_phase_increment",
    "nco_cos",
    "bpsk_modulate",
]

_TWO_PI = 2.0 * math.pi

# |denominator| below this is treated as the removable singularity of the
# raised-cosine family and replaced by the analytic limit.
_SINGULAR_EPS = 1e-8


class LineCodeScheme(enum.Enum):
    UNIPOLAR_NRZ = "unipolar_nrz"
    POLAR_NRZ = "polar_nrz"
    BIPOLAR_AMI = "bipolar_ami"
    MANCHESTER = "manchester"


class PulseKind(enum.Enum):
    RECT = "rect"
    RAISED_COSINE = "rc"
    ROOT_RAISED_COSINE = "rrc"


@dataclass(frozen=True)
class PulseShape:
    """Pulse-shaping selection. rolloff/span only apply to the RC family."""

    kind: PulseKind = PulseKind.RECT
    rolloff: float = 0.35
    span_symbols: int = 8

    def __post_init__(self):
        if self.kind is not PulseKind.RECT:
            if not (0.0 < self.rolloff <= 1.0):
                raise ValueError(f"rolloff must be in (0, 1], got {self.rolloff}")
            if self.span_symbols < 4 or self.span_symbols % 2 != 0:
                raise ValueError(f"span_symbols must be an even integer >= 4, got {self.span_symbols}")


@dataclass(frozen=True)
class ModulatorConfig:
    """Carrier NCO settings for passband BPSK."""

    carrier_freq_hz: float
    samples_per_symbol: int
    sample_rate_hz: float
    carrier_phase_rad: float = 0.0

    def __post_init__(self):
        if not (self.carrier_freq_hz > 0):
            raise ValueError(f"carrier_freq_hz must be > 0, got {self.carrier_freq_hz}")
        if not (self.sample_rate_hz > 0):
            raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if self.samples_per_symbol < 4:
            raise ValueError(f"samples_per_symbol must be >= 4, got {self.samples_per_symbol}")
        if not (self.carrier_freq_hz < self.sample_rate_hz / 2.0):
            raise ValueError(
                f"carrier {self.carrier_freq_hz} Hz violates Nyquist at fs={self.sample_rate_hz} Hz"
            )


def line_encode(bits: BitStream, scheme: LineCodeScheme, bit_rate_hz: float = 1.0) -> SymbolStream:
    """Map bits to line-code amplitude levels.

    UnipolarNRZ: 1 -> +1, 0 -> 0. PolarNRZ: 1 -> +1, 0 -> -1.
    BipolarAMI: 0 -> 0, successive ones alternate +1/-1 starting at +1.
    Manchester (G.E. Thomas): 1 -> (+1, -1), 0 -> (-1, +1); the output runs
    at twice the bit rate.
    """
    b = bits.bits.astype(np.float64)
    if scheme is LineCodeScheme.UNIPOLAR_NRZ:
        return SymbolStream(b, bit_rate_hz)
    if scheme is LineCodeScheme.POLAR_NRZ:
        return SymbolStream(2.0 * b - 1.0, bit_rate_hz)
    if scheme is LineCodeScheme.BIPOLAR_AMI:
        levels = np.zeros(len(bits), dtype=np.float64)
        mark_idx = np.flatnonzero(bits.bits)
        levels[mark_idx] = 1.0 - 2.0 * (np.arange(mark_idx.size) % 2)
        return SymbolStream(levels, bit_rate_hz)
    if scheme is LineCodeScheme.MANCHESTER:
        half = 2.0 * b - 1.0
        levels = np.empty(2 * len(bits), dtype=np.float64)
        levels[0::2] = half
        levels[1::2] = -half
        return SymbolStream(levels, 2.0 * bit_rate_hz)
    raise ValueError(f"unknown line code {scheme!r}")


def line_decode(symbols: SymbolStream, scheme: LineCodeScheme) -> BitStream:
    """Inverse of line_encode on sliced levels.

    AMI is decoded by magnitude, so mark-polarity violations do not corrupt
    bits (count them separately via ami_alternation_violations). Manchester
    decodes each half-symbol pair by its difference, ties toward 1.
    """
    a = symbols.amplitudes
    if scheme is LineCodeScheme.UNIPOLAR_NRZ:
        return BitStream((a > 0.5).astype(np.uint8))
    if scheme is LineCodeScheme.POLAR_NRZ:
        return BitStream((a >= 0.0).astype(np.uint8))
    if scheme is LineCodeScheme.BIPOLAR_AMI:
        return BitStream((np.abs(a) > 0.5).astype(np.uint8))
    if scheme is LineCodeScheme.MANCHESTER:
        if len(symbols) % 2 != 0:
            raise ValueError(f"Manchester stream length must be even, got {len(symbols)}")
        diff = a[0::2] - a[1::2]
        return BitStream((diff >= 0.0).astype(np.uint8))
    raise ValueError(f"unknown line code {scheme!r}")


def nominal_levels(scheme: LineCodeScheme) -> tuple[float, ...]:
    """Decision alphabet of a line code, sorted ascending."""
    if scheme is LineCodeScheme.UNIPOLAR_NRZ:
        return (0.0, 1.0)
    if scheme is LineCodeScheme.BIPOLAR_AMI:
        return (-1.0, 0.0, 1.0)
    return (-1.0, 1.0)


def ami_alternation_violations(symbols: SymbolStream) -> int:
    """Count successive AMI marks that fail to alternate polarity."""
    marks = symbols.amplitudes[np.abs(symbols.amplitudes) > 0.5]
    if marks.size < 2:
        return 0
    return int(np.count_nonzero(np.sign(marks[1:]) == np.sign(marks[:-1])))


def _rc_grid(span_symbols: int, samples_per_symbol: int) -> np.ndarray:
    if span_symbols < 2 or span_symbols % 2 != 0:
        raise ValueError(f"span_symbols must be a positive even integer, got {span_symbols}")
    if samples_per_symbol < 2:
        raise ValueError(f"samples_per_symbol must be >= 2, got {samples_per_symbol}")
    half = span_symbols * samples_per_symbol // 2
    return np.arange(-half, half + 1, dtype=np.float64) / samples_per_symbol


def make_rc_taps(rolloff: float, span_symbols: int, samples_per_symbol: int) -> np.ndarray:
    """Raised-cosine impulse response, center tap normalized to 1.

    Sampled at t = k/sps in symbol units over +/- span/2 symbols. The
    removable singularity at t = +/- 1/(2*rolloff) is replaced by its
    analytic limit (pi/4) * sinc(1/(2*rolloff)).
    """
    if not (0.0 < rolloff <= 1.0):
        raise ValueError(f"rolloff must be in (0, 1], got {rolloff}")
    t = _rc_grid(span_symbols, samples_per_symbol)
    den = 1.0 - (2.0 * rolloff * t) ** 2
    singular = np.abs(den) < _SINGULAR_EPS
    safe_den = np.where(singular, 1.0, den)
    taps = np.sinc(t) * np.cos(math.pi * rolloff * t) / safe_den
    taps[singular] = (math.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff))
    return taps / taps[taps.size // 2]


def make_rrc_taps(rolloff: float, span_symbols: int, samples_per_symbol: int) -> np.ndarray:
    """Root-raised-cosine impulse response, normalized to unit energy.

    Analytic limits fill t = 0 and the removable singularities at
    t = +/- 1/(4*rolloff) symbol periods.
    """
    if not (0.0 < rolloff <= 1.0):
        raise ValueError(f"rolloff must be in (0, 1], got {rolloff}")
    b = rolloff
    t = _rc_grid(span_symbols, samples_per_symbol)
    den = math.pi * t * (1.0 - (4.0 * b * t) ** 2)
    singular = np.abs(1.0 - (4.0 * b * t) ** 2) < _SINGULAR_EPS
    center = t == 0.0
    safe_den = np.where(singular | center, 1.0, den)
    taps = (np.sin(math.pi * t * (1.0 - b)) + 4.0 * b * t * np.cos(math.pi * t * (1.0 + b))) / safe_den
    taps[center] = 1.0 - b + 4.0 * b / math.pi
    lim = (b / math.sqrt(2.0)) * (
        (1.0 + 2.0 / math.pi) * math.sin(math.pi / (4.0 * b))
        + (1.0 - 2.0 / math.pi) * math.cos(math.pi / (4.0 * b))
    )
    taps[singular & ~center] = lim
    return taps / math.sqrt(float(np.dot(taps, taps)))


def shape_taps(shape: PulseShape, samples_per_symbol: int) -> np.ndarray:
    """FIR taps realizing a pulse shape at the given oversampling."""
    if shape.kind is PulseKind.RECT:
        if samples_per_symbol < 1:
            raise ValueError(f"samples_per_symbol must be >= 1, got {samples_per_symbol}")
        return np.ones(samples_per_symbol, dtype=np.float64)
    if shape.kind is PulseKind.RAISED_COSINE:
        return make_rc_taps(shape.rolloff, shape.span_symbols, samples_per_symbol)
    return make_rrc_taps(shape.rolloff, shape.span_symbols, samples_per_symbol)


def fir_convolve(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Full-length FIR convolution; switches to FFT when the direct cost is large."""
    if x.size == 0:
        return np.zeros(0, dtype=np.float64)
    if x.size * taps.size > 4_000_000:
        from scipy.signal import fftconvolve

        return fftconvolve(x, taps, mode="full")
    return np.convolve(x, taps, mode="full")


def pulse_shape(
    symbols: SymbolStream, shape: PulseShape, samples_per_symbol: int
) -> tuple[Waveform, float]:
    """Zero-stuff upsample and filter with the shaping taps.

    Returns the shaped waveform (full convolution, length
    n_symbols * sps + n_taps - 1) together with the filter group delay in
    samples, (n_taps - 1) / 2, so callers can align symbol instants exactly.
    """
    taps = shape_taps(shape, samples_per_symbol)
    up = np.zeros(len(symbols) * samples_per_symbol, dtype=np.float64)
    up[:: samples_per_symbol] = symbols.amplitudes
    shaped = fir_convolve(up, taps)
    rate = symbols.symbol_rate_hz * samples_per_symbol
    return Waveform(shaped, rate), (taps.size - 1) / 2.0


def nco_phase_increment(freq_hz: float, sample_rate_hz: float) -> float:
    return _TWO_PI * freq_hz / sample_rate_hz


def nco_cos(n_samples: int, phase0_rad: float, phase_inc_rad: float) -> np.ndarray:
    """Cosine of an NCO phase ramp.

    The phase accumulator is a double carried across fixed-size chunks and
    wrapped to [0, 2*pi) at each chunk boundary, so rounding error stays
    bounded for arbitrarily long waveforms.
    """
    out = np.empty(n_samples, dtype=np.float64)
    phase = math.fmod(phase0_rad, _TWO_PI)
    if phase < 0.0:
        phase += _TWO_PI
    chunk = 1 << 20
    i = 0
    while i < n_samples:
        m = min(chunk, n_samples - i)
        np.cos(phase + phase_inc_rad * np.arange(m), out=out[i : i + m])
        phase = math.fmod(phase + phase_inc_rad * m, _TWO_PI)
        if phase < 0.0:
            phase += _TWO_PI
        i += m
    return out


def bpsk_modulate(
    baseband: Waveform,
    cfg: ModulatorConfig,
    phase_offset_rad: float = 0.0,
    freq_offset_hz: float = 0.0,
) -> Waveform:
    """Multiply the shaped baseband onto the carrier: a[n] * cos(phase ramp).

    phase_offset_rad / freq_offset_hz model the TX-RX carrier mismatch and
    are injected here at the transmit NCO; the receiver's nominal carrier
    is the reference frame. Rejects carriers at or beyond Nyquist.
    """
    fs = baseband.sample_rate_hz
    if cfg.sample_rate_hz != fs:
        raise ValueError(
            f"modulator sample rate {cfg.sample_rate_hz} != waveform sample rate {fs}"
        )
    f = cfg.carrier_freq_hz + freq_offset_hz
    if not (0.0 < f < fs / 2.0):
        raise ValueError(f"offset carrier {f} Hz violates Nyquist at fs={fs} Hz")
    carrier = nco_cos(
        len(baseband),
        cfg.carrier_phase_rad + phase_offset_rad,
        nco_phase_increment(f, fs),
    )
    return Waveform(baseband.samples * carrier, fs)
