"""Core signal types, seeded random streams, and closed-form BPSK reference math."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "BitStream",
    "SymbolStream",
    "Waveform",
    "RngStream",
    "PRBS_TAPS",
    "prbs_generate",
    "q_function",
    "theoretical_ber_bpsk",
]

_UINT64_MAX = 2**64 - 1


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sequence, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class BitStream:
    """Ordered sequence of binary symbols {0, 1}. Empty streams are valid."""

    bits: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.bits)
        if raw.ndim != 1:
            raise ValueError(f"bits must be 1-D, got shape {raw.shape}")
        if raw.size and not np.all((raw == 0) | (raw == 1)):
            raise ValueError("bits must contain only 0 and 1")
        object.__setattr__(self, "bits", _frozen_array(raw, np.uint8))

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def tolist(self) -> list[int]:
        return self.bits.tolist()


@dataclass(frozen=True, eq=False)
class SymbolStream:
    """Real-valued amplitude levels at a fixed symbol rate."""

    amplitudes: np.ndarray
    symbol_rate_hz: float = 1.0

    def __post_init__(self):
        arr = _frozen_array(self.amplitudes, np.float64)
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("amplitudes must all be finite")
        if not (self.symbol_rate_hz > 0):
            raise ValueError(f"symbol_rate_hz must be > 0, got {self.symbol_rate_hz}")
        object.__setattr__(self, "amplitudes", arr)
        object.__setattr__(self, "symbol_rate_hz", float(self.symbol_rate_hz))

    def __len__(self) -> int:
        return int(self.amplitudes.size)


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled real-valued signal with an explicit sample rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        arr = _frozen_array(self.samples, np.float64)
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("samples must all be finite")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise ValueError(f"sample_rate_hz must be finite and > 0, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class RngStream:
    """Handle for a reproducible random stream.

    The same (seed, stream_id) pair always yields the same sample sequence,
    independent of platform. Streams are backed by counter-based Philox
    keyed through numpy's SeedSequence, so distinct stream_ids on the same
    seed are statistically independent; parallel sweeps assign one
    stream_id per work unit.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) <= _UINT64_MAX):
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if int(self.stream_id) < 0:
            raise ValueError(f"stream_id must be >= 0, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))


# Maximal-length LFSR feedback taps (x^a + x^b + 1), one polynomial per order.
PRBS_TAPS: dict[int, tuple[int, int]] = {
    7: (7, 6),
    9: (9, 5),
    15: (15, 14),
    23: (23, 18),
}


def prbs_generate(order: int, seed: int, n_bits: int) -> BitStream:
    """Generate a pseudo-random binary sequence from a Fibonacci LFSR.

    The output is the feedback bit of each shift, so a full period of
    2**order - 1 bits visits every nonzero register state once.

    Raises ValueError for unsupported orders, negative n_bits, or an
    all-zero seed (the LFSR fixed point that never leaves state 0).
    """
    if order not in PRBS_TAPS:
        raise ValueError(f"unsupported PRBS order {order}; choose one of {sorted(PRBS_TAPS)}")
    if n_bits < 0:
        raise ValueError(f"n_bits must be >= 0, got {n_bits}")
    mask = (1 << order) - 1
    state = int(seed) & mask
    if state == 0:
        raise ValueError("all-zero LFSR seed is a stuck state; use any nonzero seed")
    a, b = PRBS_TAPS[order]
    out = np.empty(n_bits, dtype=np.uint8)
    for i in range(n_bits):
        fb = ((state >> (a - 1)) ^ (state >> (b - 1))) & 1
        state = ((state << 1) | fb) & mask
        out[i] = fb
    return BitStream(out)


def q_function(x):
    """Gaussian upper-tail probability Q(x).

    Accepts a scalar or array; finite inputs only. Evaluated through the
    complementary error function, Q(x) = erfc(x / sqrt(2)) / 2, which keeps
    relative accuracy far below 1e-6 over |x| <= 8.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("q_function requires finite input")
    out = 0.5 * special.erfc(arr / math.sqrt(2.0))
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def theoretical_ber_bpsk(ebn0_db):
    """Closed-form coherent BPSK bit error rate, Q(sqrt(2 * Eb/N0))."""
    arr = np.asarray(ebn0_db, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("ebn0_db must be finite")
    out = q_function(np.sqrt(2.0 * 10.0 ** (arr / 10.0)))
    if np.isscalar(ebn0_db) or arr.ndim == 0:
        return float(out)
    return out
