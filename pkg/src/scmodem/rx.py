"""Receiver chain: Costas-loop carrier recovery, matched filtering, symbol
decisions, and 180-degree phase-ambiguity resolution.

Loop gain design
----------------
The loop filter is proportional-plus-integrator, making the linearized loop
the standard second-order PLL. With phase detector gain Kd = 1 (unit signal
amplitude; the BPSK error e = If*Qf has slope d/d(phi) [sin(2*phi)/2] = 1 at
lock) and a per-sample NCO, the textbook design equations give, for a target
one-sided noise bandwidth Bn (normalized per sample as bt = Bn/fs) and
damping zeta:

    theta = bt / (zeta + 1/(4*zeta))
    kp = 4*zeta*theta / (1 + 2*zeta*theta + theta^2)
    ki = 4*theta^2   / (1 + 2*zeta*theta + theta^2)

Defaults target Bn*Tsym = 0.02 at zeta = 0.707, i.e. a loop bandwidth of 2%
of the symbol rate, which damps to ~0.707 and tracks small carrier frequency
offsets with zero steady-state phase error (type-II loop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._kernels import run_costas
from .core import BitStream, SymbolStream, Waveform
from .tx import fir_convolve

__all__ = [
    "CostasConfig",
    "CostasState",
    "DecisionConfig",
    "design_arm_filter",
    "design_loop_gains",
    "estimate_loop_damping",
    "costas_step",
    "costas_run",
    "matched_filter",
    "symbol_decide",
    "resolve_phase_ambiguity",
    "AmbiguityResult",
    "export_phase_trace",
]

_TWO_PI = 2.0 * math.pi


def design_arm_filter(cutoff_hz: float, sample_rate_hz: float, n_taps: int = 33) -> np.ndarray:
    """Hamming-windowed-sinc low-pass FIR for the Costas arms, DC gain 1.

    n_taps must be odd so the group delay (n_taps-1)/2 is an integer number
    of samples.
    """
    if not (0.0 < cutoff_hz < sample_rate_hz / 2.0):
        raise ValueError(f"cutoff {cutoff_hz} Hz must be in (0, fs/2) at fs={sample_rate_hz}")
    if n_taps < 3 or n_taps % 2 == 0:
        raise ValueError(f"n_taps must be an odd integer >= 3, got {n_taps}")
    m = np.arange(n_taps, dtype=np.float64) - (n_taps - 1) / 2.0
    fc = cutoff_hz / sample_rate_hz
    taps = 2.0 * fc * np.sinc(2.0 * fc * m) * np.hamming(n_taps)
    return taps / taps.sum()


def design_loop_gains(
    loop_bw_per_sample: float, zeta: float = math.sqrt(0.5)
) -> tuple[float, float]:
    """Per-sample (kp, ki) for a second-order loop (see module docstring).

    loop_bw_per_sample is the one-sided noise bandwidth normalized by the
    sample rate, Bn/fs. For a bandwidth stated relative to the symbol rate,
    divide by samples-per-symbol first.
    """
    if not (0.0 < loop_bw_per_sample < 0.5):
        raise ValueError(f"loop bandwidth per sample must be in (0, 0.5), got {loop_bw_per_sample}")
    if not (zeta > 0):
        raise ValueError(f"zeta must be > 0, got {zeta}")
    theta = loop_bw_per_sample / (zeta + 1.0 / (4.0 * zeta))
    denom = 1.0 + 2.0 * zeta * theta + theta * theta
    return 4.0 * zeta * theta / denom, 4.0 * theta * theta / denom


def estimate_loop_damping(kp: float, ki: float) -> float:
    """Invert design_loop_gains in the small-gain regime: zeta ~= kp / (2*sqrt(ki))."""
    if ki <= 0 or kp <= 0:
        raise ValueError("damping estimate requires kp > 0 and ki > 0")
    return kp / (2.0 * math.sqrt(ki))


@dataclass(frozen=True)
class CostasConfig:
    """Costas receiver settings: NCO nominal, arm filter, loop gains."""

    nominal_carrier_hz: float
    sample_rate_hz: float
    arm_filter_taps: np.ndarray
    loop_kp: float
    loop_ki: float
    settle_symbols: int = 500

    def __post_init__(self):
        taps = np.ascontiguousarray(self.arm_filter_taps, dtype=np.float64)
        if taps.size == 0 or taps.size % 2 == 0:
            raise ValueError("arm_filter_taps must be a nonempty odd-length FIR")
        taps.flags.writeable = False
        object.__setattr__(self, "arm_filter_taps", taps)
        if not (0.0 < self.nominal_carrier_hz < self.sample_rate_hz / 2.0):
            raise ValueError(
                f"nominal carrier {self.nominal_carrier_hz} Hz must be in (0, fs/2)"
            )
        if self.loop_kp < 0 or self.loop_ki < 0:
            raise ValueError("loop gains must be >= 0")
        if self.settle_symbols < 0:
            raise ValueError("settle_symbols must be >= 0")

    @property
    def phase_increment(self) -> float:
        return _TWO_PI * self.nominal_carrier_hz / self.sample_rate_hz

    @property
    def arm_delay_samples(self) -> int:
        return (self.arm_filter_taps.size - 1) // 2

    @classmethod
    def design(
        cls,
        nominal_carrier_hz: float,
        sample_rate_hz: float,
        symbol_rate_hz: float,
        *,
        loop_bw_norm: float = 0.02,
        zeta: float = math.sqrt(0.5),
        arm_taps: int = 33,
        arm_cutoff_hz: float | None = None,
        settle_symbols: int = 500,
    ) -> "CostasConfig":
        """Build a config from a target loop bandwidth (fraction of symbol rate).

        The arm low-pass defaults to a cutoff of 1.5x the symbol rate, wide
        enough to pass the data modulation while rejecting the double-
        frequency mixing product.
        """
        sps = sample_rate_hz / symbol_rate_hz
        kp, ki = design_loop_gains(loop_bw_norm / sps, zeta)
        cutoff = 1.5 * symbol_rate_hz if arm_cutoff_hz is None else arm_cutoff_hz
        taps = design_arm_filter(cutoff, sample_rate_hz, arm_taps)
        return cls(
            nominal_carrier_hz=nominal_carrier_hz,
            sample_rate_hz=sample_rate_hz,
            arm_filter_taps=taps,
            loop_kp=kp,
            loop_ki=ki,
            settle_symbols=settle_symbols,
        )


@dataclass(frozen=True)
class CostasState:
    """Receiver loop state: NCO phase, loop integrator, arm FIR delay lines."""

    nco_phase_rad: float
    integrator: float
    i_arm_delay_line: np.ndarray
    q_arm_delay_line: np.ndarray

    def __post_init__(self):
        if not (0.0 <= self.nco_phase_rad < _TWO_PI):
            raise ValueError(f"nco_phase_rad must lie in [0, 2*pi), got {self.nco_phase_rad}")
        for name in ("i_arm_delay_line", "q_arm_delay_line"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.i_arm_delay_line.size != self.q_arm_delay_line.size:
            raise ValueError("arm delay lines must have equal length")

    @classmethod
    def initial(cls, n_arm_taps: int, nco_phase_rad: float = 0.0) -> "CostasState":
        return cls(
            nco_phase_rad=nco_phase_rad % _TWO_PI,
            integrator=0.0,
            i_arm_delay_line=np.zeros(n_arm_taps),
            q_arm_delay_line=np.zeros(n_arm_taps),
        )


class CostasStepResult(NamedTuple):
    state: CostasState
    i_out: float
    q_out: float
    phase_error: float


def costas_step(state: CostasState, sample: float, cfg: CostasConfig) -> CostasStepResult:
    """Advance the loop by one sample.

    Mixes with 2*cos(theta) and -2*sin(theta) from the NCO, filters both
    arms, forms the error e = If * Qf, then updates integrator and NCO:
    integrator += ki*e; theta <- wrap(theta + 2*pi*f/fs + kp*e + integrator).
    """
    if not math.isfinite(sample):
        raise ValueError(f"non-finite input sample {sample!r}")
    if state.i_arm_delay_line.size != cfg.arm_filter_taps.size:
        raise ValueError("state delay-line length does not match arm filter length")
    i_dl = state.i_arm_delay_line.copy()
    q_dl = state.q_arm_delay_line.copy()
    i_out, q_out, e_out, _, phase, integ = run_costas(
        np.array([sample], dtype=np.float64),
        cfg.arm_filter_taps,
        cfg.loop_kp,
        cfg.loop_ki,
        cfg.phase_increment,
        state.nco_phase_rad,
        state.integrator,
        i_dl,
        q_dl,
    )
    new_state = CostasState(
        nco_phase_rad=phase,
        integrator=integ,
        i_arm_delay_line=i_dl,
        q_arm_delay_line=q_dl,
    )
    return CostasStepResult(new_state, float(i_out[0]), float(q_out[0]), float(e_out[0]))


def costas_run(
    passband: Waveform,
    cfg: CostasConfig,
    *,
    initial_phase_rad: float = 0.0,
    return_nco_phase: bool = False,
):
    """Fold the loop over a whole waveform from a zeroed state.

    Returns (i_baseband, phase_error_trace) as Waveforms at the input rate;
    the I arm is the recovered data path. With return_nco_phase=True a third
    array holds the NCO phase used at each sample, for lock diagnostics.
    """
    if len(passband) == 0:
        raise ValueError("costas_run requires a nonempty waveform")
    if passband.sample_rate_hz != cfg.sample_rate_hz:
        raise ValueError(
            f"waveform rate {passband.sample_rate_hz} != config rate {cfg.sample_rate_hz}"
        )
    n_taps = cfg.arm_filter_taps.size
    i_dl = np.zeros(n_taps)
    q_dl = np.zeros(n_taps)
    i_out, _, e_out, phase_out, _, _ = run_costas(
        passband.samples,
        cfg.arm_filter_taps,
        cfg.loop_kp,
        cfg.loop_ki,
        cfg.phase_increment,
        initial_phase_rad % _TWO_PI,
        0.0,
        i_dl,
        q_dl,
    )
    fs = passband.sample_rate_hz
    if return_nco_phase:
        return Waveform(i_out, fs), Waveform(e_out, fs), phase_out
    return Waveform(i_out, fs), Waveform(e_out, fs)


def matched_filter(baseband: Waveform, pulse_taps: np.ndarray) -> tuple[Waveform, float]:
    """Convolve with the time-reversed pulse, scaled by 1/(pulse energy).

    A clean isolated pulse then peaks at its symbol amplitude. Returns the
    filtered waveform and this filter's group delay (n_taps - 1)/2 samples;
    combined with the shaping filter the end-to-end delay is n_taps - 1.
    """
    taps = np.asarray(pulse_taps, dtype=np.float64)
    if taps.size == 0:
        raise ValueError("pulse_taps must be nonempty")
    energy = float(np.dot(taps, taps))
    if energy <= 0.0:
        raise ValueError("pulse taps have zero energy")
    h = taps[::-1] / energy
    return (
        Waveform(fir_convolve(baseband.samples, h), baseband.sample_rate_hz),
        (taps.size - 1) / 2.0,
    )


@dataclass(frozen=True)
class DecisionConfig:
    """Symbol sampler/slicer settings.

    sampling_offset is the total group-delay compensation in samples.
    levels is the nominal alphabet of the active line code; each sample maps
    to the nearest level, ties broken toward the larger level (threshold 0
    maps to +1 for polar). threshold shifts every decision boundary.
    """

    samples_per_symbol: int
    sampling_offset: int
    threshold: float = 0.0
    levels: tuple[float, ...] = (-1.0, 1.0)

    def __post_init__(self):
        if self.samples_per_symbol < 1:
            raise ValueError(f"samples_per_symbol must be >= 1, got {self.samples_per_symbol}")
        if self.sampling_offset < 0:
            raise ValueError(f"sampling_offset must be >= 0, got {self.sampling_offset}")
        if len(self.levels) < 2 or list(self.levels) != sorted(self.levels):
            raise ValueError("levels must be >= 2 values sorted ascending")


def symbol_decide(filtered: Waveform, cfg: DecisionConfig) -> SymbolStream:
    """Sample at offset + k*sps and slice to the nearest nominal level."""
    n = len(filtered)
    if cfg.sampling_offset >= n:
        raise ValueError(f"sampling_offset {cfg.sampling_offset} out of range for length {n}")
    points = filtered.samples[cfg.sampling_offset :: cfg.samples_per_symbol]
    levels = np.asarray(cfg.levels, dtype=np.float64)
    boundaries = (levels[:-1] + levels[1:]) / 2.0 + cfg.threshold
    idx = np.searchsorted(boundaries, points, side="right")
    return SymbolStream(levels[idx], filtered.sample_rate_hz / cfg.samples_per_symbol)


class AmbiguityResult(NamedTuple):
    payload: BitStream
    inverted: bool
    preamble_mismatches: int


def resolve_phase_ambiguity(decided: BitStream, preamble: BitStream) -> AmbiguityResult:
    """Vote the known preamble against the received head to fix the 180-degree
    Costas ambiguity.

    If strictly more than half the preamble bits mismatch, every bit is
    inverted and the flag is set. Exactly half is left uninverted (strict >)
    and shows up as a high mismatch count for the caller's diagnostics. The
    preamble is stripped from the returned payload.
    """
    n_pre = len(preamble)
    if n_pre < 8:
        raise ValueError(f"preamble must be at least 8 bits, got {n_pre}")
    if len(decided) < n_pre:
        raise ValueError(f"decided stream ({len(decided)} bits) shorter than preamble ({n_pre})")
    head = decided.bits[:n_pre]
    mismatches = int(np.count_nonzero(head != preamble.bits))
    payload = decided.bits[n_pre:]
    if mismatches * 2 > n_pre:
        return AmbiguityResult(BitStream(1 - payload), True, mismatches)
    return AmbiguityResult(BitStream(payload), False, mismatches)


def export_phase_trace(trace: Waveform, destination) -> None:
    """Write the phase-error trace as CSV: sample_index,phase_error_rad."""
    lines = ["sample_index,phase_error_rad\n"]
    lines.extend(f"{i},{v:.12g}\n" for i, v in enumerate(trace.samples))
    data = "".join(lines)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "w", encoding="ascii", newline="") as fh:
            fh.write(data)
