"""Per-sample feedback loops that cannot be vectorized.

The Costas update is a sample-rate recursion (NCO -> mixers -> arm FIRs ->
loop filter -> NCO), so it is written as a plain loop and JIT-compiled with
numba when available. Set SCMODEM_NO_NUMBA=1 to force the interpreted path;
both paths execute the identical function body.
"""

from __future__ import annotations

import math
import os

import numpy as np

_TWO_PI = 2.0 * math.pi


def _costas_kernel_py(
    samples,
    taps,
    kp,
    ki,
    phase_inc,
    phase0,
    integrator0,
    i_dl,
    q_dl,
    i_out,
    q_out,
    e_out,
    phase_out,
):
    """Run the Costas recursion over `samples`, mutating the delay lines.

    phase_out[k] records the NCO phase used to mix sample k (pre-update).
    Returns the final (nco_phase, integrator).
    """
    n_taps = taps.size
    phase = phase0
    integrator = integrator0
    for k in range(samples.size):
        x = samples[k]
        mix_i = x * 2.0 * math.cos(phase)
        mix_q = x * -2.0 * math.sin(phase)
        for j in range(n_taps - 1, 0, -1):
            i_dl[j] = i_dl[j - 1]
            q_dl[j] = q_dl[j - 1]
        i_dl[0] = mix_i
        q_dl[0] = mix_q
        fi = 0.0
        fq = 0.0
        for j in range(n_taps):
            fi += taps[j] * i_dl[j]
            fq += taps[j] * q_dl[j]
        err = fi * fq
        phase_out[k] = phase
        integrator += ki * err
        phase = math.fmod(phase + phase_inc + kp * err + integrator, _TWO_PI)
        if phase < 0.0:
            phase += _TWO_PI
        i_out[k] = fi
        q_out[k] = fq
        e_out[k] = err
    return phase, integrator


if os.environ.get("SCMODEM_NO_NUMBA"):
    costas_kernel = _costas_kernel_py
else:
    try:
        import numba

        costas_kernel = numba.njit(cache=True, nogil=True)(_costas_kernel_py)
    except ImportError:  # pragma: no cover - numba is a declared dependency
        costas_kernel = _costas_kernel_py


def run_costas(samples, taps, kp, ki, phase_inc, phase0, integrator0, i_dl, q_dl):
    """Allocate outputs and run the kernel. Delay lines are mutated in place."""
    n = samples.size
    i_out = np.empty(n, dtype=np.float64)
    q_out = np.empty(n, dtype=np.float64)
    e_out = np.empty(n, dtype=np.float64)
    phase_out = np.empty(n, dtype=np.float64)
    phase, integrator = costas_kernel(
        np.ascontiguousarray(samples, dtype=np.float64),
        np.ascontiguousarray(taps, dtype=np.float64),
        float(kp),
        float(ki),
        float(phase_inc),
        float(phase0),
        float(integrator0),
        i_dl,
        q_dl,
        i_out,
        q_out,
        e_out,
        phase_out,
    )
    return i_out, q_out, e_out, phase_out, phase, integrator
