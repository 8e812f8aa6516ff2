"""Single-column MAC execution.

The column current is the Kirchhoff sum of every device current.  Because the
row pulses are phase aligned, its peak equals ``sum(G_j * V0_j)``; that value
is computed directly (analytic) and by sampling the summed waveform
(simulated).  Conductances are in mS and voltages in V, so currents are mA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import NoiseModel
from .errors import CrossbarError, DecodeError
from .waveform import row_waveforms, sample_times

DEFAULT_SAMPLE_CAP = 10**7


@dataclass(frozen=True)
class CrossbarConfig:
    rows: int = 9
    timestep_divisor: int = 64
    line_resistance: float = 0.0  # ohms per wire segment
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(0.0))
    column: int = 0
    sample_cap: int = DEFAULT_SAMPLE_CAP

    def __post_init__(self):
        if self.rows < 1:
            raise CrossbarError("crossbar needs at least one row")
        if self.timestep_divisor < 16:
            raise CrossbarError(f"timestep_divisor must be >= 16, got {self.timestep_divisor}")
        if not self.line_resistance >= 0:
            raise CrossbarError("line_resistance must be >= 0")

    @property
    def is_ideal(self):
        return self.line_resistance == 0 and self.noise.is_ideal


@dataclass
class SimResult:
    i_peak_analytic: float
    i_peak_simulated: float
    t_peak: float
    dt: float
    t: np.ndarray | None = None
    current: np.ndarray | None = None
    row_voltages: np.ndarray | None = None

    def csv_line(self):
        return f"{self.i_peak_analytic!r},{self.i_peak_simulated!r},{self.t_peak!r}"


SIM_RESULT_HEADER = "i_peak_analytic_ma,i_peak_sim_ma,t_peak_s"


def _check(program, schedule, config):
    if len(schedule) != len(program):
        raise CrossbarError(f"schedule has {len(schedule)} rows, program has {len(program)} cells")
    if len(program) > config.rows:
        raise CrossbarError(f"program needs {len(program)} rows, crossbar has {config.rows}")


def segment_counts(n, column=0):
    """Wire segments between driver, cell and sense node for rows 0..n-1."""
    return np.arange(n) + 1 + column


def effective_conductances(program, config, rng=None):
    """Per-device conductance for one MAC, in mS.

    Noise is one multiplicative draw per device; line resistance is a lumped
    series term ``n_seg * r`` per device.
    """
    g = program.conductances.copy()
    if not config.noise.is_ideal:
        rng = config.noise.rng() if rng is None else rng
        g = g * (1.0 + config.noise.relative_sigma * rng.standard_normal(g.shape))
    if config.line_resistance > 0:
        r = segment_counts(len(g), config.column) * config.line_resistance
        g = 1e3 / (1e3 / g + r)
    return g


def mac_analytic(program, schedule, config=None, rng=None, g_eff=None):
    """Peak column current in mA: ``sum(G_eff_j * V0_j)``."""
    config = CrossbarConfig() if config is None else config
    _check(program, schedule, config)
    if g_eff is None:
        g_eff = effective_conductances(program, config, rng)
    return float(np.dot(g_eff, schedule.amplitudes))


def mac_simulate(program, schedule, config=None, rng=None, keep_waveform=False):
    """Sample the summed column current over the MAC window and find its peak."""
    config = CrossbarConfig() if config is None else config
    _check(program, schedule, config)
    n_samples = 0.5 * schedule.t_max * schedule.f_max * config.timestep_divisor
    if n_samples > config.sample_cap:
        raise CrossbarError(
            f"waveform needs ~{n_samples:.3g} samples (cap {config.sample_cap}); "
            "f_max/f_min ratio too large, use analytic mode"
        )
    g_eff = effective_conductances(program, config, rng)
    t, dt = sample_times(schedule, config.timestep_divisor)
    shapes = row_waveforms(schedule, t)
    volts = shapes * schedule.amplitudes[:, None]
    current = g_eff @ volts
    k = int(np.argmax(current))
    return SimResult(
        i_peak_analytic=float(np.dot(g_eff, schedule.amplitudes)),
        i_peak_simulated=float(current[k]),
        t_peak=float(t[k]),
        dt=dt,
        t=t if keep_waveform else None,
        current=current if keep_waveform else None,
        row_voltages=volts if keep_waveform else None,
    )


def error_bound(dt, f_max):
    """Relative peak error bound from sampling the aligned peak on a grid."""
    return 2.0 * (math.pi * dt * f_max) ** 2


def decode_dots(currents, program, tol=0.5):
    """Vectorised ``decode_dot``; returns an int64 array."""
    law = program.amplitude_law
    wsum = int(program.weights.sum())
    raw = (np.asarray(currents, dtype=float) / program.g_unit - wsum * law.v_lo) / law.volts_per_level
    if np.any(raw < -tol):
        raise DecodeError(f"decoded dot product {float(raw.min()):.3f} is negative beyond tolerance")
    return np.maximum(np.floor(raw + 0.5), 0).astype(np.int64)


def decode_dot(i_peak, program, tol=0.5):
    """Integer dot product ``sum(w_j * p_j)`` recovered from a peak current."""
    return int(decode_dots(np.array([i_peak]), program, tol)[0])


def waveform_csv(result):
    """Rows ``t_s,v_row0..v_rowN,i_out_ma`` for a result kept with its waveform."""
    if result.t is None:
        raise CrossbarError("result was computed without keep_waveform=True")
    n = result.row_voltages.shape[0]
    head = "t_s," + ",".join(f"v_row{j}" for j in range(n)) + ",i_out_ma"
    lines = [head]
    for k, tk in enumerate(result.t):
        vs = ",".join(f"{v:.9g}" for v in result.row_voltages[:, k])
        lines.append(f"{tk:.9g},{vs},{result.current[k]:.9g}")
    return "\n".join(lines) + "\n"
