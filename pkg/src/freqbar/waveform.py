"""Phase-aligned half-sine row inputs.

Every row is driven with one positive half period of a sinusoid.  Rows run at
different frequencies, so each pulse is phase shifted until all of them peak
at the same instant, a quarter of the slowest period after t = 0.  The output
current sampled at that instant is then the weighted sum of the amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AmplitudeError, ScheduleError

DEFAULT_AMPLITUDE_CEILING = 0.66


def phase_shift(f, f_min):
    """Phase in radians that moves a pulse at ``f`` onto the ``f_min`` peak."""
    if not f_min > 0:
        raise ScheduleError(f"f_min must be positive, got {f_min!r}")
    if f < f_min:
        raise ScheduleError(f"pulse frequency {f!r} Hz is below schedule base {f_min!r} Hz")
    return (math.pi / 2) * (1.0 - f / f_min)


@dataclass(frozen=True)
class HalfSinePulse:
    amplitude: float
    frequency: float
    phase: float
    f_min: float

    @property
    def t_peak(self):
        return 1.0 / (4.0 * self.f_min)

    @property
    def support(self):
        half = 1.0 / (4.0 * self.frequency)
        return self.t_peak - half, self.t_peak + half


def pulse_value(p, t):
    """Pulse voltage at time ``t``; accepts scalars or numpy arrays.

    Inside the half-period window centred on the common peak this is
    ``V0*sin(2*pi*f*t + phase)``, evaluated as ``V0*cos(2*pi*f*(t - t_peak))``
    to avoid cancellation in the large phased argument.
    """
    t = np.asarray(t, dtype=float)
    lo, hi = p.support
    v = p.amplitude * np.cos(2.0 * math.pi * p.frequency * (t - p.t_peak))
    v = np.where((t >= lo) & (t <= hi), np.maximum(v, 0.0), 0.0)
    return float(v) if v.ndim == 0 else v


def eq3_value(p, t):
    """Literal ``V0*sin(2*pi*f*t + phase)`` without any gating."""
    return p.amplitude * np.sin(2.0 * math.pi * p.frequency * np.asarray(t, dtype=float) + p.phase)


@dataclass(frozen=True)
class PulseSchedule:
    pulses: tuple[HalfSinePulse, ...]
    f_min: float

    @property
    def t_peak(self):
        return 1.0 / (4.0 * self.f_min)

    @property
    def t_max(self):
        return 1.0 / self.f_min

    @property
    def f_max(self):
        return max(p.frequency for p in self.pulses)

    @property
    def amplitudes(self):
        return np.array([p.amplitude for p in self.pulses])

    @property
    def frequencies(self):
        return np.array([p.frequency for p in self.pulses])

    def __len__(self):
        return len(self.pulses)


def build_schedule(rows, amplitude_ceiling=DEFAULT_AMPLITUDE_CEILING, freq_range=None, f_min=None):
    """Build a schedule from ``(V0, f)`` pairs.

    ``f_min`` defaults to the slowest row; a program may pin it so that every
    MAC of a convolution shares one timing window.  ``freq_range`` is the
    device table's ``(lo, hi)`` frequency interval when it should be checked.
    """
    rows = [(float(v), float(f)) for v, f in rows]
    if not rows:
        raise ScheduleError("schedule needs at least one row")
    for j, (v0, f) in enumerate(rows):
        if not v0 >= 0:
            raise AmplitudeError(f"row {j}: amplitude {v0!r} V must be non-negative")
        if v0 > amplitude_ceiling:
            raise AmplitudeError(f"row {j}: amplitude {v0!r} V exceeds ceiling {amplitude_ceiling!r} V")
        if not f > 0:
            raise ScheduleError(f"row {j}: frequency must be positive")
        if freq_range is not None and not freq_range[0] <= f <= freq_range[1]:
            raise ScheduleError(f"row {j}: frequency {f!r} Hz outside device range {freq_range}")
    base = min(f for _, f in rows) if f_min is None else float(f_min)
    pulses = tuple(HalfSinePulse(v0, f, phase_shift(f, base), base) for v0, f in rows)
    return PulseSchedule(pulses, base)


def sample_times(schedule, timestep_divisor):
    """Uniform grid over [0, T_MAX/2] with dt = 1/(f_max*divisor)."""
    dt = 1.0 / (schedule.f_max * timestep_divisor)
    n = int(math.ceil(0.5 * schedule.t_max / dt - 1e-9)) + 1
    return np.arange(n) * dt, dt


def row_waveforms(schedule, t):
    """Unit-amplitude pulse shapes, one row per pulse (shape rows x len(t)).

    ``t`` must be sorted; each row is only evaluated inside its support.
    """
    out = np.zeros((len(schedule), len(t)))
    for j, p in enumerate(schedule.pulses):
        unit = HalfSinePulse(1.0, p.frequency, p.phase, p.f_min)
        lo, hi = np.searchsorted(t, unit.support[0], "left"), np.searchsorted(t, unit.support[1], "right")
        out[j, lo:hi] = pulse_value(unit, t[lo:hi])
    return out
