"""Frequency-modulated analog weights on a binary-state memristor crossbar.

Kernel weights are realised by picking, for each device, the drive frequency
whose measured ON-state conductance is proportional to the weight.  Rows are
driven with phase-aligned half-sine pulses so the column current peaks at the
multiply-and-accumulate value.
"""

from .device import (
    TABLE_I,
    ConductanceTable,
    DeviceState,
    NoiseModel,
    conductance_at,
    default_table,
    frequency_for,
    load_table,
    sample_conductance,
)
from .waveform import HalfSinePulse, PulseSchedule, build_schedule, phase_shift, pulse_value
from .compiler import (
    AmplitudeLaw,
    CrossbarProgram,
    Kernel,
    Policy,
    compile_kernel,
    encode_inputs,
    quantization_report,
)
from .crossbar import CrossbarConfig, SimResult, decode_dot, mac_analytic, mac_simulate
from .pipeline import Image, Mode, OutputScale, add_noise, apply_activation, convolve, reference_convolve
from .analysis import CostReport, compare_baseline, latency, mac_energy, mac_power

__version__ = "0.1.0"
