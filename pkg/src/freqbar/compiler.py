"""Lower an integer kernel onto one crossbar column.

Weight ``w`` is realised as conductance ``w * g_unit`` where ``g_unit`` is the
ON conductance at the table's fastest frequency.  The device cannot store
that value directly, so the compiler picks the drive frequency whose ON-branch
conductance matches.  The kernel's scale denominator is never programmed; it
is applied when the column current is decoded.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .device import DeviceState, conductance_at, frequency_for
from .errors import CompileError, FormatError, RangeError
from .waveform import DEFAULT_AMPLITUDE_CEILING, build_schedule, phase_shift

PROGRAM_MAGIC = "# freqbar-program v1"
PROGRAM_COLUMNS = "index,weight,state,freq_hz,g_ms,phase_rad"

# conductance match required for opt-in OFF-branch candidates
OFF_MATCH_RTOL = 0.005


class Policy(enum.Enum):
    SPEED = "speed"
    ENERGY = "energy"


@dataclass(frozen=True)
class Kernel:
    weights: tuple[tuple[int, ...], ...]
    scale_den: int = 1

    def __post_init__(self):
        w = tuple(tuple(int(x) for x in row) for row in self.weights)
        if not w or not w[0] or any(len(r) != len(w[0]) for r in w):
            raise CompileError("kernel must be a non-empty rectangular matrix")
        if int(self.scale_den) < 1:
            raise CompileError(f"scale_den must be a positive integer, got {self.scale_den!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "scale_den", int(self.scale_den))

    @property
    def rows(self):
        return len(self.weights)

    @property
    def cols(self):
        return len(self.weights[0])

    @property
    def flat(self):
        return [x for row in self.weights for x in row]

    def as_array(self):
        return np.array(self.weights, dtype=np.int64)


GAUSSIAN_3X3 = Kernel(((1, 2, 1), (2, 4, 2), (1, 2, 1)), scale_den=16)


@dataclass(frozen=True)
class AmplitudeLaw:
    """Affine pixel -> pulse amplitude map, ``V0(p) = v_lo + (v_hi - v_lo) p / pixel_max``."""

    v_lo: float = 0.15
    v_hi: float = 0.66
    pixel_max: int = 255
    ceiling: float = DEFAULT_AMPLITUDE_CEILING

    def __post_init__(self):
        if not 0 < self.v_lo < self.v_hi <= self.ceiling:
            raise CompileError(
                f"amplitude law needs 0 < v_lo < v_hi <= ceiling, got "
                f"v_lo={self.v_lo!r} v_hi={self.v_hi!r} ceiling={self.ceiling!r}"
            )
        if int(self.pixel_max) < 1:
            raise CompileError("pixel_max must be positive")

    @property
    def volts_per_level(self):
        return (self.v_hi - self.v_lo) / self.pixel_max

    def __call__(self, pixels):
        p = np.asarray(pixels, dtype=float)
        return self.v_lo + (self.v_hi - self.v_lo) * p / self.pixel_max


@dataclass(frozen=True)
class Cell:
    index: int
    weight: int
    state: DeviceState
    frequency: float
    conductance: float
    phase: float


@dataclass(frozen=True)
class CrossbarProgram:
    cells: tuple[Cell, ...]
    g_unit: float
    f_min: float
    amplitude_law: AmplitudeLaw = field(default_factory=AmplitudeLaw)
    policy: Policy = Policy.SPEED
    shape: tuple[int, int] = (0, 0)
    scale_den: int = 1

    def __len__(self):
        return len(self.cells)

    @property
    def weights(self):
        return np.array([c.weight for c in self.cells], dtype=np.int64)

    @property
    def conductances(self):
        return np.array([c.conductance for c in self.cells])

    @property
    def frequencies(self):
        return np.array([c.frequency for c in self.cells])

    @property
    def f_max(self):
        return max(c.frequency for c in self.cells)

    def frequency_matrix(self):
        return self.frequencies.reshape(self.shape)

    def conductance_matrix(self):
        return self.conductances.reshape(self.shape)


def representable_weights(table):
    g_unit = conductance_at(table, DeviceState.ON, table.f_max)
    top = max(table.branch(DeviceState.ON))
    return list(range(1, int(math.floor(top / g_unit * (1 + 1e-12))) + 1))


def _candidates(table, target, allow_off):
    out = [(DeviceState.ON, frequency_for(table, DeviceState.ON, target))]
    if allow_off:
        for f, g_off, _ in table.entries:
            if abs(g_off - target) <= OFF_MATCH_RTOL * target:
                out.append((DeviceState.OFF, f))
    return out


def _choose(table, candidates, policy, v0):
    if policy is Policy.SPEED:
        return max(candidates, key=lambda c: c[1])
    return min(
        candidates,
        key=lambda c: (analysis.pulse_energy_uj(conductance_at(table, c[0], c[1]), v0, c[1]), -c[1]),
    )


def compile_kernel(kernel, table, law=None, policy=Policy.SPEED, allow_off=False, max_rows=None):
    """Assign state, frequency, conductance and phase to every kernel cell."""
    law = AmplitudeLaw() if law is None else law
    policy = Policy(policy)
    weights = kernel.flat
    if max_rows is not None and len(weights) > max_rows:
        raise CompileError(f"kernel needs {len(weights)} rows but the crossbar has {max_rows}")
    bad = [w for w in weights if w < 1]
    if bad:
        raise CompileError(f"zero/negative weights are unsupported in v1: {sorted(set(bad))}")

    g_unit = conductance_at(table, DeviceState.ON, table.f_max)
    allowed = representable_weights(table)
    too_big = sorted({w for w in weights if w > allowed[-1]})
    if too_big:
        raise RangeError(
            f"weights {too_big} not representable; representable integer weights are "
            f"{allowed[0]}..{allowed[-1]}",
            interval=(allowed[0], allowed[-1]),
            module="compiler",
        )

    choice = {}
    for w in sorted(set(weights)):
        cands = _candidates(table, w * g_unit, allow_off)
        state, f = _choose(table, cands, policy, law.v_hi)
        choice[w] = (state, f, conductance_at(table, state, f))

    f_min = min(choice[w][1] for w in weights)
    cells = tuple(
        Cell(j, w, choice[w][0], choice[w][1], choice[w][2], phase_shift(choice[w][1], f_min))
        for j, w in enumerate(weights)
    )
    return CrossbarProgram(
        cells=cells,
        g_unit=g_unit,
        f_min=f_min,
        amplitude_law=law,
        policy=policy,
        shape=(kernel.rows, kernel.cols),
        scale_den=kernel.scale_den,
    )


def encode_inputs(program, patch):
    """Pulse schedule for one MAC over a flattened pixel patch."""
    patch = np.asarray(patch).ravel()
    if patch.size != len(program):
        raise CompileError(f"patch has {patch.size} pixels, program has {len(program)} cells")
    law = program.amplitude_law
    if patch.size and (patch.min() < 0 or patch.max() > law.pixel_max):
        raise CompileError(f"pixel values must lie in [0, {law.pixel_max}]")
    amps = law(patch)
    return build_schedule(
        [(float(v), c.frequency) for v, c in zip(amps, program.cells)],
        amplitude_ceiling=law.ceiling,
        f_min=program.f_min,
    )


@dataclass(frozen=True)
class QuantizationReport:
    errors: tuple[float, ...]
    max_error: float
    rms_error: float


def quantization_report(kernel, program):
    """Relative conductance error of each cell against ``w * g_unit``."""
    errs = tuple(abs(c.conductance - c.weight * program.g_unit) / (c.weight * program.g_unit) for c in program.cells)
    if not errs:
        return QuantizationReport((), 0.0, 0.0)
    return QuantizationReport(errs, max(errs), math.sqrt(sum(e * e for e in errs) / len(errs)))


# -- file formats -----------------------------------------------------------


def parse_kernel(text):
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 3:
        raise FormatError("kernel line 1 must be 'rows cols scale_den'")
    try:
        rows, cols, den = (int(x) for x in lines[0])
        body = [[int(x) for x in ln] for ln in lines[1:]]
    except ValueError as exc:
        raise FormatError(f"kernel file: {exc}") from None
    if len(body) != rows or any(len(r) != cols for r in body):
        raise FormatError(f"kernel body does not match declared shape {rows}x{cols}")
    return Kernel(tuple(map(tuple, body)), scale_den=den)


def format_kernel(kernel):
    out = [f"{kernel.rows} {kernel.cols} {kernel.scale_den}"]
    out += [" ".join(str(x) for x in row) for row in kernel.weights]
    return "\n".join(out) + "\n"


def read_kernel(path):
    return parse_kernel(Path(path).read_text())


def format_program(program):
    out = [PROGRAM_MAGIC, PROGRAM_COLUMNS]
    for c in program.cells:
        out.append(f"{c.index},{c.weight},{c.state.value},{c.frequency!r},{c.conductance!r},{c.phase!r}")
    law = program.amplitude_law
    out += [
        f"g_unit_ms={program.g_unit!r}",
        f"f_min_hz={program.f_min!r}",
        f"policy={program.policy.value}",
        f"v_lo={law.v_lo!r}",
        f"v_hi={law.v_hi!r}",
        f"pixel_max={law.pixel_max}",
        f"ceiling={law.ceiling!r}",
        f"shape={program.shape[0]}x{program.shape[1]}",
        f"scale_den={program.scale_den}",
    ]
    return "\n".join(out) + "\n"


def parse_program(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != PROGRAM_MAGIC:
        raise FormatError(f"program file must start with '{PROGRAM_MAGIC}'")
    cells, meta = [], {}
    for n, ln in enumerate(lines[1:], start=2):
        ln = ln.strip()
        if not ln or ln == PROGRAM_COLUMNS:
            continue
        if "=" in ln:
            k, v = ln.split("=", 1)
            meta[k.strip()] = v.strip()
            continue
        parts = ln.split(",")
        if len(parts) != 6:
            raise FormatError(f"program line {n}: expected 6 fields")
        try:
            cells.append(
                Cell(int(parts[0]), int(parts[1]), DeviceState(parts[2]), float(parts[3]), float(parts[4]), float(parts[5]))
            )
        except ValueError as exc:
            raise FormatError(f"program line {n}: {exc}") from None
    try:
        law = AmplitudeLaw(
            float(meta["v_lo"]),
            float(meta["v_hi"]),
            int(meta.get("pixel_max", 255)),
            float(meta.get("ceiling", DEFAULT_AMPLITUDE_CEILING)),
        )
        shape = tuple(int(x) for x in meta.get("shape", f"1x{len(cells)}").split("x"))
        return CrossbarProgram(
            cells=tuple(cells),
            g_unit=float(meta["g_unit_ms"]),
            f_min=float(meta["f_min_hz"]),
            amplitude_law=law,
            policy=Policy(meta["policy"]),
            shape=shape,
            scale_den=int(meta.get("scale_den", 1)),
        )
    except KeyError as exc:
        raise FormatError(f"program file missing trailer {exc.args[0]}") from None


def read_program(path):
    return parse_program(Path(path).read_text())


def write_program(program, path):
    Path(path).write_text(format_program(program))
