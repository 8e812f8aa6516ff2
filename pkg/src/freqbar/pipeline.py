"""Image convolution through the crossbar column.

Each output pixel is one MAC: the k x k patch drives k*k rows, the column peak
current is decoded back to the integer dot product, and the kernel's scale
denominator is applied digitally (round half up, clip to 8 bits).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .compiler import encode_inputs
from .crossbar import CrossbarConfig, decode_dot, decode_dots, effective_conductances, mac_analytic, mac_simulate
from .errors import DecodeError, FormatError, PipelineError
from .waveform import build_schedule, row_waveforms, sample_times

# purpose tags for seed mixing: (seed, tag, channel, y, x)
NOISE_TAG = 1
READ_TAG = 2

_SIM_CHUNK_BYTES = 64 * 2**20


class Mode(enum.Enum):
    ANALYTIC = "analytic"
    SIMULATED = "sim"


class OutputScale(enum.Enum):
    KERNEL_DEN = "kernel_den"
    RAW = "raw"


class Activation(enum.Enum):
    NONE = "none"
    SIGMOID = "sigmoid"


@dataclass(frozen=True, eq=False)
class Image:
    """8-bit image held as a (height, width, channels) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.pixels)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3 or a.shape[2] not in (1, 3) or a.shape[0] < 1 or a.shape[1] < 1:
            raise PipelineError(f"image must be HxW with 1 or 3 channels, got shape {a.shape}")
        if a.dtype != np.uint8:
            if a.size and (a.min() < 0 or a.max() > 255):
                raise PipelineError("pixel values must lie in [0, 255]")
            a = a.astype(np.uint8)
        object.__setattr__(self, "pixels", a)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def channels(self):
        return self.pixels.shape[2]

    def __eq__(self, other):
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)


@dataclass
class ConvolutionJob:
    image: Image
    program: object
    stride: int = 1
    mode: Mode = Mode.ANALYTIC
    output_scale: OutputScale = OutputScale.KERNEL_DEN
    config: CrossbarConfig = field(default_factory=CrossbarConfig)


@dataclass
class ConvolutionResult:
    image: Image
    dots: np.ndarray  # (H', W', C) integer dot products
    currents: np.ndarray  # (H', W', C) peak currents in mA used for decoding
    macs_per_channel: int


def output_shape(h, w, k_rows, k_cols, stride=1):
    if k_rows > h or k_cols > w:
        raise PipelineError(f"kernel {k_rows}x{k_cols} larger than image {h}x{w}")
    if stride < 1:
        raise PipelineError("stride must be positive")
    return (h - k_rows) // stride + 1, (w - k_cols) // stride + 1


def _patches(channel, shape, stride):
    win = sliding_window_view(channel, shape)[::stride, ::stride]
    return win.reshape(win.shape[0], win.shape[1], -1)


def scale_dots(dots, den):
    """Divide non-negative integers by ``den``, rounding half up."""
    return (2 * np.asarray(dots, dtype=np.int64) + den) // (2 * den)


def _finish(dots, den, output_scale):
    if output_scale is OutputScale.KERNEL_DEN:
        dots = scale_dots(dots, den)
    return Image(np.clip(dots, 0, 255).astype(np.uint8))


def _g_eff_grid(program, config, ch, ys, xs):
    """Per-MAC conductances, shape (len(ys), len(xs), cells)."""
    n = len(program)
    if config.noise.is_ideal:
        g = effective_conductances(program, config)
        return np.broadcast_to(g, (len(ys), len(xs), n))
    out = np.empty((len(ys), len(xs), n))
    for a, y in enumerate(ys):
        for b, x in enumerate(xs):
            out[a, b] = effective_conductances(program, config, config.noise.rng(READ_TAG, ch, y, x))
    return out


def _simulated_peaks(program, config, weighted):
    """Peak of ``sum_j weighted_j * shape_j(t)`` for a stack of MACs."""
    unit = build_schedule(
        [(0.0, c.frequency) for c in program.cells],
        amplitude_ceiling=program.amplitude_law.ceiling,
        f_min=program.f_min,
    )
    t, _ = sample_times(unit, config.timestep_divisor)
    if len(t) > config.sample_cap:
        raise PipelineError(f"waveform needs {len(t)} samples (cap {config.sample_cap}); use analytic mode")
    shapes = row_waveforms(unit, t)
    flat = weighted.reshape(-1, weighted.shape[-1])
    peaks = np.empty(flat.shape[0])
    step = max(1, _SIM_CHUNK_BYTES // (8 * len(t)))
    for s in range(0, flat.shape[0], step):
        peaks[s : s + step] = (flat[s : s + step] @ shapes).max(axis=1)
    return peaks.reshape(weighted.shape[:-1])


def convolve_detailed(job, rows=None):
    """Run the convolution; ``rows`` restricts work to selected output rows."""
    prog, cfg, img = job.program, job.config, job.image
    mode, scale = Mode(job.mode), OutputScale(job.output_scale)
    k_rows, k_cols = prog.shape
    if k_rows * k_cols != len(prog):
        raise PipelineError("program shape does not match its cell count")
    if len(prog) > cfg.rows:
        raise PipelineError(f"kernel needs {len(prog)} rows, crossbar has {cfg.rows}")
    ho, wo = output_shape(img.height, img.width, k_rows, k_cols, job.stride)
    ys = np.arange(ho) if rows is None else np.asarray(rows)
    xs = np.arange(wo)

    dots = np.zeros((len(ys), wo, img.channels), dtype=np.int64)
    currents = np.zeros((len(ys), wo, img.channels))
    for ch in range(img.channels):
        patches = _patches(img.pixels[:, :, ch], (k_rows, k_cols), job.stride)[ys]
        amps = prog.amplitude_law(patches)
        g = _g_eff_grid(prog, cfg, ch, ys, xs)
        if mode is Mode.ANALYTIC:
            cur = np.einsum("yxj,yxj->yx", g, amps)
        else:
            cur = _simulated_peaks(prog, cfg, g * amps)
        currents[:, :, ch] = cur
        try:
            dots[:, :, ch] = decode_dots(cur, prog)
        except DecodeError:
            bad = np.argwhere(decode_check(cur, prog))[0]
            raise DecodeError(
                f"decode failed at output pixel (row={ys[bad[0]]}, col={bad[1]}, channel={ch})"
            ) from None
    return ConvolutionResult(_finish(dots, prog.scale_den, scale), dots, currents, ho * wo)


def decode_check(currents, program, tol=0.5):
    law = program.amplitude_law
    raw = (currents / program.g_unit - int(program.weights.sum()) * law.v_lo) / law.volts_per_level
    return raw < -tol


def convolve(job):
    return convolve_detailed(job).image


def convolve_per_mac(job):
    """Reference execution path: one encode/MAC/decode call per output pixel."""
    prog, cfg, img = job.program, job.config, job.image
    k_rows, k_cols = prog.shape
    ho, wo = output_shape(img.height, img.width, k_rows, k_cols, job.stride)
    dots = np.zeros((ho, wo, img.channels), dtype=np.int64)
    for ch in range(img.channels):
        patches = _patches(img.pixels[:, :, ch], (k_rows, k_cols), job.stride)
        for y in range(ho):
            for x in range(wo):
                sched = encode_inputs(prog, patches[y, x])
                rng = None if cfg.noise.is_ideal else cfg.noise.rng(READ_TAG, ch, y, x)
                if Mode(job.mode) is Mode.ANALYTIC:
                    i = mac_analytic(prog, sched, cfg, rng)
                else:
                    i = mac_simulate(prog, sched, cfg, rng).i_peak_simulated
                dots[y, x, ch] = decode_dot(i, prog)
    return _finish(dots, prog.scale_den, OutputScale(job.output_scale))


def reference_convolve(image, kernel, stride=1, output_scale=OutputScale.KERNEL_DEN):
    """Integer software convolution with the same stride/rounding rules."""
    w = kernel.as_array()
    output_shape(image.height, image.width, *w.shape, stride)
    out = []
    for ch in range(image.channels):
        win = sliding_window_view(image.pixels[:, :, ch].astype(np.int64), w.shape)[::stride, ::stride]
        out.append(np.einsum("yxij,ij->yx", win, w))
    return _finish(np.stack(out, axis=-1), kernel.scale_den, OutputScale(output_scale))


def add_noise(image, alpha=0.5, seed=0):
    """Blend uniform 8-bit noise into every pixel: ``(1-alpha) p + alpha u``."""
    if not 0.0 <= alpha <= 1.0:
        raise PipelineError(f"alpha must lie in [0, 1], got {alpha!r}")
    rng = np.random.default_rng([int(seed) & (2**64 - 1), NOISE_TAG])
    u = rng.integers(0, 256, size=image.pixels.shape)
    mixed = (1.0 - alpha) * image.pixels + alpha * u
    return Image(np.clip(np.floor(mixed + 0.5), 0, 255).astype(np.uint8))


def apply_activation(values, kind=Activation.NONE):
    v = np.asarray(values, dtype=float)
    if Activation(kind) is Activation.NONE:
        return v
    # split by sign so exp never overflows
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def crossing_scene(height=128, width=128):
    """Deterministic RGB street scene: sky, buildings, zebra crossing."""
    y, x = np.mgrid[0:height, 0:width]
    img = np.zeros((height, width, 3), dtype=float)
    horizon = height * 0.45
    sky = y < horizon
    img[sky] = np.stack([90 + 100 * y[sky] / horizon, 140 + 80 * y[sky] / horizon, np.full(sky.sum(), 235.0)], -1)
    for i, x0 in enumerate(range(0, width, max(width // 6, 1))):
        top = horizon * (0.25 + 0.5 * ((i * 37) % 11) / 11)
        m = (x >= x0 + 2) & (x < x0 + width // 7) & (y >= top) & (y < horizon)
        img[m] = (70 + 15 * i % 60, 60 + 20 * i % 70, 80 + 25 * i % 90)
    road = ~sky
    img[road] = 55
    stripe = road & (((x + (y - horizon) * 0.3) // max(width // 16, 1)) % 2 == 0) & (y > height * 0.6) & (y < height * 0.9)
    img[stripe] = 235
    return Image(np.clip(img, 0, 255).astype(np.uint8))


# -- binary PNM --------------------------------------------------------------


def _tokens(data, count, pos):
    out = []
    while len(out) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PNM header")
        out.append(data[start:pos])
    return out, pos


def decode_pnm(data):
    (magic, w, h, maxval), pos = _tokens(data, 4, 0)
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported PNM magic {magic!r}; expected P5 or P6")
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte before raster
    c = 1 if magic == b"P5" else 3
    n = w * h * c
    raster = data[pos : pos + n]
    if len(raster) != n:
        raise FormatError(f"PNM raster has {len(raster)} bytes, expected {n}")
    return Image(np.frombuffer(raster, dtype=np.uint8).reshape(h, w, c).copy())


def encode_pnm(image):
    magic = b"P5" if image.channels == 1 else b"P6"
    head = magic + f"\n{image.width} {image.height}\n255\n".encode()
    return head + np.ascontiguousarray(image.pixels).tobytes()


def read_pnm(path):
    return decode_pnm(Path(path).read_bytes())


def write_pnm(image, path):
    Path(path).write_bytes(encode_pnm(image))
