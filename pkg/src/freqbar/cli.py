"""Command-line front end: ``freqbar {compile,noise,convolve,simulate,report}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, compiler, crossbar, device, pipeline
from .errors import FreqbarError

DEFAULT_ROW = 108


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"error: cli: {message}\n")


def _add_common(p, *names):
    opts = {
        "kernel": lambda: p.add_argument("--kernel", type=Path, help="kernel file"),
        "table": lambda: p.add_argument("--table", type=Path, help="conductance table CSV (default: built-in)"),
        "program": lambda: p.add_argument("--program", type=Path, help="compiled program file"),
        "image": lambda: p.add_argument("--image", type=Path, required=True, help="PGM/PPM input"),
        "out": lambda: p.add_argument("--out", type=Path, help="output path (default: stdout for text)"),
        "policy": lambda: p.add_argument("--policy", choices=["speed", "energy"], default="speed"),
        "seed": lambda: p.add_argument("--seed", type=int, default=0),
        "sigma": lambda: p.add_argument("--sigma", type=float, default=0.0, help="relative read noise"),
        "line_res": lambda: p.add_argument("--line-res", type=float, default=0.0, help="ohms per wire segment"),
        "mode": lambda: p.add_argument("--mode", choices=["analytic", "sim"], default="analytic"),
    }
    for n in names:
        opts[n]()


def build_parser():
    ap = _Parser(prog="freqbar", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile", help="kernel file -> program file")
    _add_common(p, "kernel", "table", "out", "policy")
    p.add_argument("--allow-off", action="store_true", help="also consider OFF-branch grid points")

    p = sub.add_parser("noise", help="blend uniform noise into an image")
    _add_common(p, "image", "out", "seed")
    p.add_argument("--alpha", type=float, default=0.5)

    p = sub.add_parser("convolve", help="filter an image through the crossbar")
    _add_common(p, "image", "out", "program", "kernel", "table", "policy", "seed", "sigma", "line_res", "mode")
    p.add_argument("--row", type=int, default=None, help=f"output row for the peak CSV (default {DEFAULT_ROW})")
    p.add_argument("--peaks", type=Path, help="peak-current CSV path (default: <out>.row<R>.csv)")

    p = sub.add_parser("simulate", help="time-stepped MAC for one patch")
    _add_common(p, "program", "kernel", "table", "policy", "out", "seed", "sigma", "line_res")
    p.add_argument("--patch", default=None, help="comma-separated pixels (default: all 255)")
    p.add_argument("--dump-waveform", type=Path, help="write t_s,v_row*,i_out_ma CSV")

    p = sub.add_parser("report", help="power/area/latency cost report")
    _add_common(p, "program", "kernel", "table", "policy", "out")
    p.add_argument("--nbits", type=int, default=8)
    p.add_argument("--readout-ns", type=float, default=500.0)
    p.add_argument("--v0", type=float, default=None, help="row amplitude in V (default: law v_hi)")
    return ap


def _table(args):
    return device.load_table(args.table) if getattr(args, "table", None) else device.default_table()


def _program(args):
    if getattr(args, "program", None):
        return compiler.read_program(args.program)
    kernel = compiler.read_kernel(args.kernel) if args.kernel else compiler.GAUSSIAN_3X3
    return compiler.compile_kernel(kernel, _table(args), policy=args.policy)


def _config(args):
    noise = device.NoiseModel(args.sigma, args.seed)
    return crossbar.CrossbarConfig(line_resistance=args.line_res, noise=noise)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_compile(args):
    if args.kernel is None:
        raise FreqbarError("--kernel is required")
    kernel = compiler.read_kernel(args.kernel)
    prog = compiler.compile_kernel(kernel, _table(args), policy=args.policy, allow_off=args.allow_off)
    rep = compiler.quantization_report(kernel, prog)
    if args.out is None:
        sys.stdout.write(compiler.format_program(prog))
    else:
        compiler.write_program(prog, args.out)
    sys.stderr.write(f"max_rel_error={rep.max_error!r} rms_rel_error={rep.rms_error!r}\n")


def cmd_noise(args):
    if args.out is None:
        raise FreqbarError("--out is required")
    img = pipeline.add_noise(pipeline.read_pnm(args.image), args.alpha, args.seed)
    pipeline.write_pnm(img, args.out)


def peak_rows_csv(job, row):
    """Fig. 4(c)-style data for one output row, analytic and simulated."""
    ana = pipeline.convolve_detailed(job, rows=[row])
    sim_job = pipeline.ConvolutionJob(job.image, job.program, job.stride, pipeline.Mode.SIMULATED, job.output_scale, job.config)
    sim = pipeline.convolve_detailed(sim_job, rows=[row])
    scaled = pipeline.scale_dots(ana.dots, job.program.scale_den)
    nch = job.image.channels
    head = ["col"]
    for c in range(nch):
        head += [f"ch{c}_analytic_ma", f"ch{c}_sim_ma", f"ch{c}_byte"]
    lines = [",".join(head)]
    for x in range(ana.dots.shape[1]):
        vals = [str(x)]
        for c in range(nch):
            vals += [f"{ana.currents[0, x, c]:.9g}", f"{sim.currents[0, x, c]:.9g}", str(int(np.clip(scaled[0, x, c], 0, 255)))]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def cmd_convolve(args):
    if args.out is None:
        raise FreqbarError("--out is required")
    img = pipeline.read_pnm(args.image)
    prog = _program(args)
    job = pipeline.ConvolutionJob(img, prog, mode=pipeline.Mode(args.mode), config=_config(args))
    out = pipeline.convolve(job)
    pipeline.write_pnm(out, args.out)
    row = DEFAULT_ROW if args.row is None else args.row
    if args.row is None and row >= out.height:
        row = out.height // 2
    if not 0 <= row < out.height:
        raise FreqbarError(f"--row {row} outside output rows 0..{out.height - 1}")
    peaks = args.peaks or args.out.with_name(f"{args.out.name}.row{row}.csv")
    Path(peaks).write_text(peak_rows_csv(job, row))


def cmd_simulate(args):
    prog = _program(args)
    law = prog.amplitude_law
    if args.patch is None:
        patch = [law.pixel_max] * len(prog)
    else:
        try:
            patch = [int(x) for x in args.patch.split(",")]
        except ValueError:
            raise FreqbarError("--patch must be comma-separated integers") from None
    sched = compiler.encode_inputs(prog, patch)
    cfg = _config(args)
    res = crossbar.mac_simulate(prog, sched, cfg, keep_waveform=args.dump_waveform is not None)
    if args.dump_waveform is not None:
        Path(args.dump_waveform).write_text(crossbar.waveform_csv(res))
    _emit(f"{crossbar.SIM_RESULT_HEADER}\n{res.csv_line()}\n", args.out)


def cmd_report(args):
    prog = _program(args)
    v0 = prog.amplitude_law.v_hi if args.v0 is None else args.v0
    rep = analysis.compare_baseline(prog, args.nbits, np.full(len(prog), v0), args.readout_ns * 1e-9)
    _emit(analysis.report_csv(rep), args.out)


COMMANDS = {
    "compile": cmd_compile,
    "noise": cmd_noise,
    "convolve": cmd_convolve,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except FreqbarError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {args.command}: {exc}\n".replace("\n", " ").rstrip() + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
