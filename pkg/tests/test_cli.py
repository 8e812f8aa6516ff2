import csv

import numpy as np
import pytest

from freqbar.analysis import parse_report_csv
from freqbar.cli import main
from freqbar.compiler import read_program
from freqbar.pipeline import Image, add_noise, crossing_scene, read_pnm, write_pnm


@pytest.fixture
def kernel_file(tmp_path):
    p = tmp_path / "g.kernel"
    p.write_text("3 3 16\n1 2 1\n2 4 2\n1 2 1\n")
    return p


@pytest.fixture
def program_file(tmp_path, kernel_file):
    out = tmp_path / "g.prog"
    assert main(["compile", "--kernel", str(kernel_file), "--out", str(out)]) == 0
    return out


def test_compile(tmp_path, kernel_file, capsys):
    program_file = tmp_path / "p.prog"
    assert main(["compile", "--kernel", str(kernel_file), "--out", str(program_file)]) == 0
    prog = read_program(program_file)
    assert sorted({c.frequency for c in prog.cells}) == [10.0, 750.0, 10000.0]
    assert "max_rel_error=0.0" in capsys.readouterr().err


def test_compile_energy_policy(tmp_path, kernel_file):
    out = tmp_path / "e.prog"
    assert main(["compile", "--kernel", str(kernel_file), "--policy", "energy", "--out", str(out)]) == 0
    assert "policy=energy" in out.read_text()


def test_noise_and_convolve(tmp_path, program_file):
    src = tmp_path / "in.ppm"
    write_pnm(crossing_scene(128, 128), src)
    noisy = tmp_path / "noisy.ppm"
    assert main(["noise", "--image", str(src), "--out", str(noisy), "--seed", "3"]) == 0
    assert read_pnm(noisy) == add_noise(read_pnm(src), 0.5, 3)

    out = tmp_path / "out.ppm"
    assert main(["convolve", "--image", str(noisy), "--program", str(program_file), "--out", str(out)]) == 0
    img = read_pnm(out)
    assert (img.height, img.width, img.channels) == (126, 126, 3)

    rows = list(csv.DictReader((tmp_path / "out.ppm.row108.csv").open()))
    assert len(rows) == 126
    for x, r in enumerate(rows):
        assert int(r["ch1_byte"]) == img.pixels[108, x, 1]
        assert float(r["ch1_sim_ma"]) == pytest.approx(float(r["ch1_analytic_ma"]), rel=5e-3)


def test_convolve_deterministic_with_noise(tmp_path, program_file):
    src = tmp_path / "in.pgm"
    write_pnm(Image(crossing_scene(20, 20).pixels[:, :, 0]), src)
    outs = []
    for n in range(2):
        out = tmp_path / f"o{n}.pgm"
        args = ["convolve", "--image", str(src), "--program", str(program_file), "--out", str(out)]
        assert main(args + ["--sigma", "0.01", "--seed", "42", "--row", "3"]) == 0
        outs.append((out.read_bytes(), (tmp_path / f"o{n}.pgm.row3.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_simulate(tmp_path, program_file):
    wave, res = tmp_path / "w.csv", tmp_path / "r.csv"
    args = ["simulate", "--program", str(program_file), "--dump-waveform", str(wave), "--out", str(res)]
    assert main(args) == 0
    head, line = res.read_text().splitlines()
    assert head == "i_peak_analytic_ma,i_peak_sim_ma,t_peak_s"
    ia, isim, tp = map(float, line.split(","))
    assert ia == pytest.approx(22.176, rel=1e-12)
    assert tp == pytest.approx(0.025, abs=1 / 640_000)
    assert wave.read_text().splitlines()[0].endswith("v_row8,i_out_ma")


def test_report(tmp_path, program_file):
    out = tmp_path / "cost.csv"
    assert main(["report", "--program", str(program_file), "--nbits", "8", "--out", str(out)]) == 0
    rep = parse_report_csv(out.read_text())
    assert rep.power_ratio == 16 and rep.area_fraction == 0.125
    assert rep.latency_s == pytest.approx(0.0500005)


def test_report_without_program_uses_gaussian(capsys):
    assert main(["report", "--v0", "0.1"]) == 0
    rep = parse_report_csv(capsys.readouterr().out)
    assert rep.avg_power_mw == pytest.approx(0.168)


def test_unknown_flag(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["report", "--bogus"])
    assert ei.value.code != 0
    err = capsys.readouterr().err
    assert err.startswith("error: cli:") and err.count("\n") == 1


def test_module_error_single_line(tmp_path, capsys):
    k = tmp_path / "big.kernel"
    k.write_text("1 2 1\n1 9\n")
    assert main(["compile", "--kernel", str(k)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: compiler:") and err.count("\n") == 1


def test_missing_file(tmp_path, capsys):
    assert main(["noise", "--image", str(tmp_path / "nope.pgm"), "--out", str(tmp_path / "x.pgm")]) == 1
    assert capsys.readouterr().err.startswith("error: noise:")
