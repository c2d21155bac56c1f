import numpy as np
import pytest

from dgles.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from dgles.diagnostics import Spectrum, TimeSeries
from dgles.les_filter import load_presets
from dgles.mesh import SolutionField, build_mesh, read_checkpoint, write_checkpoint

CFG = """
[mesh]
cells = 2
[discretization]
n = 3
[model]
type = filter
sigma = 1 0.8 0.5 0
c = 0.8
[initial]
type = dhit
k_max = 3
[time]
end_time = 0.1
[output]
sample_times = 0.05 0.1
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(CFG)
    return p


def test_run_and_spectra(cfg_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(cfg_file), "--out-dir", str(out)]) == EXIT_OK
    series = TimeSeries.from_csv(out / "series.csv")
    np.testing.assert_allclose(series.t, [0, 0.05, 0.1])
    assert main(["spectra", str(out / "final.chk"), "--out-dir", str(tmp_path / "s")]) == EXIT_OK
    spec = Spectrum.from_csv(tmp_path / "s" / "spectrum_t0.1000.csv")
    assert spec.E.sum() > 0


def test_seed_and_override(cfg_file, tmp_path):
    main(["run", str(cfg_file), "--out-dir", str(tmp_path / "a"), "--seed", "1",
          "--override", "time.end_time=0"])
    main(["run", str(cfg_file), "--out-dir", str(tmp_path / "b"), "--seed", "2",
          "--override", "time.end_time=0"])
    main(["run", str(cfg_file), "--out-dir", str(tmp_path / "c"),
          "--override", "initial.seed=1", "--override", "time.end_time=0"])
    a, b, c = (read_checkpoint(tmp_path / x / "final.chk").data for x in "abc")
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_exit_codes(cfg_file, tmp_path, capsys):
    assert main(["run", str(cfg_file), "--override", "time.cfl=-1"]) == EXIT_CONFIG
    assert "time.cfl" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "nope.ini")]) == EXIT_CONFIG
    assert main(["run", str(cfg_file), "--out-dir", str(tmp_path / "x"),
                 "--override", "time.dt=1", "--override", "time.end_time=4",
                 "--override", "output.sample_times=2 4"]) == EXIT_NUMERICAL
    assert (tmp_path / "x" / "series.csv").is_file()
    assert main(["optimize", str(cfg_file)]) == EXIT_CONFIG
    (tmp_path / "bad.chk").write_bytes(b"garbage")
    assert main(["spectra", str(tmp_path / "bad.chk")]) == EXIT_CONFIG


def test_zero_velocity_checkpoint_spectrum(tmp_path):
    f = SolutionField.zeros(build_mesh((2, 2, 2)), 3)
    f.data[0] = 1.0
    f.data[4] = 2.5
    write_checkpoint(tmp_path / "z.chk", f)
    assert main(["spectra", str(tmp_path / "z.chk"), "--out-dir", str(tmp_path)]) == EXIT_OK
    assert np.all(Spectrum.from_csv(tmp_path / "spectrum_t0.0000.csv").E == 0)


def test_optimize_single_evaluation(cfg_file, tmp_path):
    assert main(["run", str(cfg_file), "--out-dir", str(tmp_path / "ref")]) == EXIT_OK
    TimeSeries.from_csv(tmp_path / "ref" / "series.csv").write_reference(tmp_path / "ref.csv")
    cfg_file.write_text(CFG + "[optimize]\nreference = ref.csv\ntimes = 0.05 0.1\n"
                        "max_evals = 1\nx0 = 1.0 0.6 0.4\n")
    out = tmp_path / "opt"
    assert main(["optimize", str(cfg_file), "--out-dir", str(out)]) == EXIT_OK
    rec = load_presets(out / "best_kernel.txt")[3]
    assert rec.sigma == (1.0, 0.6, 0.4, 0.0) and rec.c == pytest.approx(1.0)
    log = (out / "optimization_log.csv").read_text().splitlines()
    assert log[0] == "eval,iter,restart,f,c,sigma_1,sigma_2" and len(log) == 2
    cfg_file.write_text(CFG + "[optimize]\nreference = missing.csv\n")
    assert main(["optimize", str(cfg_file), "--out-dir", str(out)]) == EXIT_CONFIG
