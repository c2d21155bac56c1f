import numpy as np
import pytest

from dgles.config import ConfigError, eval_number, load_config, parse_overrides

BASE = """
[mesh]
cells = 2          # all directions
[discretization]
n = 3
[model]
type = filter
[initial]
type = tgv
"""


def test_defaults_and_parsing():
    cfg = load_config(text=BASE)
    assert cfg.cells == (2, 2, 2) and cfg.N == 3 and cfg.flux == "l2roe"
    np.testing.assert_allclose(cfg.lengths, 2 * np.pi)
    assert cfg.model.type == "filter" and cfg.model.constant == "c"
    assert cfg.initial.mach == 0.1 and cfg.cfl == 0.5 and cfg.optimize is None


def test_numbers_with_pi():
    assert eval_number("2pi") == pytest.approx(2 * np.pi)
    assert eval_number("pi") == pytest.approx(np.pi)
    assert eval_number("0.5*pi") == pytest.approx(np.pi / 2)
    cfg = load_config(text=BASE + "[time]\nend_time = 2pi\n")
    assert cfg.end_time == pytest.approx(2 * np.pi)


def test_overrides():
    cfg = load_config(text=BASE, overrides=["time.cfl=1.2", "model.constant = c_inf",
                                            "output.spectrum_times=1 2"])
    assert cfg.cfl == 1.2 and cfg.model.constant == "c_inf" and cfg.spectrum_times == (1.0, 2.0)
    assert parse_overrides(["a.b=c=d"]) == {("a", "b"): "c=d"}
    for bad in (["nokey"], ["nosection=1"]):
        with pytest.raises(ConfigError):
            parse_overrides(bad)


@pytest.mark.parametrize("overrides, key", [
    (["mesh.color=red"], "mesh.color"),
    (["weird.a=1"], "[weird]"),
    (["discretization.flux=hll"], "discretization.flux"),
    (["model.sigma=1 0.5 0", "model.c=0.1"], "model.sigma"),
    (["model.sigma=1 0.5 1.5 0", "model.c=0.1"], "model.sigma"),
    (["model.sigma=1 0.5 0.5 0"], "model.c"),
    (["model.preset=7"], "model.preset"),
    (["model.constant=big"], "model.constant"),
    (["time.cfl=0"], "time.cfl"),
    (["time.dt=-1"], "time.dt"),
    (["initial.type=vortex"], "initial.type"),
    (["initial.type=checkpoint"], "initial.path"),
    (["initial.type=dhit", "initial.k_max=4"], "initial.k_max"),
    (["mesh.lengths=1"], "mesh.lengths"),
    (["mesh.cells=1.5"], "mesh.cells"),
    (["discretization.n=x"], "discretization.n"),
    (["output.checkpoint=maybe"], "output.checkpoint"),
    (["optimize.x0=1 2"], "optimize.x0"),
    (["optimize.max_evals=0"], "optimize.max_evals"),
])
def test_validation_names_key(overrides, key):
    with pytest.raises(ConfigError) as exc:
        load_config(text=BASE, overrides=overrides)
    assert key in str(exc.value)


def test_duplicate_section_rejected():
    with pytest.raises(ConfigError, match="malformed"):
        load_config(text=BASE + "[mesh]\ncells = 3\n")


def test_spectra_need_cubic_box():
    with pytest.raises(ConfigError, match="spectrum_times"):
        load_config(text=BASE, overrides=["initial.type=uniform", "mesh.lengths=1",
                                          "output.spectrum_times=1"])


def test_file_and_relative_paths(tmp_path):
    (tmp_path / "run.ini").write_text(BASE.replace("type = tgv", "type = checkpoint\npath = a.chk")
                                      + "[optimize]\nreference = ref.csv\n")
    cfg = load_config(tmp_path / "run.ini")
    assert cfg.initial.path == str(tmp_path / "a.chk")
    assert cfg.optimize.reference == str(tmp_path / "ref.csv")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")
    with pytest.raises(ConfigError):
        load_config(text="not an ini")
