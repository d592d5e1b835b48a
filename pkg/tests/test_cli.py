import os

import numpy as np
import pytest

from extinction_lab import io
from extinction_lab.cli import EXIT_OK, EXIT_VALIDATION, apply_thread_cap, load_config, main
from extinction_lab.errors import ValidationError


def _config(tmp_path, **extra):
    lines = {
        "job.id": "t1",
        "output.dir": str(tmp_path / "out"),
        "mesh.resolution": "100",
        "spectrum.k": "8",
        "evolve.dt": "0.005",
        "evolve.t_end": "5",
        "evolve.snapshot_stride": "2",
    }
    lines.update(extra)
    path = tmp_path / "job.cfg"
    path.write_text("".join(f"{k} = {v}\n" for k, v in lines.items()))
    return str(path)


def test_stationary_and_spectrum(tmp_path):
    cfg = _config(tmp_path)
    assert main(["stationary", "--config", cfg]) == EXIT_OK
    prof = tmp_path / "out" / "profile.csv"
    assert io.load_profile(prof).V.values.size == 100
    assert main(["spectrum", "--profile", str(prof), "-k", "4"]) == EXIT_OK
    rec = io.load_spectrum(tmp_path / "out")
    assert rec.eigenvalues[0] == pytest.approx(-1.0, abs=1e-8)
    assert list(rec.classes) == ["u", "s", "s", "s"]


def test_rerun_is_byte_identical(tmp_path):
    cfg = _config(tmp_path)
    main(["stationary", "--config", cfg])
    first = (tmp_path / "out" / "profile.csv").read_bytes()
    main(["stationary", "--config", cfg])
    assert (tmp_path / "out" / "profile.csv").read_bytes() == first


def test_unknown_key_exits_without_artifacts(tmp_path, capsys):
    cfg = _config(tmp_path, **{"mesh.resolutoin": "100"})
    assert main(["dichotomy", "--config", cfg]) == EXIT_VALIDATION
    assert "mesh.resolutoin" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_invalid_value_exits_before_compute(tmp_path):
    cfg = _config(tmp_path, **{"params.m": "1.5"})
    assert main(["evolve", "--config", cfg]) == EXIT_VALIDATION
    assert not (tmp_path / "out").exists()


def test_set_override(tmp_path):
    cfg = load_config(_config(tmp_path), ["mesh.resolution=50"])
    assert cfg["mesh.resolution"] == 50
    with pytest.raises(ValidationError):
        load_config(_config(tmp_path), ["nonsense"])


def test_dichotomy_then_tools(tmp_path):
    cfg = _config(tmp_path)
    out = tmp_path / "out"
    assert main(["dichotomy", "--config", cfg]) == EXIT_OK
    for name in ("trajectory.csv", "modeseries.csv", "report.csv", "summary.txt", "dichotomy.svg"):
        assert (out / name).exists(), name
    header, body = io.read_table(out / "report.csv")
    row = dict(zip(header, body[0]))
    assert row["outcome"] == "Agree"
    assert row["decay"] == "Exponential"

    assert main(["rates", "--trajectory", str(out / "trajectory.csv"), "--t-lo", "1",
                 "-o", str(out / "rates.csv")]) == EXIT_OK
    header, body = io.read_table(out / "rates.csv")
    assert dict(zip(header, body[0]))["tag"] == "Exponential"

    assert main(["mzcheck", "--modeseries", str(out / "modeseries.csv"), "-o", str(out / "mz.csv")]) == EXIT_OK
    header, body = io.read_table(out / "mz.csv")
    assert "StableDominates" in body[0]

    assert main(["plot", "--input", str(out / "trajectory.csv")]) == EXIT_OK
    assert (out / "trajectory.svg").exists()


def test_evolve_and_split(tmp_path):
    cfg = _config(tmp_path, **{"evolve.t_end": "1"})
    assert main(["evolve", "--config", cfg]) == EXIT_OK
    rec = io.load_trajectory(tmp_path / "out" / "trajectory.csv")
    assert rec.t[-1] == pytest.approx(1.0)
    assert np.all(rec.norm_p1 > 0)
    assert main(["split", "--config", cfg, "--set", "split.t_lo=0"]) == EXIT_OK
    meta = io.read_meta(tmp_path / "out" / "modeseries.csv")
    assert float(meta["split.lam"]) == pytest.approx(0.5)


def test_missing_input_file(tmp_path):
    assert main(["rates", "--trajectory", str(tmp_path / "none.csv")]) == EXIT_VALIDATION


def test_thread_cap():
    env = {"EXTLAB_THREADS": "2"}
    assert apply_thread_cap(env) == 2
    assert env["OMP_NUM_THREADS"] == "2" and env["OPENBLAS_NUM_THREADS"] == "2"
    assert apply_thread_cap({}) is None
    with pytest.raises(ValueError):
        apply_thread_cap({"EXTLAB_THREADS": "zero"})


def test_bad_thread_cap_exit_code(monkeypatch):
    monkeypatch.setenv("EXTLAB_THREADS", "-1")
    assert main(["stationary"]) == EXIT_VALIDATION
    monkeypatch.delenv("EXTLAB_THREADS")
    assert "OMP_NUM_THREADS" not in os.environ or os.environ["OMP_NUM_THREADS"] != "-1"
