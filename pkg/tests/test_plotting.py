import numpy as np
import pytest

from extinction_lab.errors import EmptySeries, ValidationError
from extinction_lab.merlezaag import ModeSeries
from extinction_lab.plotting import emit_plot, plot_modeseries


def _series():
    t = np.linspace(0, 5, 100)
    return {"norm": (t, np.exp(-2 * t) + 1e-8), "sup": (t, 2 * np.exp(-2 * t) + 1e-8)}


@pytest.mark.parametrize("kind", ["norm", "spectrum"])
def test_plot_is_byte_deterministic(kind, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_plot(_series(), kind, a, title="run")
    emit_plot(_series(), kind, b, title="run")
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().lstrip().startswith(b"<?xml")


def test_dichotomy_has_two_panels(tmp_path):
    path = tmp_path / "d.svg"
    emit_plot(_series(), "dichotomy", path)
    text = path.read_text()
    assert text.count('id="axes_') == 2


def test_modeseries_plot(tmp_path):
    s = np.linspace(0.1, 5, 50)
    path = plot_modeseries(ModeSeries(s, np.exp(-s), np.ones_like(s), np.exp(-2 * s)), tmp_path / "m.svg")
    assert path.exists()


def test_empty_series(tmp_path):
    with pytest.raises(EmptySeries):
        emit_plot({}, "norm", tmp_path / "e.svg")
    with pytest.raises(EmptySeries):
        emit_plot((np.array([]), np.array([])), "norm", tmp_path / "e.svg")
    assert not (tmp_path / "e.svg").exists()


def test_bad_kind_and_shapes(tmp_path):
    t = np.linspace(0, 1, 10)
    with pytest.raises(ValidationError):
        emit_plot((t, t), "histogram", tmp_path / "x.svg")
    with pytest.raises(ValidationError):
        emit_plot((t, t[:-1]), "norm", tmp_path / "x.svg")
