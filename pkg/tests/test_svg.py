import xml.etree.ElementTree as ET

import numpy as np

from qdephase.svg import LinePlot, _nice_ticks

NS = "{http://www.w3.org/2000/svg}"


def _plot(title="D(t) <N> & bands"):
    t = np.linspace(0, 10, 21)
    p = LinePlot(title=title, xlabel="t", ylabel="D", ylim=(0, 1.05))
    p.add_band(t, np.exp(-t) - 0.05, np.exp(-t) + 0.05, label="band")
    p.add(t, np.exp(-t), "curve", dash="4,2")
    p.add(t, np.exp(-t / 2), "points", marker=True)
    return p


def test_render_is_deterministic():
    assert _plot().render() == _plot().render()


def test_render_is_well_formed_xml_with_escaped_text():
    root = ET.fromstring(_plot().render())
    texts = [e.text for e in root.iter(NS + "text")]
    assert "D(t) <N> & bands" in texts
    assert len(list(root.iter(NS + "polyline"))) == 1
    assert len(list(root.iter(NS + "polygon"))) == 1
    assert len(list(root.iter(NS + "circle"))) == 21


def test_points_stay_inside_canvas():
    p = LinePlot(ylim=(0, 1)).add([0, 1, 2], [-5.0, 0.5, 9.0], "clipped")
    root = ET.fromstring(p.render())
    pts = next(root.iter(NS + "polyline")).get("points").split()
    ys = [float(s.split(",")[1]) for s in pts]
    assert all(0 <= y <= 420 for y in ys)


def test_nan_values_are_skipped():
    p = LinePlot().add([0, 1, 2], [0.0, np.nan, 1.0], "gap")
    pts = next(ET.fromstring(p.render()).iter(NS + "polyline")).get("points").split()
    assert len(pts) == 2


def test_nice_ticks_cover_range():
    ticks = _nice_ticks(0.0, 40.0)
    assert ticks[0] == 0.0 and ticks[-1] == 40.0
    assert np.allclose(np.diff(ticks), ticks[1] - ticks[0])


def test_save_writes_render(tmp_path):
    p = _plot()
    p.save(tmp_path / "x.svg")
    assert (tmp_path / "x.svg").read_text() == p.render()
