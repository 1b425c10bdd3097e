import xml.etree.ElementTree as ET

import numpy as np

from marketineff.plotting import line_plot

NS = "{http://www.w3.org/2000/svg}"


def test_linear_plot(tmp_path):
    x = np.arange(10)
    line_plot(tmp_path / "a.svg", [("one", x, x**2), ("two", x, -x)], title="t", xlabel="x", ylabel="y")
    root = ET.parse(tmp_path / "a.svg").getroot()
    assert len(root.findall(f"{NS}polyline")) == 2
    texts = [t.text for t in root.iter(f"{NS}text")]
    assert "one" in texts and "two" in texts


def test_log_axes_drop_non_positive(tmp_path):
    x = np.array([0.0, 1.0, 10.0, 100.0])
    y = np.array([1.0, -1.0, 2.0, 3.0])
    line_plot(tmp_path / "b.svg", [("s", x, y)], logx=True, logy=True)
    poly = ET.parse(tmp_path / "b.svg").getroot().find(f"{NS}polyline")
    assert len(poly.get("points").split()) == 2


def test_empty_input_still_writes_svg(tmp_path):
    line_plot(tmp_path / "c.svg", [("s", [], [])])
    assert ET.parse(tmp_path / "c.svg").getroot().tag == f"{NS}svg"


def test_output_is_deterministic(tmp_path):
    x = np.linspace(0, 1, 50)
    for name in ("d1.svg", "d2.svg"):
        line_plot(tmp_path / name, [("s", x, np.sin(x))])
    assert (tmp_path / "d1.svg").read_bytes() == (tmp_path / "d2.svg").read_bytes()
