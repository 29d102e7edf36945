import xml.etree.ElementTree as ET

import pytest

from conceptrefine.svgplot import render_line_chart


def _tags(path):
    tree = ET.parse(path)
    return [el.tag.split("}")[-1] for el in tree.iter()]


class TestRenderLineChart:
    def test_single_point_gets_marker(self, tmp_path):
        path = tmp_path / "one.svg"
        render_line_chart([("loss", [3], [0.5])], path, title="loss")
        tags = _tags(path)
        assert "circle" in tags
        assert "polyline" not in tags

    def test_two_series_have_legend(self, tmp_path):
        path = tmp_path / "two.svg"
        render_line_chart([("a", [0, 1, 2], [1.0, 2.0, 3.0]),
                           ("b", [0, 1, 2], [3.0, 2.0, 1.0])], path,
                          xlabel="iter", ylabel="val")
        tree = ET.parse(path)
        texts = [el.text for el in tree.iter() if el.text]
        assert "a" in texts and "b" in texts
        assert _tags(path).count("polyline") == 2

    def test_byte_identical_output(self, tmp_path):
        series = [("loss", list(range(10)), [2.0**-i for i in range(10)])]
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        render_line_chart(series, a, logy=True)
        render_line_chart(series, b, logy=True)
        assert a.read_bytes() == b.read_bytes()

    def test_log_scale_handles_zeros(self, tmp_path):
        path = tmp_path / "log.svg"
        render_line_chart([("loss", [0, 1, 2], [1.0, 0.1, 0.0])], path,
                          logy=True)
        ET.parse(path)  # well-formed

    def test_empty_series_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="empty series"):
            render_line_chart([], tmp_path / "x.svg")
        with pytest.raises(ValueError, match="empty series"):
            render_line_chart([("a", [], [])], tmp_path / "x.svg")
