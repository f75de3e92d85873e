import xml.etree.ElementTree as ET

import numpy as np

from extremo.extremogram import IndicatorSeries, extremogram
from extremo.permutation import PermutationConfig, permutation_bands
from extremo.plotting import extremogram_svg, paired_svg

NS = {"svg": "http://www.w3.org/2000/svg"}


def fixture(convention="lag1_flat"):
    rng = np.random.default_rng(0)
    ind = IndicatorSeries("x", rng.random(5000) < 0.03)
    cfg = PermutationConfig(100, seed=1, band_convention=convention)
    return extremogram(ind, 15), permutation_bands(ind, 15, cfg)


def test_svg_structure():
    curve, bands = fixture()
    root = ET.fromstring(extremogram_svg(curve, bands, "NSW <test>", metadata='{"a": "<&>"}'))
    bars = root.findall(".//svg:rect[@class='bar']", NS)
    assert len(bars) == 15
    assert root.find(".//svg:line[@class='band-upper']", NS) is not None
    assert root.find("svg:metadata", NS).text == '{"a": "<&>"}'
    titles = [t.text for t in root.iter("{http://www.w3.org/2000/svg}text")]
    assert "NSW <test>" in titles
    # taller bar for larger value
    heights = [float(b.get("height")) for b in bars]
    assert np.argmax(heights) == np.argmax(curve.values)


def test_per_lag_bands_are_polylines():
    curve, bands = fixture("per_lag")
    root = ET.fromstring(extremogram_svg(curve, bands))
    line = root.find(".//svg:polyline[@class='band-upper']", NS)
    assert len(line.get("points").split()) == 15


def test_svg_deterministic():
    curve, bands = fixture()
    assert extremogram_svg(curve, bands, "t") == extremogram_svg(curve, bands, "t")


def test_paired_with_unavailable_panel():
    curve, bands = fixture()
    root = ET.fromstring(paired_svg([(None, None, "pre"), (curve, bands, "post")]))
    assert root.get("width") == "1440"
    assert len(root.findall(".//svg:rect[@class='bar']", NS)) == 15
    assert any("unavailable" in (t.text or "") for t in root.iter("{http://www.w3.org/2000/svg}text"))
