import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from cartograph import (
    CurveLog,
    MapStyle,
    MetricsTable,
    classify,
    map_transform,
    render_curves,
    render_map,
)
from cartograph._rng import generator

SVG_NS = "http://www.w3.org/2000/svg"


def make_table(n, seed=0, epochs=10):
    rng = generator(seed)
    return MetricsTable(
        guids=[f"g{i:06d}" for i in range(n)],
        confidence=rng.random(n),
        variability=rng.random(n) * 0.5,
        correctness=rng.integers(0, epochs + 1, size=n) / epochs,
        epochs_used=np.full(n, epochs, dtype=np.int64),
    )


def data_markers(svg: str):
    # legend <use> elements carry integer coordinates set far right of the
    # plot; data markers are the ones emitted with 2-decimal coordinates
    return re.findall(r'<use xlink:href="#mk-\w+" x="-?\d+\.\d\d" y="-?\d+\.\d\d"', svg)


class TestRenderMap:
    def test_three_instances_three_markers(self):
        table = make_table(3)
        svg = render_map(table, classify(table))
        assert len(data_markers(svg)) == 3

    def test_subsampling_to_cap(self):
        table = make_table(500)
        style = MapStyle(sample_cap=100, sample_seed=4)
        svg = render_map(table, classify(table), style)
        assert len(data_markers(svg)) == 100

    def test_wellformed_xml_with_svg_namespace(self):
        table = make_table(10)
        root = ET.fromstring(render_map(table, classify(table)))
        assert root.tag == f"{{{SVG_NS}}}svg"

    def test_deterministic_bytes(self):
        table = make_table(200)
        style = MapStyle(sample_cap=50, sample_seed=9)
        regions = classify(table)
        assert render_map(table, regions, style) == render_map(table, regions, style)

    def test_marker_coordinates_invert_to_metrics(self):
        table = make_table(50, seed=3)
        style = MapStyle()
        svg = render_map(table, classify(table), style)
        x0, x_scale, y0, y_scale = map_transform(style)
        points = {}
        for match in re.finditer(r'<use xlink:href="#mk-\w+" x="(-?\d+\.\d\d)" y="(-?\d+\.\d\d)"', svg):
            px, py = float(match.group(1)), float(match.group(2))
            v = (px - x0) / x_scale
            c = (py - y0) / y_scale
            points[(round(v, 3), round(c, 3))] = (v, c)
        assert len(points) >= 45  # a few coincident markers may collapse
        # every recovered point matches some table row within 0.5px quantization
        tol_v = 0.5 / abs(x_scale)
        tol_c = 0.5 / abs(y_scale)
        rows = list(zip(table.variability, table.confidence))
        for v, c in points.values():
            assert any(abs(v - rv) <= tol_v and abs(c - rc) <= tol_c for rv, rc in rows)

    def test_subsample_is_subset_without_duplicates(self):
        table = make_table(300, seed=5)
        style = MapStyle(sample_cap=40, sample_seed=1)
        svg = render_map(table, classify(table), style)
        seen = data_markers(svg)
        assert len(seen) == len(set(seen)) == 40

    def test_region_shapes_and_colors(self):
        table = make_table(30)
        svg = render_map(table, classify(table, 0.2, 0.2, 0.2))
        assert '#mk-triangle' in svg and '#d62728' in svg  # easy: red triangles
        assert '#mk-circle' in svg and '#1f77b4' in svg  # hard: blue circles
        assert '#mk-plus' in svg and '#000000' in svg  # ambiguous: black pluses

    def test_axis_labels_legend_and_metadata(self):
        table = make_table(12)
        svg = render_map(table, classify(table))
        assert ">variability</text>" in svg
        assert ">confidence</text>" in svg
        assert "correctness" in svg
        assert "cartograph-map" in svg
        assert "sample_seed=0" in svg
        assert "correctness_bin_edges" in svg

    def test_empty_table_rejected(self):
        empty = MetricsTable(
            guids=[], confidence=np.zeros(0), variability=np.zeros(0),
            correctness=np.zeros(0), epochs_used=np.zeros(0, dtype=np.int64),
        )
        with pytest.raises(ValueError, match="empty"):
            render_map(empty, None)

    def test_correctness_bins_collapse_to_at_most_five(self):
        table = make_table(20, epochs=19)  # 20 attainable correctness values
        svg = render_map(table, classify(table))
        assert len(re.findall(r">\[\d", svg)) == 5  # five legend intervals

    def test_density_strip_flag(self):
        table = make_table(40)
        plain = render_map(table, classify(table))
        dense = render_map(table, classify(table), MapStyle(show_density=True))
        assert dense.count("<rect") > plain.count("<rect")


class TestRenderCurves:
    def test_single_epoch_two_point_markers(self):
        curve = CurveLog(train_accuracy=[0.5], validation_accuracy=[0.4], mean_train_loss=[1.0])
        svg = render_curves(curve)
        assert "<polyline" not in svg
        assert svg.count("<circle") == 2

    def test_twenty_epochs_polylines_with_twenty_vertices(self):
        rng = generator(2)
        curve = CurveLog(
            train_accuracy=list(np.linspace(0.3, 0.95, 20)),
            validation_accuracy=list(rng.random(20) * 0.4 + 0.3),
            mean_train_loss=list(np.linspace(1.5, 0.2, 20)),
        )
        svg = render_curves(curve)
        polylines = re.findall(r'<polyline points="([^"]+)"', svg)
        assert len(polylines) == 2
        for points in polylines:
            assert len(points.split()) == 20

    def test_x_coordinates_strictly_increasing(self):
        curve = CurveLog(
            train_accuracy=list(np.linspace(0.2, 0.9, 12)),
            validation_accuracy=list(np.linspace(0.2, 0.6, 12)),
            mean_train_loss=[0.5] * 12,
        )
        svg = render_curves(curve)
        for points in re.findall(r'<polyline points="([^"]+)"', svg):
            xs = [float(pair.split(",")[0]) for pair in points.split()]
            assert all(a < b for a, b in zip(xs, xs[1:]))

    def test_wellformed_with_legend_and_axes(self):
        curve = CurveLog(train_accuracy=[0.5, 0.6], validation_accuracy=[0.4, 0.45], mean_train_loss=[1, 1])
        svg = render_curves(curve, run_id="demo-run")
        root = ET.fromstring(svg)
        assert root.tag == f"{{{SVG_NS}}}svg"
        assert ">train</text>" in svg
        assert ">validation</text>" in svg
        assert ">epoch</text>" in svg
        assert ">accuracy</text>" in svg
        assert "demo-run" in svg

    def test_empty_curve_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            render_curves(CurveLog())

    def test_deterministic_bytes(self):
        curve = CurveLog(train_accuracy=[0.1, 0.9], validation_accuracy=[0.2, 0.3], mean_train_loss=[2, 1])
        assert render_curves(curve) == render_curves(curve)
