import csv
import io
import json
import math
import re

import pytest

from mrmc.energy import EnergyReport
from mrmc.report import (
    CSV_COLUMNS,
    RaggedGridError,
    fmt,
    render_heatmap,
    result_row,
    rows_to_csv,
    to_json,
)
from mrmc.sweep import ConfigResult, CrConfig


def fake(c, r, cap, ee=0.4):
    rep = EnergyReport(1.0, 0.01, cap, ee, 0.5, ee / 0.5)
    return ConfigResult(CrConfig(c, r), cap, rep, {"wall_ms": 12.5})


def grid(channels, radios):
    return [fake(c, r, float(c * r)) for c in channels for r in radios]


def test_fmt_nine_digits():
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(2.0) == "2"
    assert fmt(math.nan) == "nan"


def test_csv_columns_and_values():
    rows = [result_row(fake(2, 1, 0.75))]
    text = rows_to_csv(rows)
    header, line = text.splitlines()
    assert header.split(",") == CSV_COLUMNS
    rec = dict(zip(CSV_COLUMNS, line.split(",")))
    assert rec["channels"] == "2" and rec["capacity"] == "0.75" and rec["status"] == "ok"
    assert rec["wall_ms"] == "12.5"
    assert dict(zip(CSV_COLUMNS, rows_to_csv([result_row(fake(2, 1, 0.75), False)]).splitlines()[1].split(",")))["wall_ms"] == "0"


def test_failed_row_has_nan_fields():
    row = result_row(ConfigResult(CrConfig(1, 1), 0.0, None, {}, "error: boom"))
    assert math.isnan(row["EE"]) and row["status"] == "error: boom"
    assert "nan" in rows_to_csv([row])


def test_json_matches_csv():
    rows = [result_row(fake(c, 1, c / 3)) for c in (1, 2, 3)]
    data = json.loads(to_json({"command": "sweep"}, rows))
    parsed = list(csv.DictReader(io.StringIO(rows_to_csv(rows))))
    for j, c in zip(data["rows"], parsed):
        for key in CSV_COLUMNS:
            if isinstance(j[key], float):
                assert float(c[key]) == j[key]
            else:
                assert str(j[key]) == c[key]
    assert data["manifest"] == {"command": "sweep"}


def test_json_nan_becomes_null():
    row = result_row(ConfigResult(CrConfig(1, 1), 0.0, None, {}, "capped: x"))
    assert json.loads(to_json({}, [row]))["rows"][0]["EE"] is None


class TestHeatmap:
    def test_single_cell(self):
        svg = render_heatmap(grid([1], [1]))
        assert svg.count('class="cell"') == 1
        assert ">channels<" in svg and ">radios<" in svg

    def test_grid_layout(self):
        svg = render_heatmap(grid(range(1, 9), range(1, 5)))
        cells = re.findall(r'data-channels="(\d+)" data-radios="(\d+)"', svg)
        assert len(cells) == 32
        order = [(int(c), int(r)) for c, r in cells]
        assert order == sorted(order)

    def test_monotone_ramp(self):
        # darker means larger: lower red channel as capacity grows along a column
        svg = render_heatmap(grid([1, 2, 3], [1]))
        fills = re.findall(r'class="cell"[^>]*fill="#([0-9a-f]{6})"', svg)
        reds = [int(f[:2], 16) for f in fills]
        assert reds == sorted(reds, reverse=True) and reds[0] > reds[-1]

    def test_deterministic(self):
        assert render_heatmap(grid([1, 2], [1, 2]), "ee") == render_heatmap(grid([1, 2], [1, 2]), "ee")

    def test_ragged(self):
        results = grid([1, 2], [1, 2])[:-1]
        with pytest.raises(RaggedGridError, match=r"\(2, 2\)"):
            render_heatmap(results)

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            render_heatmap(grid([1], [1]), "watts")

    def test_failed_cell(self):
        results = grid([1, 2], [1])
        results[1] = ConfigResult(CrConfig(2, 1), 0.0, None, {}, "error")
        assert "n/a" in render_heatmap(results, "ee")


def test_png_heatmap(tmp_path):
    pytest.importorskip("matplotlib")
    from mrmc.plotting import save_heatmap_png, save_relaxation_png

    path = save_heatmap_png(grid([1, 2], [1, 2]), "capacity", tmp_path / "cap.png")
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    rep = EnergyReport(1.0, 0.0, 0.5, 0.5, 0.5, 1.0)
    path = save_relaxation_png([(0.5, rep), (1.0, rep)], tmp_path / "relax.png")
    assert path.stat().st_size > 0
