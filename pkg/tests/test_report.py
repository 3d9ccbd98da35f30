import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from rda_optctl.fbsweep import run_fbs
from rda_optctl.meshgrid import Field, Grid1D
from rda_optctl.report import (
    read_field_csv,
    read_slice,
    render_heatmap,
    slice_name,
    write_field_csv,
    write_run,
    write_slice,
)
from rda_optctl.scenario import preset

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    s = preset("NEU_H1").with_overrides(nx=21)
    r = run_fbs(s)
    out = tmp_path_factory.mktemp("run")
    paths = write_run(s, r, out, backend="test")
    return s, r, out, paths


def test_csv_layout(tmp_path):
    g = Grid1D(3, 2, 1.0)
    f = Field(g, np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))
    text = write_field_csv(f, tmp_path / "f.csv").read_text()
    lines = text.splitlines()
    assert lines[0] == "x,t,value"
    assert lines[1] == "0.000000000,0.000000000,1.000000000"
    assert lines[4] == "0.000000000,1.000000000,4.000000000"
    assert len(lines) == 7 and text.endswith("\n")


def test_csv_round_trip(tmp_path):
    g = Grid1D(17, 9, 0.5)
    rng = np.random.default_rng(1)
    f = Field(g, rng.uniform(0, 20, (9, 17)))
    back = read_field_csv(write_field_csv(f, tmp_path / "f.csv"))
    assert back.grid == g
    assert np.max(np.abs(back.values - f.values)) <= 1e-8


def test_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_field_csv(p)


def test_slice_nearest_level(tmp_path):
    g = Grid1D(5, 11, 1.0)
    f = Field(g, np.repeat(g.t[:, None], 5, axis=1))
    x, v = read_slice(write_slice(f, 0.33, tmp_path / slice_name(0.33)))
    assert np.allclose(x, g.x) and np.allclose(v, 0.3)
    assert slice_name(0.1) == "slice_t0.1.csv" and slice_name(1.0) == "slice_t1.csv"
    with pytest.raises(ValueError):
        write_slice(f, 2.0, tmp_path / "x.csv")


def test_heatmap_is_well_formed_svg(tmp_path):
    g = Grid1D(30, 400, 1.0)
    X, Tt = np.meshgrid(g.x, g.t)
    f = Field(g, X * Tt)
    root = ET.parse(render_heatmap(f, tmp_path / "h.svg", "u <&> test")).getroot()
    assert root.tag == f"{SVG}svg"
    cells = root.find(f"{SVG}g").findall(f"{SVG}rect")
    assert len(cells) == 30 * 200
    fills = {c.get("fill") for c in cells}
    assert "#0000ff" in fills and "#ff0000" in fills
    texts = [t.text for t in root.iter(f"{SVG}text")]
    assert "u <&> test" in texts and "max=1" in texts and "min=0" in texts


def test_heatmap_orientation(tmp_path):
    # value grows with t, so the top row must be red
    g = Grid1D(3, 4, 1.0)
    f = Field(g, np.repeat(g.t[:, None], 3, axis=1))
    root = ET.parse(render_heatmap(f, tmp_path / "h.svg")).getroot()
    cells = root.find(f"{SVG}g").findall(f"{SVG}rect")
    top = min(cells, key=lambda c: float(c.get("y")))
    bottom = max(cells, key=lambda c: float(c.get("y")))
    assert top.get("fill") == "#ff0000" and bottom.get("fill") == "#0000ff"


def test_heatmap_constant_field(tmp_path):
    g = Grid1D(5, 5, 1.0)
    root = ET.parse(render_heatmap(Field.constant(g, 2.0), tmp_path / "c.svg")).getroot()
    assert root.find(f"{SVG}g") is None
    assert len(root.findall(f"{SVG}rect")) == 2


def test_heatmap_deterministic(tmp_path):
    g = Grid1D(11, 11, 1.0)
    f = Field(g, np.outer(g.t, g.x))
    a = render_heatmap(f, tmp_path / "a.svg").read_bytes()
    b = render_heatmap(f, tmp_path / "b.svg").read_bytes()
    assert a == b


def test_write_run_artifacts(small_run):
    s, r, out, paths = small_run
    names = {p.relative_to(out).as_posix() for p in paths}
    expected = {"u.csv", "m.csv", "p.csv", "heatmap_u.svg", "heatmap_m.svg", "summary.json"}
    expected |= {f"slices/{f}/slice_t{t:g}.csv" for f in "ump" for t in s.outputs.slices}
    assert names == expected
    assert np.max(np.abs(read_field_csv(out / "m.csv").values - r.m.values)) <= 1e-8


def test_summary_contents(small_run):
    s, r, out, _ = small_run
    doc = json.loads((out / "summary.json").read_text())
    assert doc["scenario"] == "NEU_H1" and doc["backend"] == "test"
    assert doc["converged"] is True and doc["iterations"] == r.report.iterations
    assert doc["final_J"] == r.report.final_J
    assert len(doc["J_history"]) == doc["iterations"]
    inv = doc["invariants"]
    assert inv["ok"] and inv["min_u"] >= -1e-10 and inv["min_p"] >= -1e-10
    assert inv["mass_bound_margin"] >= 0 and inv["J_bound_margin"] >= 0
    assert doc["parameters"]["h"] == "sin(6*pi*x)+1.1"
    assert doc["grid"]["nx"] == 21


def test_outputs_can_be_disabled(tmp_path):
    from dataclasses import replace

    from rda_optctl.scenario import OutputSpec

    s = replace(preset("NEU_H1").with_overrides(nx=17), outputs=OutputSpec(fields=False, slices=(), heatmaps=False))
    paths = write_run(s, run_fbs(s), tmp_path)
    assert [p.name for p in paths] == ["summary.json"]
