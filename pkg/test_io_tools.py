"""
Tests for the JSON file formats and DOT export.
"""

import json

import pytest

from forge.cn_construction import CnState, init_lambda0, run_cn
from forge.config import Caps
from forge.diagram import standard_diagram
from forge.errors import FormatError
from forge.fixtures import fano_flag_geometry, fixture_neumaier
from forge.fraisse import Embedding
from forge.free_construction import ConstructionState, build_free, progress_metrics
from forge.geometry import Geometry
from forge.io_tools import (
    dumps,
    export_dot,
    load_diagram,
    load_geometry,
    load_map,
    load_state,
    read_json,
    save_diagram,
    save_geometry,
    save_map,
    save_state,
)


def _write(path, data):
    path.write_text(data if isinstance(data, str) else json.dumps(data), encoding='utf-8')
    return path


def test_dumps_is_sorted_and_terminated():
    assert dumps({'b': 1, 'a': [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


def test_geometry_round_trip(tmp_path):
    g = fixture_neumaier()
    path = tmp_path / "neumaier.json"
    save_geometry(g, path)
    assert read_json(path)['version'] == 1
    assert load_geometry(path) == g


def test_geometry_without_version_is_accepted(tmp_path):
    path = _write(tmp_path / "g.json", fano_flag_geometry().to_dict())
    assert load_geometry(path) == fano_flag_geometry()


def test_same_type_incidence_is_a_format_error(tmp_path):
    path = _write(tmp_path / "bad.json", {
        'types': ["1", "2"],
        'vertices': [{'id': 0, 'type': "1"}, {'id': 1, 'type': "1"}],
        'incidences': [[0, 1]],
    })
    with pytest.raises(FormatError):
        load_geometry(path)


@pytest.mark.parametrize("content", [
    '{"version": 2, "types": [], "vertices": [], "incidences": []}',
    '{"types": [',
    '[1, 2, 3]',
])
def test_unreadable_files(tmp_path, content):
    path = _write(tmp_path / "x.json", content)
    with pytest.raises(FormatError):
        load_geometry(path)


def test_missing_file(tmp_path):
    with pytest.raises(FormatError):
        read_json(tmp_path / "absent.json")


def test_diagram_round_trip(tmp_path):
    path = tmp_path / "f4.json"
    save_diagram(standard_diagram("F4"), path)
    assert load_diagram(path) == standard_diagram("F4")
    bad = _write(tmp_path / "bad.json", {'nodes': ["1", "2"], 'edges': [{'i': "1", 'j': "2", 'm': 1}]})
    with pytest.raises(FormatError):
        load_diagram(bad)


def test_maps(tmp_path):
    path = tmp_path / "iota.json"
    save_map(Embedding({0: 5, 1: 7}), path)
    assert load_map(path).mapping == {0: 5, 1: 7}
    plain = _write(tmp_path / "plain.json", {"0": 3, "4": 1})
    assert load_map(plain).mapping == {0: 3, 4: 1}
    bad = _write(tmp_path / "bad.json", {'map': [["x", 1]]})
    with pytest.raises(FormatError):
        load_map(bad)


def test_free_state_round_trip(tmp_path):
    s = build_free(standard_diagram("C3"), None, 2, Caps(a=4, b=4, c=4))
    path = tmp_path / "state.json"
    save_state(s, path, progress_metrics(s))
    assert read_json(path)['metrics']['stage'] == 2
    loaded = load_state(path)
    assert isinstance(loaded, ConstructionState)
    assert loaded.geometry == s.geometry
    assert loaded.diagram == s.diagram
    assert loaded.stage == 2
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    save_state(s, first)
    save_state(loaded, second)
    assert first.read_bytes() == second.read_bytes()


def test_cn_state_round_trip(tmp_path):
    s = run_cn(init_lambda0(3, 4), 6, 1, 10)
    path = tmp_path / "cn.json"
    save_state(s, path)
    assert read_json(path)['kind'] == 'cn'
    loaded = load_state(path)
    assert isinstance(loaded, CnState)
    assert loaded.to_dict() == s.to_dict()


def test_unknown_state_kind(tmp_path):
    path = _write(tmp_path / "s.json", {'kind': 'mystery'})
    with pytest.raises(FormatError):
        load_state(path)


def test_dot_export():
    assert export_dot(Geometry(["1", "2"])) == "graph geometry {\n}\n"
    one = Geometry(["1", "2"])
    one.add_vertex("2")
    assert export_dot(one).splitlines()[1] == '  0 [label="0:2", shape=box, color="#377eb8"];'
    lines = export_dot(fano_flag_geometry()).splitlines()
    assert sum(1 for line in lines if "label=" in line) == 14
    assert sum(1 for line in lines if " -- " in line) == 21
    assert lines[0] == "graph geometry {" and lines[-1] == "}"
