"""
End-to-end tests for the forge command line.
"""

import json

import pytest

from forge.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, cn_diagram, main
from forge.diagram import standard_diagram
from forge.fixtures import fano_flag_geometry, fixture_neumaier
from forge.geometry import Geometry
from forge.io_tools import save_geometry, write_json

BUILD = ['build-free', '--diagram', 'C3', '--rounds', '2', '--cap-a', '4', '--cap-b', '4', '--cap-c', '4']


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def _json(out):
    return json.loads(out)


@pytest.fixture
def free_state(tmp_path, capsys):
    path = tmp_path / "state.json"
    code, _ = _run(capsys, *BUILD, '--out', str(path))
    assert code == EXIT_OK
    return path


@pytest.fixture
def neumaier_file(tmp_path):
    path = tmp_path / "neumaier.json"
    save_geometry(fixture_neumaier(), path)
    return path


def _flag_file(path):
    g = Geometry(["1", "2", "3"])
    ids = [g.add_vertex(t) for t in ("1", "2", "3")]
    for a, b in ((0, 1), (0, 2), (1, 2)):
        g.add_incidence(ids[a], ids[b])
    save_geometry(g, path)
    return path


def test_cn_diagram_matches_standard_names():
    assert cn_diagram(3, 4) == standard_diagram("C3")
    assert cn_diagram(4, 5) == standard_diagram("H4")


def test_build_free(tmp_path, capsys):
    path = tmp_path / "state.json"
    code, out = _run(capsys, *BUILD, '--out', str(path))
    assert code == EXIT_OK
    data = _json(out)
    assert data['stage'] == 2
    assert len(data['rounds']) == 2
    saved = json.loads(path.read_text())
    assert saved['kind'] == 'free' and saved['version'] == 1
    assert saved['metrics'] == data['metrics']


def test_build_free_is_byte_identical(tmp_path, capsys):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    _, out_a = _run(capsys, *BUILD, '--out', str(first))
    _, out_b = _run(capsys, *BUILD, '--out', str(second))
    assert out_a == out_b
    assert first.read_bytes() == second.read_bytes()


def test_build_free_rejects_A3(capsys):
    code, _ = _run(capsys, 'build-free', '--diagram', 'A3', '--rounds', '1')
    assert code == EXIT_USAGE


def test_verify_free_state(free_state, capsys):
    code, out = _run(capsys, 'verify', '--state', str(free_state), '--properties', 'fpd')
    assert code == EXIT_OK
    report = _json(out)
    assert report['status'] == 'pass'
    assert [v['property'] for v in report['verdicts']] == ['F', 'P', 'D']


def test_verify_reports_failure(tmp_path, capsys):
    g = Geometry(["1", "2", "3"])
    g.add_vertex("1")
    g.add_vertex("3")
    path = tmp_path / "g.json"
    save_geometry(g, path)
    code, out = _run(capsys, 'verify', '--geometry', str(path), '--diagram', 'C3')
    assert code == EXIT_FAIL
    report = _json(out)
    assert report['status'] == 'fail'
    assert report['verdicts'][0]['property'] == 'F'


def test_verify_type_m(neumaier_file, capsys):
    code, out = _run(capsys, 'verify', '--geometry', str(neumaier_file), '--diagram', 'C3', '--properties', 'typeM')
    assert code == EXIT_OK
    assert _json(out)['verdicts'] == [{'property': 'typeM', 'status': 'pass'}]


def test_verify_needs_a_diagram(neumaier_file, capsys):
    code, _ = _run(capsys, 'verify', '--geometry', str(neumaier_file))
    assert code == EXIT_USAGE


def test_verify_cn_needs_a_cn_state(free_state, capsys):
    code, _ = _run(capsys, 'verify', '--state', str(free_state), '--properties', 'cn')
    assert code == EXIT_USAGE


def test_build_and_verify_cn(tmp_path, capsys):
    path = tmp_path / "cn.json"
    code, out = _run(
        capsys, 'build-cn', '--n', '3', '--m', '4', '--steps', '8', '--height', '1', '--limit', '10',
        '--out', str(path),
    )
    assert code == EXIT_OK
    data = _json(out)
    assert data['history'] == [0, 1, 0, 2, 0, 1, 0, 3]
    assert data['paths'] >= 1
    code, out = _run(capsys, 'verify', '--state', str(path), '--properties', 'cn', '--residue-sample', '5')
    assert code == EXIT_OK
    assert _json(out)['status'] == 'pass'
    code, out = _run(capsys, 'verify', '--state', str(path), '--properties', 'fpd')
    assert code in (EXIT_OK, EXIT_FAIL)
    code, out = _run(capsys, 'metrics', '--state', str(path))
    assert code == EXIT_OK
    assert _json(out)['step'] == 8


def test_build_cn_rejects_small_bond(capsys):
    code, _ = _run(capsys, 'build-cn', '--n', '3', '--m', '3', '--steps', '1')
    assert code == EXIT_USAGE


def test_residue(neumaier_file, capsys):
    code, out = _run(capsys, 'residue', '--geometry', str(neumaier_file), '--flag', '0', '--types', '2,3')
    assert code == EXIT_OK
    data = _json(out)
    assert data['flag'] == [0]
    assert (data['girth'], data['diameter'], data['components']) == (8, 4, 1)
    assert data['types'] == ["2", "3"]


def test_residue_of_a_non_flag(neumaier_file, capsys):
    code, _ = _run(capsys, 'residue', '--geometry', str(neumaier_file), '--flag', '0,1')
    assert code == EXIT_USAGE
    code, _ = _run(capsys, 'residue', '--geometry', str(neumaier_file), '--flag', 'a')
    assert code == EXIT_USAGE


def test_export(tmp_path, capsys):
    path = tmp_path / "fano.json"
    save_geometry(fano_flag_geometry(), path)
    code, out = _run(capsys, 'export', '--geometry', str(path))
    assert code == EXIT_OK
    assert out.startswith("graph geometry {\n")
    assert out.count(" -- ") == 21
    code, out = _run(capsys, 'export', '--geometry', str(path), '--format', 'json')
    data = _json(out)
    assert data['version'] == 1
    assert len(data['incidences']) == 21


def test_metrics_of_free_state(free_state, capsys):
    code, out = _run(capsys, 'metrics', '--state', str(free_state))
    assert code == EXIT_OK
    assert _json(out)['stage'] == 2


def test_fraisse_ap(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, out = _run(
        capsys, 'fraisse', 'ap', '--diagram', 'H3', '--samples', '2', '--size-bound', '10', '--seed', '3',
        '--out', str(out_path),
    )
    data = _json(out)
    assert data['hereditary_fail'] == 0
    assert code == (EXIT_OK if data['amalgamation_fail'] == 0 else EXIT_FAIL)
    assert json.loads(out_path.read_text())['family'] == 'H3'


def test_fraisse_ap_rejects_other_diagrams(capsys):
    code, _ = _run(capsys, 'fraisse', 'ap', '--diagram', 'C4', '--samples', '1')
    assert code == EXIT_USAGE


def test_fraisse_amalgamate(tmp_path, capsys):
    empty = tmp_path / "a.json"
    save_geometry(Geometry(["1", "2", "3"]), empty)
    b, c = _flag_file(tmp_path / "b.json"), _flag_file(tmp_path / "c.json")
    maps = tmp_path / "empty_map.json"
    write_json(maps, {'map': []})
    out_path = tmp_path / "amalgam.json"
    code, out = _run(
        capsys, 'fraisse', 'amalgamate', '--a', str(empty), '--b', str(b), '--c', str(c),
        '--iota', str(maps), '--kappa', str(maps), '--diagram', 'C3', '--out', str(out_path),
    )
    assert code == EXIT_OK
    data = _json(out)
    assert len(data['geometry']['incidences']) == 8
    assert data['mu'] == {'map': [[0, 3], [1, 4], [2, 5]]}
    assert out_path.exists()


def test_fraisse_amalgamate_reports_a_violation(tmp_path, capsys):
    a = Geometry(["1", "2", "3"])
    a.add_vertex("2")
    a.add_vertex("2")
    side = a.copy()
    plane = side.add_vertex("3")
    side.add_incidence(0, plane)
    side.add_incidence(1, plane)
    for name, g in (("a", a), ("b", side), ("c", side)):
        save_geometry(g, tmp_path / f"{name}.json")
    ident = tmp_path / "ident.json"
    write_json(ident, {'map': [[0, 0], [1, 1]]})
    code, out = _run(
        capsys, 'fraisse', 'amalgamate', '--a', str(tmp_path / "a.json"), '--b', str(tmp_path / "b.json"),
        '--c', str(tmp_path / "c.json"), '--iota', str(ident), '--kappa', str(ident), '--diagram', 'C3',
    )
    assert code == EXIT_FAIL
    data = _json(out)
    assert data['status'] == 'fail'
    assert data['verdict']['property'] == 'D'


def test_fraisse_amalgamate_rejects_inputs_outside_the_class(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    save_geometry(Geometry(["1", "2", "3"]), empty)
    digon = Geometry(["1", "2", "3"])
    lines = [digon.add_vertex("2") for _ in range(2)]
    planes = [digon.add_vertex("3") for _ in range(2)]
    for line in lines:
        for plane in planes:
            digon.add_incidence(line, plane)
    save_geometry(digon, tmp_path / "digon.json")
    maps = tmp_path / "empty_map.json"
    write_json(maps, {'map': []})
    code, out = _run(
        capsys, 'fraisse', 'amalgamate', '--a', str(empty), '--b', str(tmp_path / "digon.json"),
        '--c', str(empty), '--iota', str(maps), '--kappa', str(maps), '--diagram', 'C3',
        '--out', str(tmp_path / "amalgam.json"),
    )
    assert code == EXIT_USAGE
    data = _json(out)
    assert data['status'] == 'fail' and data['input'] == 'b'
    failed = {v['property'] for v in data['verdicts'] if v['status'] == 'fail'}
    assert 'D' in failed
    assert not (tmp_path / "amalgam.json").exists()


def test_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding='utf-8')
    assert _run(capsys, 'verify', '--geometry', str(bad), '--diagram', 'C3')[0] == EXIT_USAGE
    assert _run(capsys, 'build-free', '--diagram', 'E9')[0] == EXIT_USAGE
    assert _run(capsys, 'metrics', '--state', str(tmp_path / "absent.json"))[0] == EXIT_USAGE


def test_usage_errors_exit_with_two():
    with pytest.raises(SystemExit) as err:
        main(['build-free'])
    assert err.value.code == EXIT_USAGE
